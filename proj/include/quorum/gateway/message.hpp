#pragma once

#include <string>
#include <string_view>
#include <vector>

namespace quorum::gateway {

enum class Role { System, User, Assistant };

std::string_view to_string(Role role);
Role role_from_string(std::string_view text);

struct Message {
  Role role = Role::User;
  std::string content;

  bool operator==(const Message&) const = default;
};

using Messages = std::vector<Message>;

/// Content of the last user message, or empty.
std::string last_user_content(const Messages& messages);

}  // namespace quorum::gateway
