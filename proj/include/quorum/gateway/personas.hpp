#pragma once

#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace quorum::gateway {

struct Persona {
  std::string persona_id;
  std::string display_name;
  std::string system_prompt;

  bool operator==(const Persona&) const = default;
};

/// The five shipped social-scientist personas, in a fixed order.
const std::vector<Persona>& builtin_personas();

std::optional<Persona> find_builtin_persona(std::string_view persona_id);

/// Persona for mediator sessions: neutral, no social-scientist identity.
Persona mediator_persona();

}  // namespace quorum::gateway
