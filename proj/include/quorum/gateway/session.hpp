#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "quorum/gateway/backend.hpp"
#include "quorum/gateway/personas.hpp"

namespace quorum::gateway {

/// One agent's conversation. History starts with the persona system message;
/// after it, user and assistant turns alternate. Calls on one session are
/// strictly sequential; distinct sessions may run concurrently.
class AgentSession {
 public:
  AgentSession(std::string agent_id, Persona persona, Sampling sampling = {},
               std::uint64_t first_call_index = 0);

  const std::string& agent_id() const { return agent_id_; }
  const Persona& persona() const { return persona_; }
  const Messages& history() const { return history_; }
  const Sampling& sampling() const { return sampling_; }
  /// Index the next backend call will carry; continues across sessions of the same agent.
  std::uint64_t call_index() const { return call_index_; }

  /// Appends `new_messages` and the backend reply to the history; returns the reply.
  std::string complete(ChatBackend& backend, const Messages& new_messages);

  /// Draws `count` independent replies to the same prompt without touching
  /// the history; follow with commit().
  std::vector<std::string> sample(ChatBackend& backend, const Messages& new_messages, int count);

  void commit(const Messages& new_messages, std::string reply);

 private:
  Messages with_prompt(const Messages& new_messages) const;

  std::string agent_id_;
  Persona persona_;
  Sampling sampling_;
  std::uint64_t call_index_;
  Messages history_;
};

}  // namespace quorum::gateway
