#include "quorum/gateway/session.hpp"

#include "quorum/gateway/prompts.hpp"

namespace quorum::gateway {

AgentSession::AgentSession(std::string agent_id, Persona persona, Sampling sampling,
                           std::uint64_t first_call_index)
    : agent_id_(std::move(agent_id)),
      persona_(std::move(persona)),
      sampling_(sampling),
      call_index_(first_call_index) {
  history_ = render_prompt(templates::kPersona, {{"PERSONA", persona_.system_prompt}});
}

// Consecutive user messages are folded into one turn so roles keep alternating.
Messages AgentSession::with_prompt(const Messages& new_messages) const {
  Messages out = history_;
  for (const auto& m : new_messages) {
    if (m.role == Role::User && out.back().role == Role::User) {
      out.back().content += "\n\n" + m.content;
    } else {
      out.push_back(m);
    }
  }
  return out;
}

std::string AgentSession::complete(ChatBackend& backend, const Messages& new_messages) {
  ChatRequest request{agent_id_, call_index_, with_prompt(new_messages), sampling_};
  auto reply = backend.complete(request);
  ++call_index_;
  history_ = std::move(request.messages);
  history_.push_back({Role::Assistant, reply});
  return reply;
}

std::vector<std::string> AgentSession::sample(ChatBackend& backend, const Messages& new_messages,
                                              int count) {
  const auto messages = with_prompt(new_messages);
  std::vector<std::string> replies;
  replies.reserve(static_cast<std::size_t>(count));
  for (int i = 0; i < count; ++i) {
    replies.push_back(backend.complete({agent_id_, call_index_, messages, sampling_}));
    ++call_index_;
  }
  return replies;
}

void AgentSession::commit(const Messages& new_messages, std::string reply) {
  history_ = with_prompt(new_messages);
  history_.push_back({Role::Assistant, std::move(reply)});
}

}  // namespace quorum::gateway
