#pragma once

#include <optional>
#include <string>
#include <vector>

#include "quorum/core.hpp"
#include "quorum/events.hpp"
#include "quorum/gateway/session.hpp"
#include "quorum/intervention.hpp"

namespace quorum {

enum class Resolution { PreAgreed, Converged, MajorityFallback, FirstAgentFallback, Failed };

std::string_view to_string(Resolution r);
Resolution resolution_from_string(std::string_view text);

struct DiscussionRound {
  int round_no = 0;
  std::vector<Verdict> verdicts;  // agent order
  bool judge_result = false;
  std::vector<InterventionRecord> interventions;
  std::vector<std::string> overrides;  // agents whose labels a directive replaced

  bool operator==(const DiscussionRound&) const = default;
};

struct DiscussionOutcome {
  std::string entry_id;
  std::vector<Verdict> initial;  // round 0, agent order
  std::vector<DiscussionRound> rounds;
  bool converged = false;
  std::optional<LabelAssignment> final_labels;  // empty only when every agent failed
  Resolution resolution = Resolution::PreAgreed;
  int converged_round = 0;  // set for Converged
  int calls = 0;            // gateway calls spent on this entry

  /// Latest verdict of every agent (last round, or round 0).
  const std::vector<Verdict>& final_verdicts() const;

  json to_json(const TaskSpec& spec) const;
  static DiscussionOutcome from_json(const json& doc, const TaskSpec& spec);

  bool operator==(const DiscussionOutcome&) const = default;
};

/// Where and how an expert may step in.
struct InterventionPolicy {
  InterventionScope scope = InterventionScope::None;
  InterventionRole role = InterventionRole::Collaborative;
  InterventionChannel* channel = nullptr;

  bool in_discussion() const { return scope != InterventionScope::None && channel != nullptr; }
  bool in_evolution() const { return scope == InterventionScope::Extensive && channel != nullptr; }
};

struct DiscussionContext {
  const TaskSpec& spec;
  gateway::ChatBackend& backend;
  std::vector<gateway::AgentSession>& sessions;  // agent order
  int max_rounds = 3;
  InterventionPolicy policy;
  EventLog* events = nullptr;
  std::string batch_id;
  int codebook_version = 0;
  std::size_t peer_char_budget = 6000;
};

/// Unanimity: every verdict parsed and all label sets are equal.
bool judge(const std::vector<Verdict>& verdicts);

/// Label recorded when discussion ends without unanimity: a strict majority
/// of identical assignments, else the lowest-index agent that has labels.
std::optional<LabelAssignment> fallback_labels(const std::vector<Verdict>& verdicts, Resolution& resolution);

/// Keeps the head and tail of `text` within `budget` bytes, marking the cut.
/// Never splits a UTF-8 sequence.
std::string truncate_middle(const std::string& text, std::size_t budget);

/// Runs up to max_rounds discussion rounds on one entry. `round0` holds every
/// agent's initial verdict in agent order.
DiscussionOutcome discuss_entry(const TextEntry& entry, const std::vector<Verdict>& round0,
                                DiscussionContext& ctx);

}  // namespace quorum
