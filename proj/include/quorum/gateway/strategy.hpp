#pragma once

#include <optional>
#include <string>
#include <vector>

#include "quorum/core.hpp"
#include "quorum/gateway/session.hpp"
#include "quorum/verdict_parser.hpp"

namespace quorum::gateway {

struct Strategy {
  enum class Kind { Vanilla, CoT, ToT, SelfConsistency };
  Kind kind = Kind::Vanilla;
  int samples = 3;  // SelfConsistency only

  /// "Vanilla", "CoT", "ToT" or "SelfConsistency(m)".
  std::string name() const;
  /// Accepts the forms name() produces; "SelfConsistency" alone means m = 3.
  static Strategy parse(std::string_view text);

  bool operator==(const Strategy&) const = default;
};

/// Appends the CoT / ToT suffix to the last user message; other strategies
/// return the prompt unchanged.
Messages apply_strategy_suffix(const Strategy& strategy, Messages prompt);

struct VoteTally {
  LabelAssignment labels;
  int votes = 0;
  std::size_t first_sample = 0;
};

struct VoteResult {
  std::size_t winner_sample = 0;  // index of the first sample carrying the winning labels
  LabelAssignment labels;
  std::vector<VoteTally> tally;  // in order of first appearance
};

/// Plurality over whole assignments; ties go to the assignment seen first.
/// Unparseable samples (nullopt) do not vote. Returns nullopt if none parsed.
std::optional<VoteResult> majority_vote(const std::vector<std::optional<LabelAssignment>>& samples);

/// Raised when an answer stays unparseable after the format reminder.
class VerdictUnparseable : public std::runtime_error {
 public:
  VerdictUnparseable(ParseFailure failure, std::string last_reply)
      : std::runtime_error("unparseable verdict: " + failure.message()),
        failure_(std::move(failure)),
        last_reply_(std::move(last_reply)) {}
  const ParseFailure& failure() const { return failure_; }
  const std::string& last_reply() const { return last_reply_; }

 private:
  ParseFailure failure_;
  std::string last_reply_;
};

struct StrategyResult {
  LabelAssignment labels;
  std::string rationale;
  int calls = 0;
};

/// Sends `prompt` through the session under `strategy` and parses a verdict.
/// A failed parse triggers one format reminder; a second failure throws
/// VerdictUnparseable. SelfConsistency draws `samples` replies, votes, and
/// commits the winning reply to the history.
StrategyResult run_strategy(const Strategy& strategy, AgentSession& session, ChatBackend& backend,
                            const Messages& prompt, const TaskSpec& spec);

/// Vanilla completion plus the reminder retry; used by discussion rounds.
StrategyResult complete_and_parse(AgentSession& session, ChatBackend& backend, const Messages& prompt,
                                  const TaskSpec& spec);

std::string render_vote_rationale(const std::vector<std::string>& samples,
                                  const std::vector<std::optional<LabelAssignment>>& parsed,
                                  const VoteResult& vote, const TaskSpec& spec);

}  // namespace quorum::gateway
