#pragma once

#include <optional>
#include <string>
#include <vector>

#include "quorum/codebook.hpp"
#include "quorum/discussion.hpp"
#include "quorum/events.hpp"
#include "quorum/gateway/session.hpp"

namespace quorum {

inline constexpr std::string_view kMediatorId = "mediator";

struct CodebookDraft {
  std::string author;  // agent id or "mediator"
  int base_version = 0;
  std::vector<Rule> rules;
  std::string change_note;  // the reply text
  bool unchanged = true;
  bool extraction_failed = false;

  json to_json() const;
};

/// One field of one rule that differs between two codebook versions.
struct RuleChange {
  std::string rule_id;
  std::string field;  // label, label_code, description, examples, clarifications
  json before;
  json after;

  bool operator==(const RuleChange&) const = default;
};

struct CodebookDiff {
  int from_version = 0;
  int to_version = 0;
  std::vector<Rule> added;
  std::vector<std::string> removed;
  std::vector<RuleChange> modified;
  int examples_added = 0;          // new example strings on rules present in both versions
  std::vector<std::string> order;  // rule ids of the target, in order
  Provenance provenance = Provenance::Seeded;

  /// True when the rule lists are identical (versions may still differ).
  bool empty() const;
  /// One line per change, e.g. "+6 examples" and "~ positive.description".
  std::string summary() const;

  json to_json() const;
  static CodebookDiff from_json(const json& doc);

  bool operator==(const CodebookDiff&) const = default;
};

/// Field-level diff keyed by rule id.
CodebookDiff diff(const Codebook& base, const Codebook& next);
/// Reconstructs `next` from `base`; apply(diff(a, b), a) == b.
Codebook apply(const CodebookDiff& d, const Codebook& base);

struct EvolutionContext {
  const TaskSpec& spec;
  gateway::ChatBackend& backend;
  std::vector<gateway::AgentSession>& sessions;  // agent order, carrying the batch transcript
  gateway::AgentSession& mediator;
  int max_rounds = 3;
  InterventionPolicy policy;
  EventLog* events = nullptr;
  std::string batch_id;
};

struct EvolutionResult {
  Codebook codebook;
  bool changed = false;
  bool forced_merge = false;
  int ratification_rounds = 0;
  std::string change_kind;  // "none", "enrich" or "structural"
  std::vector<CodebookDraft> drafts;
  std::vector<std::string> proposals;  // mediator replies
  std::vector<InterventionRecord> interventions;
  std::vector<std::string> warnings;
};

/// Asks every agent for an updated codebook.
std::vector<CodebookDraft> propose_drafts(EvolutionContext& ctx, const Codebook& codebook);

/// Mediator merge and ratification. All drafts unchanged returns the input
/// codebook untouched; otherwise the adopted codebook gets version + 1 when its
/// rendering differs from the input.
EvolutionResult mediate(EvolutionContext& ctx, std::vector<CodebookDraft> drafts, const Codebook& codebook);

/// propose_drafts then mediate; backend and extraction errors degrade to a
/// no-op with a warning.
EvolutionResult evolve_codebook(EvolutionContext& ctx, const Codebook& codebook);

/// Reads an agent's ratification reply: {"AGREE": "yes"|"no"} when present,
/// otherwise agree/disagree wording.
bool parse_agreement(std::string_view reply);

/// "enrich" when only examples or clarifications changed, "structural" when
/// rules were added, removed, relabeled or redescribed, "none" otherwise.
std::string classify_change(const CodebookDiff& d);

}  // namespace quorum
