#pragma once

#include <map>
#include <set>
#include <string>
#include <vector>

#include "quorum/codebook.hpp"
#include "quorum/core.hpp"
#include "quorum/gateway/session.hpp"
#include "quorum/gateway/strategy.hpp"

namespace quorum {

/// Round-0 verdicts of every agent on every entry of one batch.
struct AnnotationMatrix {
  std::string batch_id;
  std::vector<std::string> entries;  // entry ids in batch order
  std::vector<std::string> agents;   // agent ids in configured order
  std::map<std::string, std::map<std::string, Verdict>> verdicts;  // agent -> entry -> verdict
  int codebook_version = 0;

  const Verdict& cell(const std::string& agent_id, const std::string& entry_id) const;
  /// The entry's verdicts in agent order.
  std::vector<Verdict> row(const std::string& entry_id) const;

  json to_json(const TaskSpec& spec) const;
  static AnnotationMatrix from_json(const json& doc, const TaskSpec& spec);

  bool operator==(const AnnotationMatrix&) const = default;
};

struct AnnotationOptions {
  gateway::Strategy strategy;
  bool per_entry = false;  // one prompt per entry instead of one per batch
};

/// "TEXT: n. text" lines, one per entry, separated by blank lines.
std::string render_batch(const std::vector<TextEntry>& batch);

/// Engine-added line that tells agents which JSON keys and codes to answer with.
std::string answer_format_line(const TaskSpec& spec);

/// Codes `batch` with every session concurrently. Each agent sees only the
/// persona, codebook and batch. Cells that stay unparseable after the format
/// reminder are recorded as failed verdicts; backend errors propagate.
AnnotationMatrix annotate_batch(std::vector<gateway::AgentSession>& sessions, gateway::ChatBackend& backend,
                                const std::vector<TextEntry>& batch, const Codebook& codebook,
                                const TaskSpec& spec, const AnnotationOptions& options,
                                const std::string& batch_id);

/// Entries on which every agent produced the same labels; failed cells never concur.
std::set<std::string> pre_agreement_set(const AnnotationMatrix& matrix);

}  // namespace quorum
