#pragma once

#include <map>
#include <optional>
#include <string>
#include <vector>

#include "quorum/annotation.hpp"
#include "quorum/discussion.hpp"
#include "quorum/events.hpp"
#include "quorum/metrics.hpp"

namespace quorum {

enum class RunStatus { Running, AwaitingIntervention, Completed, Failed };
std::string_view to_string(RunStatus s);

struct BatchRecord {
  std::string batch_id;
  int index = 0;
  std::vector<std::string> entry_ids;
  int codebook_version = 0;  // version used for coding
  std::optional<AnnotationMatrix> matrix;
  std::map<std::string, DiscussionOutcome> outcomes;  // by entry id
  std::optional<int> evolved_to;
  bool forced_merge = false;
  std::string change_kind = "none";
  std::optional<BatchMetrics> metrics;
  json call_counters = json::object();
  bool completed = false;

  /// Outcomes in batch order.
  std::vector<DiscussionOutcome> ordered_outcomes() const;

  bool operator==(const BatchRecord&) const = default;
};

/// State of one run, rebuilt by folding its event log.
struct RunRecord {
  std::string run_id;
  json config;
  std::optional<TaskSpec> spec;
  RunStatus status = RunStatus::Running;
  std::vector<BatchRecord> batches;
  std::vector<int> codebook_versions;
  int codebook_version = 0;
  std::optional<RunMetrics> metrics;
  std::string error;
  std::uint64_t last_seq = 0;
  json pending_intervention = nullptr;
  std::vector<std::string> warnings;

  /// Folds one event; events must arrive in seq order.
  void apply_event(const Event& event);
  static RunRecord replay(const std::vector<Event>& events);

  std::vector<DiscussionOutcome> outcomes() const;
  bool finished() const { return status == RunStatus::Completed || status == RunStatus::Failed; }

  /// Snapshot served by the HTTP API.
  json to_json() const;

  bool operator==(const RunRecord&) const = default;
};

}  // namespace quorum
