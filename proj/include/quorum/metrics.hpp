#pragma once

#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "quorum/annotation.hpp"
#include "quorum/core.hpp"
#include "quorum/discussion.hpp"

namespace quorum {

class MissingGold : public DomainError {
 public:
  explicit MissingGold(std::string entry_id)
      : DomainError("MissingGold(" + entry_id + ")"), entry_id_(std::move(entry_id)) {}
  const std::string& entry_id() const { return entry_id_; }

 private:
  std::string entry_id_;
};

class EmptyBatch : public DomainError {
 public:
  EmptyBatch() : DomainError("EmptyBatch") {}
};

/// Final label per entry id; nullopt marks an entry that failed and scores 0.
using FinalLabels = std::map<std::string, std::optional<LabelAssignment>>;

/// Share of entries whose labels equal gold on every key.
double multiclass_accuracy(const FinalLabels& final, const std::vector<TextEntry>& entries, const TaskSpec& spec);

/// Mean over entries of 1 - mean over keys of |pred xor gold| / num_classes(key).
double multilabel_accuracy(const FinalLabels& final, const std::vector<TextEntry>& entries, const TaskSpec& spec);

/// 1 - |pred xor gold| / num_classes for one key of one entry.
double key_score(const std::set<std::string>& pred, const std::set<std::string>& gold, std::size_t num_classes);

/// Accuracy of one key: exact match for multi-class keys, 1 - Hamming loss for multi-label keys.
double key_accuracy(const FinalLabels& final, const std::vector<TextEntry>& entries, const TaskSpec& spec,
                    const std::string& key);

struct AgreementRates {
  double pre_ar = 0;
  double post_ar = 0;
  double delta_ar = 0;

  bool operator==(const AgreementRates&) const = default;
};

AgreementRates agreement_rates(std::size_t b_before, std::size_t b_after, std::size_t b);
AgreementRates agreement_rates(const std::set<std::string>& pre, const std::set<std::string>& post, std::size_t b);

struct KeyMetrics {
  std::string key;
  std::size_t b_before = 0;
  std::size_t b_after = 0;
  AgreementRates rates;
  std::optional<double> acc_pre;
  std::optional<double> acc_post;

  bool operator==(const KeyMetrics&) const = default;
};

struct BatchMetrics {
  std::string batch_id;
  std::size_t b = 0;
  std::size_t b_before = 0;
  std::size_t b_after = 0;
  AgreementRates rates;
  std::optional<double> acc_pre;   // all keys exact / Hamming, by task kind
  std::optional<double> acc_post;
  std::vector<KeyMetrics> keys;

  json to_json() const;
  static BatchMetrics from_json(const json& doc);
  bool operator==(const BatchMetrics&) const = default;
};

/// Batch-level metrics pooled over a run (entry-weighted).
struct RunMetrics {
  std::vector<BatchMetrics> batches;
  BatchMetrics total;

  json to_json() const;
  static RunMetrics from_json(const json& doc);
  bool operator==(const RunMetrics&) const = default;
};

/// Label assumed before discussion: the fallback rule applied to round 0.
std::optional<LabelAssignment> pre_discussion_label(const std::vector<Verdict>& round0);

/// Metrics for one batch. Gold-based fields stay empty unless every entry has gold.
BatchMetrics batch_metrics(const AnnotationMatrix& matrix, const std::vector<DiscussionOutcome>& outcomes,
                           const std::vector<TextEntry>& batch, const TaskSpec& spec);

/// Pools batches: sums counts and recomputes rates and accuracies over all
/// entries. `outcomes` holds one outcome per entry of `entries`.
RunMetrics run_metrics(std::vector<BatchMetrics> batches, const std::vector<TextEntry>& entries,
                       const std::vector<DiscussionOutcome>& outcomes, const TaskSpec& spec);

struct Aggregate {
  double mean = 0;
  double std = 0;  // sample standard deviation, 0 for one sample
  double min = 0;
  double max = 0;
  std::size_t n = 0;
};

Aggregate aggregate_runs(const std::vector<double>& samples);

struct CsvRow {
  std::string task;
  std::string backbone;
  std::string strategy;
  int n = 0;
  int b = 0;
  int k = 0;
  double pre_ar = 0;
  double post_ar = 0;
  double delta_ar = 0;
  std::optional<double> acc_pre;
  std::optional<double> acc_post;
  int runs = 0;
};

inline constexpr std::string_view kCsvHeader =
    "task,backbone,strategy,N,B,K,pre_ar,post_ar,delta_ar,acc_pre,acc_post,runs";

/// One row per verdict key, averaging each column over `runs`. Single-key
/// tasks are named by task id alone, others as "task-KEY".
std::vector<CsvRow> csv_rows(const TaskSpec& spec, const std::string& backbone, const std::string& strategy,
                             int n, int b, int k, const std::vector<RunMetrics>& runs);
std::string render_csv(const std::vector<CsvRow>& rows);

}  // namespace quorum
