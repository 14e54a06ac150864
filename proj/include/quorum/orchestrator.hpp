#pragma once

#include <functional>
#include <memory>
#include <string>
#include <vector>

#include "quorum/dataset.hpp"
#include "quorum/run_config.hpp"
#include "quorum/run_record.hpp"
#include "quorum/run_store.hpp"

namespace quorum {

struct PipelineHooks {
  /// Answers intervention checkpoints when the config has no scripted responses.
  InterventionChannel* channel = nullptr;
  /// Called once the run id and event log exist, before the first event.
  std::function<void(const std::string& run_id, EventLog& log)> on_start;
  /// Replaces the backend built from the config (tests).
  std::shared_ptr<gateway::ChatBackend> backend;
};

/// Splits in corpus order; the last batch may be smaller.
std::vector<std::vector<TextEntry>> split_batches(const std::vector<TextEntry>& entries, std::size_t batch_size);

/// "task-xxxxxxxx" with a hash of the configuration.
std::string default_run_id(const RunConfig& config);

std::string backbone_name(const gateway::BackendDescriptor& backend);

/// One run: batches of annotate, discuss, evolve, persisted under config.store.
/// Phase errors end the run with status Failed; configuration and dataset
/// errors are thrown before anything is written.
RunRecord run_pipeline(const RunConfig& config, const PipelineHooks& hooks = {});

/// Continues a run from its last completed batch.
RunRecord resume_run(const std::filesystem::path& store_root, const std::string& run_id,
                     const PipelineHooks& hooks = {});

/// config.runs repetitions with seeds seed, seed+1, ...
std::vector<RunRecord> run_repeated(const RunConfig& config, const PipelineHooks& hooks = {});

/// CSV rows (one per verdict key) aggregated over completed records of one configuration.
std::vector<CsvRow> records_csv_rows(const RunConfig& config, const std::vector<RunRecord>& records);

enum class SweepAxis { B, K, N };
SweepAxis sweep_axis_from_string(std::string_view text);

struct SweepResult {
  std::vector<CsvRow> rows;
  std::vector<std::string> run_ids;
  std::string csv() const { return render_csv(rows); }
};

/// Varies one parameter, keeping the others fixed; config.runs repetitions per value.
SweepResult sweep(const RunConfig& base, SweepAxis axis, const std::vector<int>& values,
                  const PipelineHooks& hooks = {});

}  // namespace quorum
