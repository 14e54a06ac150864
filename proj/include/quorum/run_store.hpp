#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "quorum/codebook.hpp"
#include "quorum/events.hpp"
#include "quorum/run_record.hpp"

namespace quorum {

class NotFound : public DomainError {
 public:
  explicit NotFound(const std::string& what) : DomainError("NotFound(" + what + ")") {}
};

class CorruptLog : public DomainError {
 public:
  CorruptLog(std::size_t line, const std::string& message)
      : DomainError("CorruptLog(line " + std::to_string(line) + "): " + message), line_(line) {}
  std::size_t line() const { return line_; }

 private:
  std::size_t line_;
};

/// On-disk layout: {root}/{run_id}/config.json, events.jsonl,
/// codebook_v{n}.json and metrics.csv. Whole-file writes are atomic.
class RunStore {
 public:
  explicit RunStore(std::filesystem::path root);

  const std::filesystem::path& root() const { return root_; }
  std::filesystem::path run_dir(const std::string& run_id) const;
  std::filesystem::path events_path(const std::string& run_id) const;
  bool exists(const std::string& run_id) const;
  std::vector<std::string> list_runs() const;

  /// `base` if unused, otherwise base-2, base-3, ...
  std::string unique_run_id(const std::string& base) const;

  /// Creates the run directory with its config and an empty event log.
  void create(const std::string& run_id, const json& config);
  json read_config(const std::string& run_id) const;

  void write_codebook(const std::string& run_id, const Codebook& codebook);
  Codebook read_codebook(const std::string& run_id, int version) const;
  std::vector<int> codebook_versions(const std::string& run_id) const;
  void remove_codebooks_after(const std::string& run_id, int version);

  /// Reads the log. A final line cut short by a crash is dropped; any other
  /// malformed line or sequence gap raises CorruptLog.
  std::vector<Event> read_events(const std::string& run_id) const;
  void rewrite_events(const std::string& run_id, const std::vector<Event>& events);

  void write_metrics_csv(const std::string& run_id, const std::string& csv);

  RunRecord load(const std::string& run_id) const;

 private:
  std::filesystem::path root_;
};

}  // namespace quorum
