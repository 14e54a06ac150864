#pragma once

#include <chrono>
#include <filesystem>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "quorum/orchestrator.hpp"

namespace quorum {

/// Runs owned by one process: started in background threads (HTTP) or in the
/// foreground (CLI), observable while they execute and afterwards from the store.
class RunManager {
 public:
  explicit RunManager(std::filesystem::path store);
  ~RunManager();
  RunManager(const RunManager&) = delete;
  RunManager& operator=(const RunManager&) = delete;

  const std::filesystem::path& store() const { return store_; }

  /// Starts a run in a background thread and returns its id.
  std::string start(RunConfig config);
  /// Runs in the calling thread while keeping the run observable.
  RunRecord run_foreground(RunConfig config);

  bool known(const std::string& run_id) const;
  std::vector<std::string> list() const;
  /// RunRecord snapshot plus the pending intervention, if any.
  std::optional<json> snapshot(const std::string& run_id) const;

  struct EventBatch {
    std::vector<Event> events;
    bool finished = false;  // no event will follow the returned ones
  };
  /// Events with seq > after, waiting up to `timeout` for the first one.
  std::optional<EventBatch> wait_events(const std::string& run_id, std::uint64_t after,
                                        std::chrono::milliseconds timeout) const;

  /// The pending request of a live run (nullopt: unknown run; null json: nothing pending).
  std::optional<json> pending(const std::string& run_id) const;

  enum class SubmitResult { Accepted, Replayed, Conflict, NotFound, RoleMismatch, RunNotFound, Invalid };
  SubmitResult submit(const std::string& run_id, const std::string& request_id, const std::string& body,
                      std::string& error);

  std::optional<TaskSpec> task_of(const std::string& run_id) const;

  /// Blocks until every background run has finished.
  void wait_all();
  /// Unblocks runs waiting on interventions and joins their threads.
  void shutdown();

 private:
  struct LiveRun;
  std::shared_ptr<LiveRun> find(const std::string& run_id) const;
  std::shared_ptr<LiveRun> prepare(RunConfig& config);
  static void execute(const std::shared_ptr<LiveRun>& live, const RunConfig& config);

  std::filesystem::path store_;
  mutable std::mutex mutex_;
  std::map<std::string, std::shared_ptr<LiveRun>> live_;
};

struct ServiceOptions {
  std::optional<std::filesystem::path> static_dir;
  std::string token;  // bearer token; empty disables auth
  std::string cors_origin = "*";
  std::chrono::milliseconds keepalive{15000};
};

/// Bearer token read from QUORUM_API_TOKEN, empty when unset.
std::string token_from_env();

/// HTTP API over a RunManager.
class Service {
 public:
  Service(RunManager& manager, ServiceOptions options);
  ~Service();

  /// Binds without serving; port 0 picks a free port. Returns the bound port or -1.
  int bind(const std::string& host, int port);
  /// Serves on the bound socket until stop().
  void listen_after_bind();
  /// bind + listen_after_bind in a background thread.
  int start_background(const std::string& host, int port);
  void stop();

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

}  // namespace quorum
