#pragma once

#include <atomic>
#include <cstdint>
#include <map>
#include <mutex>
#include <optional>
#include <string>
#include <vector>

#include "quorum/gateway/backend.hpp"

namespace quorum::gateway {

/// Deterministic backend for tests and offline runs.
///
/// Reply for (agent, call_index) is the call_index-th line of that agent's
/// queue, or of the shared queue when the agent has no lines of its own. When
/// the queue is exhausted the backend either throws ScriptExhausted or, in
/// synthetic mode, plays a simple simulated coder seeded by
/// (rng_seed, agent, call_index). Replies never depend on thread timing.
class MockBackend : public ChatBackend {
 public:
  struct CallRecord {
    std::string agent_id;
    std::uint64_t call_index = 0;
    std::string prompt;  // last user message
  };

  MockBackend(std::vector<ScriptLine> script, std::uint64_t rng_seed = 0, bool synthetic = false,
              std::optional<TaskSpec> spec = std::nullopt);

  std::string complete(const ChatRequest& request) override;
  std::string backbone() const override { return "mock"; }

  std::uint64_t total_calls() const { return total_calls_.load(); }
  std::vector<CallRecord> call_log() const;

 private:
  std::string synthesize(const ChatRequest& request) const;

  std::map<std::string, std::vector<ScriptLine>> queues_;
  std::uint64_t rng_seed_;
  bool synthetic_;
  std::optional<TaskSpec> spec_;
  std::atomic<std::uint64_t> total_calls_{0};
  mutable std::mutex log_mutex_;
  std::vector<CallRecord> log_;
};

}  // namespace quorum::gateway
