#pragma once

#include <chrono>
#include <cstdint>
#include <filesystem>
#include <memory>
#include <optional>
#include <stdexcept>
#include <string>
#include <variant>
#include <vector>

#include "quorum/core.hpp"
#include "quorum/gateway/message.hpp"

namespace quorum::gateway {

class GatewayError : public std::runtime_error {
 public:
  enum class Kind {
    BackendUnavailable,
    RateLimited,
    Timeout,
    ScriptExhausted,
    ScriptMismatch,
    AllSamplesUnparseable,
  };

  GatewayError(Kind kind, const std::string& message);
  Kind kind() const { return kind_; }

 private:
  Kind kind_;
};

std::string_view to_string(GatewayError::Kind kind);

struct Sampling {
  double temperature = 0.7;
  std::optional<std::uint64_t> seed;
  int max_tokens = 2048;

  bool operator==(const Sampling&) const = default;
};

struct ChatRequest {
  std::string agent_id;
  std::uint64_t call_index = 0;  // how many calls this agent made before this one
  Messages messages;
  Sampling sampling;
};

/// A chat-completion backend. Implementations must be safe to call from
/// several sessions concurrently.
class ChatBackend {
 public:
  virtual ~ChatBackend() = default;
  virtual std::string complete(const ChatRequest& request) = 0;
  /// Short identifier of the model behind the backend (CSV "backbone" column).
  virtual std::string backbone() const = 0;
};

/// One mock reply. `agent` routes the line to that agent's queue; lines
/// without it form the shared queue used by agents that have none.
struct ScriptLine {
  std::optional<std::string> agent;
  std::optional<std::string> match;  // must occur in the last user message
  std::string reply;

  bool operator==(const ScriptLine&) const = default;
};

struct OpenAiCompatible {
  std::string base_url;
  std::string model_id;
  std::string api_key_env;
  std::chrono::milliseconds timeout{120'000};
  int max_in_flight = 4;
  int max_retries = 3;
  std::chrono::milliseconds initial_backoff{1'000};
  double temperature = 0.7;

  bool operator==(const OpenAiCompatible&) const = default;
};

struct ScriptedMock {
  std::optional<std::filesystem::path> script_path;
  std::vector<ScriptLine> inline_script;
  std::uint64_t rng_seed = 0;
  bool synthetic = false;  // generate replies once the script runs out

  bool operator==(const ScriptedMock&) const = default;
};

using BackendDescriptor = std::variant<OpenAiCompatible, ScriptedMock>;

/// Parses a mock script in JSON Lines form: {"agent"?, "match"?, "reply"}.
std::vector<ScriptLine> parse_script(const std::string& jsonl);

BackendDescriptor backend_from_json(const json& doc, const std::filesystem::path& base_dir);
json backend_to_json(const BackendDescriptor& descriptor);

/// `run_seed` perturbs the mock's generator so repeated runs differ.
std::unique_ptr<ChatBackend> make_backend(const BackendDescriptor& descriptor, const TaskSpec& spec,
                                          std::uint64_t run_seed);

}  // namespace quorum::gateway
