#pragma once

#include <chrono>
#include <condition_variable>
#include <map>
#include <mutex>
#include <optional>
#include <string>
#include <vector>

#include "quorum/core.hpp"

namespace quorum {

enum class InterventionScope { None, Targeted, Extensive };
enum class InterventionRole { Collaborative, Directive };
enum class InterventionPhase { Discussion, Evolution };
enum class Disposition { Applied, Passed };

std::string_view to_string(InterventionScope v);
std::string_view to_string(InterventionRole v);
std::string_view to_string(InterventionPhase v);
std::string_view to_string(Disposition v);
InterventionScope intervention_scope_from_string(std::string_view text);
InterventionRole intervention_role_from_string(std::string_view text);
InterventionPhase intervention_phase_from_string(std::string_view text);
Disposition disposition_from_string(std::string_view text);

/// What the engine publishes at a checkpoint.
struct InterventionRequest {
  std::string request_id;
  InterventionPhase phase = InterventionPhase::Discussion;
  InterventionRole role = InterventionRole::Collaborative;
  std::string batch_id;
  std::string entry_id;  // empty for evolution checkpoints
  std::string entry_excerpt;
  int round = 0;
  int codebook_version = 0;
  json context = json::object();  // current verdicts or codebook proposal

  json to_json() const;
  static InterventionRequest from_json(const json& doc);
};

/// The expert's answer. `directive_labels` and `remove_rules` are the
/// machine-readable parts of a directive and are enforced by the engine.
struct InterventionResponse {
  InterventionRole role = InterventionRole::Collaborative;
  std::string text;
  std::optional<LabelAssignment> directive_labels;
  std::vector<std::string> remove_rules;
  std::optional<std::string> target;  // agent id; empty means every agent
  bool pass = false;

  static InterventionResponse passed(InterventionRole role);
};

/// Parses a submission body; `spec` validates directive_labels.
InterventionResponse intervention_response_from_json(const json& doc, const TaskSpec& spec);

struct InterventionRecord {
  std::string request_id;
  InterventionPhase phase = InterventionPhase::Discussion;
  InterventionRole role = InterventionRole::Collaborative;
  std::string expert_text;
  std::optional<std::string> target;
  std::string timestamp;
  Disposition disposition = Disposition::Passed;
  std::optional<LabelAssignment> directive_labels;
  std::vector<std::string> remove_rules;

  bool applies_to(const std::string& agent_id) const;
  json to_json(const TaskSpec& spec) const;
  static InterventionRecord from_json(const json& doc, const TaskSpec& spec);

  bool operator==(const InterventionRecord&) const = default;
};

/// Wraps expert text in the collaborative or directive template.
std::string intervention_wrapper(const InterventionRecord& record);

class QueueClosed : public std::runtime_error {
 public:
  QueueClosed() : std::runtime_error("intervention queue closed") {}
};

/// Where the engine sends checkpoints. request() blocks until resolved.
class InterventionChannel {
 public:
  virtual ~InterventionChannel() = default;
  virtual InterventionResponse request(const InterventionRequest& request) = 0;
};

class AutoPassChannel : public InterventionChannel {
 public:
  InterventionResponse request(const InterventionRequest& request) override {
    return InterventionResponse::passed(request.role);
  }
};

/// Canned responses selected by phase / batch / entry / round filters; the
/// first matching rule answers, otherwise the checkpoint is passed.
class ScriptedChannel : public InterventionChannel {
 public:
  struct Rule {
    std::optional<InterventionPhase> phase;
    std::optional<std::string> batch_id;
    std::optional<std::string> entry_id;
    std::optional<int> round;
    InterventionResponse response;
  };

  explicit ScriptedChannel(std::vector<Rule> rules) : rules_(std::move(rules)) {}
  InterventionResponse request(const InterventionRequest& request) override;

  static std::vector<Rule> rules_from_json(const json& doc, const TaskSpec& spec, InterventionRole role);

 private:
  std::vector<Rule> rules_;
};

enum class WaitPolicy { Interactive, Headless };
std::string_view to_string(WaitPolicy v);
WaitPolicy wait_policy_from_string(std::string_view text);

/// Rendezvous between the engine (one consumer) and HTTP submitters. Holds at
/// most one pending request. Interactive waits indefinitely; headless passes
/// after the timeout (default 0 s).
class InterventionQueue : public InterventionChannel {
 public:
  enum class SubmitStatus { Accepted, Replayed, Conflict, NotFound, RoleMismatch };

  InterventionQueue(InterventionRole role, WaitPolicy policy,
                    std::chrono::milliseconds headless_timeout = std::chrono::milliseconds(0));

  InterventionResponse request(const InterventionRequest& request) override;

  std::optional<InterventionRequest> pending() const;
  /// `body` identifies the submission for idempotent replays.
  SubmitStatus submit(const std::string& request_id, const InterventionResponse& response,
                      const std::string& body);
  void close();

 private:
  InterventionRole role_;
  WaitPolicy policy_;
  std::chrono::milliseconds timeout_;
  mutable std::mutex mutex_;
  std::condition_variable cv_;
  std::optional<InterventionRequest> pending_;
  std::optional<InterventionResponse> answer_;
  std::map<std::string, std::string> resolved_;  // request id -> accepted body
  bool closed_ = false;
};

}  // namespace quorum
