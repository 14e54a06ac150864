#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "quorum/codebook.hpp"
#include "quorum/core.hpp"
#include "quorum/gateway/backend.hpp"
#include "quorum/gateway/personas.hpp"
#include "quorum/gateway/strategy.hpp"
#include "quorum/intervention.hpp"

namespace quorum {

/// Invalid configuration; `field` is a JSON-pointer-like path such as "/agents/1".
class ConfigInvalid : public DomainError {
 public:
  ConfigInvalid(std::string field, const std::string& message)
      : DomainError(field + ": " + message), field_(std::move(field)) {}
  const std::string& field() const { return field_; }

 private:
  std::string field_;
};

struct AgentSpec {
  std::string agent_id;
  gateway::Persona persona;

  bool operator==(const AgentSpec&) const = default;
};

struct InterventionConfig {
  InterventionScope scope = InterventionScope::None;
  InterventionRole role = InterventionRole::Collaborative;
  WaitPolicy wait = WaitPolicy::Headless;
  std::chrono::milliseconds timeout{0};  // headless wait before passing
  json scripted = nullptr;               // canned responses, see ScriptedChannel

  bool operator==(const InterventionConfig&) const = default;
};

/// Fully resolved run configuration; relative paths in the source file are
/// resolved against the file's directory.
struct RunConfig {
  TaskSpec task;
  std::filesystem::path dataset;
  gateway::BackendDescriptor backend;
  std::vector<AgentSpec> agents;
  int batch_size = 20;
  int max_rounds = 3;
  gateway::Strategy strategy;
  InterventionConfig intervention;
  std::optional<Codebook> seed_codebook;  // nullopt: start from an empty codebook
  int runs = 1;
  std::uint64_t seed = 0;
  int evolve_every = 1;  // evolve after every M-th batch; 0 disables evolution
  bool per_entry_coding = false;
  std::size_t peer_char_budget = 6000;
  std::optional<int> mediation_rounds;  // defaults to max_rounds
  double temperature = 0.7;
  std::filesystem::path store = "runs";
  std::optional<std::string> run_id;
  bool logical_clock = true;

  int effective_mediation_rounds() const { return mediation_rounds.value_or(max_rounds); }
  Codebook initial_codebook() const;

  /// Resolved form; reading it back yields an equal config. `include_store`
  /// false omits machine-local fields (store, run_id).
  json to_json(bool include_store = true) const;
  static RunConfig from_json(const json& doc, const std::filesystem::path& base_dir);
  static RunConfig load(const std::filesystem::path& path);

  bool operator==(const RunConfig&) const = default;
};

}  // namespace quorum
