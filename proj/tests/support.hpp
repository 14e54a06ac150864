#pragma once

#include <unistd.h>

#include <atomic>
#include <filesystem>
#include <random>
#include <string>
#include <vector>

#include "quorum/codebook.hpp"
#include "quorum/dataset.hpp"
#include "quorum/gateway/mock_backend.hpp"
#include "quorum/gateway/personas.hpp"
#include "quorum/gateway/session.hpp"
#include "quorum/run_config.hpp"

namespace quorum::test {

inline std::filesystem::path source_dir() { return QUORUM_SOURCE_DIR; }
inline std::filesystem::path data_path(const std::string& rel) { return source_dir() / "data" / rel; }
inline std::filesystem::path fixture_path(const std::string& name) { return source_dir() / "tests" / "fixtures" / name; }
inline std::filesystem::path golden_path(const std::string& name) { return source_dir() / "tests" / "golden" / name; }

inline TaskSpec pis_spec() { return load_task_spec(data_path("tasks/pis.json")); }
inline TaskSpec ces_spec() { return load_task_spec(data_path("tasks/ces.json")); }
inline TaskSpec cn_spec() { return load_task_spec(data_path("tasks/cn.json")); }

inline Codebook load_codebook(const std::string& rel, const TaskSpec& spec) {
  return Codebook::from_json(json::parse(read_file(data_path(rel))), &spec);
}

inline std::vector<gateway::ScriptLine> load_script(const std::string& fixture) {
  return gateway::parse_script(read_file(fixture_path(fixture)));
}

/// Scratch directory removed on destruction.
class TempDir {
 public:
  TempDir() {
    static std::atomic<int> counter{0};
    path_ = std::filesystem::temp_directory_path() /
            ("quorum-test-" + std::to_string(::getpid()) + "-" + std::to_string(counter++));
    std::filesystem::remove_all(path_);
    std::filesystem::create_directories(path_);
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path_, ec);
  }
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;
  const std::filesystem::path& path() const { return path_; }

 private:
  std::filesystem::path path_;
};

/// Sessions "agent_1".."agent_n" backed by the built-in personas.
inline std::vector<gateway::AgentSession> make_sessions(std::size_t n) {
  std::vector<gateway::AgentSession> sessions;
  const auto personas = gateway::builtin_personas();
  for (std::size_t i = 0; i < n; ++i) {
    sessions.emplace_back("agent_" + std::to_string(i + 1), personas[i % personas.size()]);
  }
  return sessions;
}

inline LabelAssignment labels(const std::string& key, std::initializer_list<std::string> codes) {
  LabelAssignment a;
  a.by_key[key] = std::set<std::string>(codes);
  return a;
}

inline Verdict verdict(const std::string& agent, const std::string& entry, std::optional<LabelAssignment> l,
                       const std::string& rationale = "initial coding") {
  Verdict v;
  v.agent_id = agent;
  v.entry_id = entry;
  v.labels = std::move(l);
  v.rationale = rationale;
  return v;
}

inline std::string answer(const std::string& key, const std::string& code, const std::string& reason = "Reasoning.") {
  return reason + "\n\n```json\n{\"" + key + "\": \"" + code + "\"}\n```";
}

/// The shipped mock configuration (40 entries, N=2, B=20, K=3) with `edits`
/// merged in and the store redirected to `store`.
inline RunConfig toy_config(const std::filesystem::path& store, const json& edits = json::object()) {
  auto doc = json::parse(read_file(data_path("configs/pis_mock.json")));
  doc.merge_patch(edits);
  doc["store"] = store.string();
  return RunConfig::from_json(doc, data_path("configs"));
}

}  // namespace quorum::test
