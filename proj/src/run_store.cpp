#include "quorum/run_store.hpp"

#include <regex>
#include <sstream>

#include "quorum/dataset.hpp"

namespace quorum {

namespace fs = std::filesystem;

RunStore::RunStore(fs::path root) : root_(std::move(root)) {}

fs::path RunStore::run_dir(const std::string& run_id) const { return root_ / run_id; }

fs::path RunStore::events_path(const std::string& run_id) const { return run_dir(run_id) / "events.jsonl"; }

bool RunStore::exists(const std::string& run_id) const {
  return !run_id.empty() && fs::exists(run_dir(run_id) / "config.json");
}

std::vector<std::string> RunStore::list_runs() const {
  std::vector<std::string> ids;
  if (!fs::exists(root_)) return ids;
  for (const auto& entry : fs::directory_iterator(root_)) {
    if (entry.is_directory() && fs::exists(entry.path() / "config.json")) {
      ids.push_back(entry.path().filename().string());
    }
  }
  std::sort(ids.begin(), ids.end());
  return ids;
}

std::string RunStore::unique_run_id(const std::string& base) const {
  if (!fs::exists(run_dir(base))) return base;
  for (int i = 2;; ++i) {
    auto id = base + "-" + std::to_string(i);
    if (!fs::exists(run_dir(id))) return id;
  }
}

void RunStore::create(const std::string& run_id, const json& config) {
  fs::create_directories(run_dir(run_id));
  write_file_atomic(run_dir(run_id) / "config.json", config.dump(2) + "\n");
  write_file_atomic(events_path(run_id), "");
}

json RunStore::read_config(const std::string& run_id) const {
  if (!exists(run_id)) throw NotFound("run " + run_id);
  return json::parse(read_file(run_dir(run_id) / "config.json"));
}

void RunStore::write_codebook(const std::string& run_id, const Codebook& codebook) {
  write_file_atomic(run_dir(run_id) / ("codebook_v" + std::to_string(codebook.version) + ".json"),
                    codebook.to_json().dump(2) + "\n");
}

Codebook RunStore::read_codebook(const std::string& run_id, int version) const {
  if (!exists(run_id)) throw NotFound("run " + run_id);
  const auto path = run_dir(run_id) / ("codebook_v" + std::to_string(version) + ".json");
  if (!fs::exists(path)) throw NotFound("codebook v" + std::to_string(version) + " of run " + run_id);
  return Codebook::from_json(json::parse(read_file(path)));
}

std::vector<int> RunStore::codebook_versions(const std::string& run_id) const {
  if (!exists(run_id)) throw NotFound("run " + run_id);
  static const std::regex name(R"(codebook_v(\d+)\.json)");
  std::vector<int> versions;
  for (const auto& entry : fs::directory_iterator(run_dir(run_id))) {
    std::smatch m;
    const auto file = entry.path().filename().string();
    if (std::regex_match(file, m, name)) versions.push_back(std::stoi(m[1].str()));
  }
  std::sort(versions.begin(), versions.end());
  return versions;
}

void RunStore::remove_codebooks_after(const std::string& run_id, int version) {
  for (int v : codebook_versions(run_id)) {
    if (v > version) fs::remove(run_dir(run_id) / ("codebook_v" + std::to_string(v) + ".json"));
  }
}

std::vector<Event> RunStore::read_events(const std::string& run_id) const {
  if (!exists(run_id)) throw NotFound("run " + run_id);
  const auto text = read_file(events_path(run_id));
  std::vector<std::string> lines;
  std::istringstream in(text);
  for (std::string line; std::getline(in, line);) lines.push_back(line);
  while (!lines.empty() && trim(lines.back()).empty()) lines.pop_back();

  std::vector<Event> events;
  for (std::size_t i = 0; i < lines.size(); ++i) {
    const bool last = i + 1 == lines.size();
    if (trim(lines[i]).empty()) throw CorruptLog(i + 1, "blank line");
    try {
      auto e = event_from_line(lines[i]);
      if (e.seq != events.size() + 1) {
        throw CorruptLog(i + 1, "expected seq " + std::to_string(events.size() + 1));
      }
      events.push_back(std::move(e));
    } catch (const std::invalid_argument& err) {
      if (last) break;  // write interrupted mid-line
      throw CorruptLog(i + 1, err.what());
    }
  }
  return events;
}

void RunStore::rewrite_events(const std::string& run_id, const std::vector<Event>& events) {
  std::string text;
  for (const auto& e : events) text += event_to_line(e) + "\n";
  write_file_atomic(events_path(run_id), text);
}

void RunStore::write_metrics_csv(const std::string& run_id, const std::string& csv) {
  write_file_atomic(run_dir(run_id) / "metrics.csv", csv);
}

RunRecord RunStore::load(const std::string& run_id) const {
  const auto events = read_events(run_id);
  try {
    return RunRecord::replay(events);
  } catch (const std::exception& e) {
    throw CorruptLog(0, e.what());
  }
}

}  // namespace quorum
