#include "quorum/dataset.hpp"

#include <fstream>
#include <set>
#include <sstream>

namespace quorum {

std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open " + path.string());
  std::ostringstream buffer;
  buffer << in.rdbuf();
  return buffer.str();
}

void write_file_atomic(const std::filesystem::path& path, const std::string& contents) {
  auto tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw std::runtime_error("cannot write " + tmp.string());
    out << contents;
    out.flush();
    if (!out) throw std::runtime_error("short write to " + tmp.string());
  }
  std::filesystem::rename(tmp, path);
}

TaskSpec load_task_spec(const std::filesystem::path& path) {
  auto doc = json::parse(read_file(path), nullptr, false);
  if (doc.is_discarded()) throw DomainError("task spec " + path.string() + " is not valid JSON");
  return TaskSpec::from_json(doc);
}

std::vector<TextEntry> parse_dataset(const std::string& jsonl, const TaskSpec& spec) {
  std::vector<TextEntry> entries;
  std::set<std::string> ids;
  std::istringstream in(jsonl);
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (trim(line).empty()) continue;
    auto doc = json::parse(line, nullptr, false);
    if (doc.is_discarded() || !doc.is_object()) throw DatasetInvalid(line_no, "not a JSON object");
    TextEntry entry;
    try {
      entry.entry_id = doc.at("id").is_string() ? doc.at("id").get<std::string>()
                                                : doc.at("id").dump();
      entry.text = doc.at("text").get<std::string>();
    } catch (const json::exception& e) {
      throw DatasetInvalid(line_no, e.what());
    }
    if (entry.entry_id.empty()) throw DatasetInvalid(line_no, "empty id");
    if (trim(entry.text).empty()) throw DatasetInvalid(line_no, "empty text");
    if (!ids.insert(entry.entry_id).second) {
      throw DatasetInvalid(line_no, "duplicate id '" + entry.entry_id + "'");
    }
    if (doc.contains("gold") && !doc.at("gold").is_null()) {
      try {
        entry.gold = labels_from_json(doc.at("gold"), spec);
      } catch (const DomainError& e) {
        throw DatasetInvalid(line_no, std::string("gold: ") + e.what());
      }
    }
    entry.ordinal = entries.size() + 1;
    entries.push_back(std::move(entry));
  }
  return entries;
}

std::vector<TextEntry> load_dataset(const std::filesystem::path& path, const TaskSpec& spec) {
  return parse_dataset(read_file(path), spec);
}

}  // namespace quorum
