#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "quorum/core.hpp"

namespace quorum {

class DatasetInvalid : public DomainError {
 public:
  DatasetInvalid(std::size_t line, const std::string& message)
      : DomainError("dataset line " + std::to_string(line) + ": " + message), line_(line) {}
  std::size_t line() const { return line_; }

 private:
  std::size_t line_;
};

TaskSpec load_task_spec(const std::filesystem::path& path);

/// JSON Lines corpus: {"id": str, "text": str, "gold": {key: "code[,code...]"}?}.
/// Blank lines are skipped; ordinals count entries from 1.
std::vector<TextEntry> parse_dataset(const std::string& jsonl, const TaskSpec& spec);
std::vector<TextEntry> load_dataset(const std::filesystem::path& path, const TaskSpec& spec);

std::string read_file(const std::filesystem::path& path);
/// Writes through a temporary sibling and renames it into place.
void write_file_atomic(const std::filesystem::path& path, const std::string& contents);

}  // namespace quorum
