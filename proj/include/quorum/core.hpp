#pragma once

// Domain types shared by every phase of a coding run.

#include <cstddef>
#include <map>
#include <optional>
#include <set>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

namespace quorum {

using json = nlohmann::json;

/// Raised when a value violates a domain invariant (bad spec, bad codebook, ...).
class DomainError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Two label assignments were compared that do not describe the same verdict keys.
class SpecMismatch : public DomainError {
 public:
  using DomainError::DomainError;
};

enum class TaskKind { MultiClass, MultiLabel };

std::string_view to_string(TaskKind kind);
TaskKind task_kind_from_string(std::string_view text);

/// One JSON key agents answer under, with its admissible codes.
struct LabelKey {
  std::string name;
  std::vector<std::string> codes;
  TaskKind kind = TaskKind::MultiClass;

  bool operator==(const LabelKey&) const = default;
};

/// Classification task definition. `kind` is the task-level default; a key may
/// override it (CN scores NES as multi-label and NP as multi-class).
struct TaskSpec {
  std::string task_id;
  TaskKind kind = TaskKind::MultiClass;
  std::vector<LabelKey> keys;

  const LabelKey& key(std::string_view name) const;
  const LabelKey* find_key(std::string_view name) const;
  std::vector<std::string> verdict_keys() const;
  std::size_t num_classes(std::string_view key_name) const;

  /// Canonical spelling of `code` under `key_name`, matched trimmed and case-insensitively.
  std::optional<std::string> canonical_code(std::string_view key_name, std::string_view code) const;

  /// Throws DomainError when codes are empty or duplicated.
  void validate() const;

  static TaskSpec from_json(const json& doc);
  json to_json() const;

  bool operator==(const TaskSpec&) const = default;
};

/// Per verdict key, the set of assigned codes (a singleton for multi-class keys).
struct LabelAssignment {
  std::map<std::string, std::set<std::string>> by_key;

  bool operator==(const LabelAssignment&) const = default;
  bool operator<(const LabelAssignment& other) const { return by_key < other.by_key; }
};

/// Set equality per verdict key, codes compared trimmed and case-insensitively.
/// Throws SpecMismatch when the two assignments cover different keys.
bool labels_equal(const LabelAssignment& a, const LabelAssignment& b);

/// Throws DomainError unless every code belongs to the spec and cardinality holds.
void validate_labels(const LabelAssignment& labels, const TaskSpec& spec);

/// Canonical wire form, e.g. {"NES": "3,4", "NP": "1"}; keys and codes in spec order.
std::string render_labels_json(const LabelAssignment& labels, const TaskSpec& spec);

json labels_to_json(const LabelAssignment& labels, const TaskSpec& spec);
/// Reads the {key: "code[,code...]"} form and validates it against `spec`.
LabelAssignment labels_from_json(const json& doc, const TaskSpec& spec);

struct TextEntry {
  std::string entry_id;
  std::size_t ordinal = 0;  // 1-based position in the corpus
  std::string text;
  std::optional<LabelAssignment> gold;

  bool operator==(const TextEntry&) const = default;
};

struct Verdict {
  std::string agent_id;
  std::string entry_id;
  std::optional<LabelAssignment> labels;  // empty when the cell failed to parse
  std::string rationale;
  int round = 0;
  std::string failure;
  bool carried_over = false;  // previous round's labels kept after a parse failure
  bool overridden = false;    // replaced by an expert directive

  bool failed() const { return !labels.has_value(); }
  bool operator==(const Verdict&) const = default;
};

json verdict_to_json(const Verdict& v, const TaskSpec& spec);
Verdict verdict_from_json(const json& doc, const TaskSpec& spec);

// String helpers used across modules.
std::string trim(std::string_view text);
std::string to_lower(std::string_view text);
bool iequals(std::string_view a, std::string_view b);
std::vector<std::string> split(std::string_view text, char sep);
std::string join(const std::vector<std::string>& parts, std::string_view sep);

}  // namespace quorum
