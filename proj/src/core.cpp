#include "quorum/core.hpp"

#include <algorithm>
#include <cctype>

namespace quorum {

std::string_view to_string(TaskKind kind) {
  return kind == TaskKind::MultiClass ? "MultiClass" : "MultiLabel";
}

TaskKind task_kind_from_string(std::string_view text) {
  const auto lowered = to_lower(trim(text));
  if (lowered == "multiclass" || lowered == "multi-class") return TaskKind::MultiClass;
  if (lowered == "multilabel" || lowered == "multi-label") return TaskKind::MultiLabel;
  throw DomainError("unknown task kind '" + std::string(text) + "'");
}

const LabelKey* TaskSpec::find_key(std::string_view name) const {
  for (const auto& k : keys) {
    if (k.name == name) return &k;
  }
  for (const auto& k : keys) {
    if (iequals(k.name, name)) return &k;
  }
  return nullptr;
}

const LabelKey& TaskSpec::key(std::string_view name) const {
  if (const auto* k = find_key(name)) return *k;
  throw DomainError("task " + task_id + " has no verdict key '" + std::string(name) + "'");
}

std::vector<std::string> TaskSpec::verdict_keys() const {
  std::vector<std::string> names;
  names.reserve(keys.size());
  for (const auto& k : keys) names.push_back(k.name);
  return names;
}

std::size_t TaskSpec::num_classes(std::string_view key_name) const {
  return key(key_name).codes.size();
}

std::optional<std::string> TaskSpec::canonical_code(std::string_view key_name,
                                                    std::string_view code) const {
  const auto* k = find_key(key_name);
  if (k == nullptr) return std::nullopt;
  const auto wanted = trim(code);
  for (const auto& c : k->codes) {
    if (iequals(c, wanted)) return c;
  }
  return std::nullopt;
}

void TaskSpec::validate() const {
  if (task_id.empty()) throw DomainError("task_id must not be empty");
  if (keys.empty()) throw DomainError("task " + task_id + " declares no verdict keys");
  std::set<std::string> names;
  for (const auto& k : keys) {
    if (k.name.empty()) throw DomainError("verdict key names must not be empty");
    if (!names.insert(to_lower(k.name)).second) {
      throw DomainError("duplicate verdict key '" + k.name + "'");
    }
    if (k.codes.empty()) throw DomainError("verdict key '" + k.name + "' has no class codes");
    std::set<std::string> seen;
    for (const auto& c : k.codes) {
      const auto norm = to_lower(trim(c));
      if (norm.empty()) throw DomainError("empty class code under '" + k.name + "'");
      if (norm.find(',') != std::string::npos) {
        throw DomainError("class code '" + c + "' contains the multi-label separator");
      }
      if (!seen.insert(norm).second) {
        throw DomainError("duplicate class code '" + c + "' under '" + k.name + "'");
      }
    }
  }
}

TaskSpec TaskSpec::from_json(const json& doc) {
  TaskSpec spec;
  spec.task_id = doc.at("task_id").get<std::string>();
  spec.kind = task_kind_from_string(doc.value("kind", std::string("MultiClass")));
  const auto key_names = doc.at("verdict_keys").get<std::vector<std::string>>();
  const auto& codes = doc.at("class_codes");
  const json kinds = doc.value("key_kinds", json::object());
  for (const auto& name : key_names) {
    LabelKey k;
    k.name = name;
    if (codes.is_array()) {
      k.codes = codes.get<std::vector<std::string>>();
    } else if (codes.is_object() && codes.contains(name)) {
      k.codes = codes.at(name).get<std::vector<std::string>>();
    } else {
      throw DomainError("class_codes has no entry for verdict key '" + name + "'");
    }
    k.kind = kinds.contains(name) ? task_kind_from_string(kinds.at(name).get<std::string>())
                                  : spec.kind;
    spec.keys.push_back(std::move(k));
  }
  if (doc.contains("num_classes")) {
    const auto& declared = doc.at("num_classes");
    for (const auto& k : spec.keys) {
      const auto n = declared.is_object() ? declared.at(k.name).get<std::size_t>()
                                          : declared.get<std::size_t>();
      if (n != k.codes.size()) {
        throw DomainError("num_classes for '" + k.name + "' disagrees with class_codes");
      }
    }
  }
  spec.validate();
  return spec;
}

json TaskSpec::to_json() const {
  json codes = json::object();
  json kinds = json::object();
  json counts = json::object();
  for (const auto& k : keys) {
    codes[k.name] = k.codes;
    counts[k.name] = k.codes.size();
    if (k.kind != kind) kinds[k.name] = std::string(quorum::to_string(k.kind));
  }
  json doc = {{"task_id", task_id},
              {"kind", std::string(quorum::to_string(kind))},
              {"verdict_keys", verdict_keys()},
              {"class_codes", codes},
              {"num_classes", counts}};
  if (!kinds.empty()) doc["key_kinds"] = kinds;
  return doc;
}

bool labels_equal(const LabelAssignment& a, const LabelAssignment& b) {
  auto normalize = [](const std::set<std::string>& codes) {
    std::set<std::string> out;
    for (const auto& c : codes) out.insert(to_lower(trim(c)));
    return out;
  };
  if (a.by_key.size() != b.by_key.size()) {
    throw SpecMismatch("label assignments cover different verdict keys");
  }
  for (const auto& [key, codes] : a.by_key) {
    const auto it = b.by_key.find(key);
    if (it == b.by_key.end()) {
      throw SpecMismatch("verdict key '" + key + "' missing from one assignment");
    }
    if (normalize(codes) != normalize(it->second)) return false;
  }
  return true;
}

void validate_labels(const LabelAssignment& labels, const TaskSpec& spec) {
  if (labels.by_key.size() != spec.keys.size()) {
    throw DomainError("label assignment must cover exactly the task's verdict keys");
  }
  for (const auto& k : spec.keys) {
    const auto it = labels.by_key.find(k.name);
    if (it == labels.by_key.end()) throw DomainError("missing verdict key '" + k.name + "'");
    if (it->second.empty()) throw DomainError("empty code set for '" + k.name + "'");
    if (k.kind == TaskKind::MultiClass && it->second.size() != 1) {
      throw DomainError("multi-class key '" + k.name + "' needs exactly one code");
    }
    for (const auto& c : it->second) {
      if (std::find(k.codes.begin(), k.codes.end(), c) == k.codes.end()) {
        throw DomainError("code '" + c + "' is not defined for '" + k.name + "'");
      }
    }
  }
}

namespace {

std::string joined_codes(const std::set<std::string>& codes, const LabelKey* key) {
  std::vector<std::string> ordered;
  if (key != nullptr) {
    for (const auto& c : key->codes) {
      if (codes.count(c) != 0) ordered.push_back(c);
    }
  }
  for (const auto& c : codes) {
    if (std::find(ordered.begin(), ordered.end(), c) == ordered.end()) ordered.push_back(c);
  }
  return join(ordered, ",");
}

}  // namespace

std::string render_labels_json(const LabelAssignment& labels, const TaskSpec& spec) {
  std::string out = "{";
  bool first = true;
  auto emit = [&](const std::string& key, const std::set<std::string>& codes) {
    if (!first) out += ", ";
    first = false;
    out += json(key).dump() + ": " + json(joined_codes(codes, spec.find_key(key))).dump();
  };
  for (const auto& k : spec.keys) {
    if (const auto it = labels.by_key.find(k.name); it != labels.by_key.end()) {
      emit(k.name, it->second);
    }
  }
  for (const auto& [key, codes] : labels.by_key) {
    if (spec.find_key(key) == nullptr) emit(key, codes);
  }
  return out + "}";
}

json labels_to_json(const LabelAssignment& labels, const TaskSpec& spec) {
  json doc = json::object();
  for (const auto& [key, codes] : labels.by_key) {
    doc[key] = joined_codes(codes, spec.find_key(key));
  }
  return doc;
}

LabelAssignment labels_from_json(const json& doc, const TaskSpec& spec) {
  if (!doc.is_object()) throw DomainError("labels must be a JSON object");
  LabelAssignment labels;
  for (const auto& [key, value] : doc.items()) {
    const auto& k = spec.key(key);
    std::vector<std::string> raw;
    if (value.is_array()) {
      for (const auto& v : value) raw.push_back(v.is_string() ? v.get<std::string>() : v.dump());
    } else if (value.is_string()) {
      raw = split(value.get<std::string>(), ',');
    } else {
      raw.push_back(value.dump());
    }
    auto& set = labels.by_key[k.name];
    for (const auto& r : raw) {
      if (trim(r).empty()) continue;
      const auto canonical = spec.canonical_code(k.name, r);
      if (!canonical) throw DomainError("code '" + trim(r) + "' is not defined for '" + k.name + "'");
      set.insert(*canonical);
    }
  }
  validate_labels(labels, spec);
  return labels;
}

json verdict_to_json(const Verdict& v, const TaskSpec& spec) {
  json doc = {{"agent_id", v.agent_id},
              {"entry_id", v.entry_id},
              {"labels", v.labels ? labels_to_json(*v.labels, spec) : json(nullptr)},
              {"rationale", v.rationale},
              {"round", v.round}};
  if (!v.failure.empty()) doc["failure"] = v.failure;
  if (v.carried_over) doc["carried_over"] = true;
  if (v.overridden) doc["overridden"] = true;
  return doc;
}

Verdict verdict_from_json(const json& doc, const TaskSpec& spec) {
  Verdict v;
  v.agent_id = doc.at("agent_id").get<std::string>();
  v.entry_id = doc.at("entry_id").get<std::string>();
  if (!doc.at("labels").is_null()) v.labels = labels_from_json(doc.at("labels"), spec);
  v.rationale = doc.at("rationale").get<std::string>();
  v.round = doc.at("round").get<int>();
  v.failure = doc.value("failure", std::string());
  v.carried_over = doc.value("carried_over", false);
  v.overridden = doc.value("overridden", false);
  return v;
}

std::string trim(std::string_view text) {
  const auto is_space = [](unsigned char c) { return std::isspace(c) != 0; };
  std::size_t begin = 0;
  std::size_t end = text.size();
  while (begin < end && is_space(static_cast<unsigned char>(text[begin]))) ++begin;
  while (end > begin && is_space(static_cast<unsigned char>(text[end - 1]))) --end;
  return std::string(text.substr(begin, end - begin));
}

std::string to_lower(std::string_view text) {
  std::string out(text);
  std::transform(out.begin(), out.end(), out.begin(),
                 [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  return out;
}

bool iequals(std::string_view a, std::string_view b) {
  return a.size() == b.size() && to_lower(a) == to_lower(b);
}

std::vector<std::string> split(std::string_view text, char sep) {
  std::vector<std::string> parts;
  std::size_t start = 0;
  while (true) {
    const auto pos = text.find(sep, start);
    parts.emplace_back(text.substr(start, pos == std::string_view::npos ? text.npos : pos - start));
    if (pos == std::string_view::npos) break;
    start = pos + 1;
  }
  return parts;
}

std::string join(const std::vector<std::string>& parts, std::string_view sep) {
  std::string out;
  for (std::size_t i = 0; i < parts.size(); ++i) {
    if (i != 0) out += sep;
    out += parts[i];
  }
  return out;
}

}  // namespace quorum
