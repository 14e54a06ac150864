#include "quorum/codebook.hpp"

#include <cctype>
#include <regex>
#include <set>

namespace quorum {

std::string_view to_string(Provenance p) {
  switch (p) {
    case Provenance::Seeded: return "Seeded";
    case Provenance::Evolved: return "Evolved";
    case Provenance::HumanEdited: return "HumanEdited";
  }
  return "Seeded";
}

Provenance provenance_from_string(std::string_view text) {
  if (text == "Seeded") return Provenance::Seeded;
  if (text == "Evolved") return Provenance::Evolved;
  if (text == "HumanEdited") return Provenance::HumanEdited;
  throw DomainError("unknown codebook provenance '" + std::string(text) + "'");
}

std::string collapse_whitespace(std::string_view text) {
  std::string out;
  bool pending_space = false;
  for (const char c : text) {
    if (std::isspace(static_cast<unsigned char>(c)) != 0) {
      pending_space = !out.empty();
      continue;
    }
    if (pending_space) out += ' ';
    pending_space = false;
    out += c;
  }
  return out;
}

std::string rule_id_from_label(std::string_view label) {
  std::string id;
  bool dash = false;
  for (const char c : label) {
    const auto uc = static_cast<unsigned char>(c);
    if (std::isalnum(uc) != 0) {
      if (dash && !id.empty()) id += '-';
      dash = false;
      id += static_cast<char>(std::tolower(uc));
    } else {
      dash = true;
    }
  }
  return id.empty() ? std::string("rule") : id;
}

std::string render_rules(const std::vector<Rule>& rules) {
  std::string out;
  for (std::size_t i = 0; i < rules.size(); ++i) {
    const auto& r = rules[i];
    out += std::to_string(i + 1) + ". " + r.label + ":";
    if (!r.description.empty()) out += " " + r.description;
    out += "\n";
    for (const auto& e : r.examples) out += "   - Example: \"" + e + "\"\n";
    for (const auto& c : r.clarifications) out += "   - Clarification: " + c + "\n";
  }
  return out;
}

std::string Codebook::rendered_text() const { return render_rules(rules); }

const Rule* Codebook::find(std::string_view rule_id) const {
  for (const auto& r : rules) {
    if (r.rule_id == rule_id) return &r;
  }
  return nullptr;
}

void Codebook::validate() const {
  std::set<std::string> ids;
  auto single_line = [](const std::string& s) { return s.find('\n') == std::string::npos; };
  for (const auto& r : rules) {
    if (r.rule_id.empty()) throw DomainError("rule without rule_id");
    if (!ids.insert(r.rule_id).second) throw DomainError("duplicate rule_id '" + r.rule_id + "'");
    if (trim(r.label).empty()) throw DomainError("rule '" + r.rule_id + "' has an empty label");
    if (r.label.find(':') != std::string::npos || !single_line(r.label)) {
      throw DomainError("rule label '" + r.label + "' may not contain ':' or newlines");
    }
    if (!single_line(r.description)) {
      throw DomainError("rule '" + r.rule_id + "' description spans lines");
    }
    for (const auto& e : r.examples) {
      if (!single_line(e)) throw DomainError("rule '" + r.rule_id + "' example spans lines");
    }
    for (const auto& c : r.clarifications) {
      if (!single_line(c)) throw DomainError("rule '" + r.rule_id + "' clarification spans lines");
    }
  }
}

namespace {

std::string match_label_code(const std::string& label, const TaskSpec* spec) {
  if (spec == nullptr) return std::string(kGuidanceCode);
  static const std::regex trailing_code(R"(\(([^()]+)\)\s*$)");
  std::smatch m;
  std::string bracketed;
  if (std::regex_search(label, m, trailing_code)) bracketed = trim(m[1].str());
  for (const auto& key : spec->keys) {
    for (const auto& code : key.codes) {
      if (iequals(trim(label), code) || (!bracketed.empty() && iequals(bracketed, code))) {
        return code;
      }
    }
  }
  return std::string(kGuidanceCode);
}

}  // namespace

Codebook Codebook::from_json(const json& doc, const TaskSpec* spec) {
  Codebook cb;
  cb.version = doc.value("version", 0);
  cb.provenance = provenance_from_string(doc.value("provenance", std::string("Seeded")));
  for (const auto& item : doc.value("rules", json::array())) {
    Rule r;
    r.label = collapse_whitespace(item.at("label").get<std::string>());
    r.rule_id = item.contains("rule_id") ? item.at("rule_id").get<std::string>()
                                         : rule_id_from_label(r.label);
    r.label_code = item.contains("label_code") ? item.at("label_code").get<std::string>()
                                               : match_label_code(r.label, spec);
    r.description = collapse_whitespace(item.value("description", std::string()));
    for (const auto& e : item.value("examples", json::array())) {
      r.examples.push_back(collapse_whitespace(e.get<std::string>()));
    }
    for (const auto& c : item.value("clarifications", json::array())) {
      r.clarifications.push_back(collapse_whitespace(c.get<std::string>()));
    }
    cb.rules.push_back(std::move(r));
  }
  cb.validate();
  return cb;
}

json Codebook::to_json() const {
  json rules_doc = json::array();
  for (const auto& r : rules) {
    rules_doc.push_back({{"rule_id", r.rule_id},
                         {"label", r.label},
                         {"label_code", r.label_code},
                         {"description", r.description},
                         {"examples", r.examples},
                         {"clarifications", r.clarifications}});
  }
  return {{"version", version},
          {"provenance", std::string(to_string(provenance))},
          {"rules", rules_doc},
          {"rendered_text", rendered_text()}};
}

namespace {

std::string strip_emphasis(std::string_view text) {
  std::string out = trim(text);
  auto is_mark = [](char c) { return c == '*' || c == '#' || c == '_' || c == '`'; };
  std::size_t b = 0;
  std::size_t e = out.size();
  while (b < e && (is_mark(out[b]) || out[b] == ' ')) ++b;
  while (e > b && (is_mark(out[e - 1]) || out[e - 1] == ' ')) --e;
  return out.substr(b, e - b);
}

bool is_heading(std::string_view line) {
  static const std::regex heading(R"(^(?:[A-Za-z][A-Za-z ]{0,40} )?CODEBOOK\s*:?$)");
  return std::regex_match(strip_emphasis(line), heading);
}

bool is_horizontal_rule(std::string_view line) {
  const auto t = trim(line);
  if (t.size() < 3) return false;
  for (const char c : t) {
    if (c != '-' && c != '*' && c != '_' && c != ' ') return false;
  }
  return true;
}

std::string strip_quotes(std::string text) {
  text = trim(text);
  static const std::vector<std::pair<std::string, std::string>> pairs = {
      {"\"", "\""}, {"“", "”"}, {"``", "''"}, {"'", "'"}};
  for (const auto& [open, close] : pairs) {
    if (text.size() >= open.size() + close.size() && text.compare(0, open.size(), open) == 0 &&
        text.compare(text.size() - close.size(), close.size(), close) == 0) {
      return text.substr(open.size(), text.size() - open.size() - close.size());
    }
  }
  return text;
}

// Text after a case-insensitive "<prefix>:" (emphasis allowed), if present.
std::optional<std::string> after_prefix(const std::string& content,
                                        std::initializer_list<std::string_view> prefixes) {
  std::string_view s = content;
  const bool bold = s.rfind("**", 0) == 0;
  if (bold) s.remove_prefix(2);
  for (const auto prefix : prefixes) {
    if (s.size() <= prefix.size() || !iequals(s.substr(0, prefix.size()), prefix)) continue;
    auto rest = s.substr(prefix.size());
    if (bold && rest.rfind("**", 0) == 0) rest.remove_prefix(2);
    if (rest.empty() || rest.front() != ':') continue;
    rest.remove_prefix(1);
    if (bold && rest.rfind("**", 0) == 0) rest.remove_prefix(2);
    return trim(rest);
  }
  return std::nullopt;
}

struct ParsedLine {
  std::size_t indent = 0;
  bool has_marker = false;
  std::string content;
};

ParsedLine parse_line(const std::string& line) {
  static const std::regex marker(R"(^(\d+[.)]|[-*+•])\s+)");
  ParsedLine out;
  for (const char c : line) {
    if (c == ' ') {
      out.indent += 1;
    } else if (c == '\t') {
      out.indent += 4;
    } else {
      break;
    }
  }
  std::string rest = trim(line);
  std::smatch m;
  // "**Label:**" starts with '*' but is not a bullet; a bullet needs whitespace after it.
  if (std::regex_search(rest, m, marker)) {
    out.has_marker = true;
    rest = rest.substr(m.length(0));
  }
  out.content = trim(rest);
  return out;
}

std::optional<std::pair<std::string, std::string>> parse_rule_head(const std::string& content,
                                                                   bool has_marker) {
  static const std::regex bold_inside(R"(^\*\*([^*:]+):\*\*\s*(.*)$)");
  static const std::regex bold_outside(R"(^\*\*([^*:]+)\*\*\s*:\s*(.*)$)");
  static const std::regex plain(R"(^([^*:]{1,120}):\s*(.*)$)");
  std::smatch m;
  if (std::regex_match(content, m, bold_inside) || std::regex_match(content, m, bold_outside) ||
      (has_marker && std::regex_match(content, m, plain))) {
    const auto label = collapse_whitespace(m[1].str());
    if (label.empty()) return std::nullopt;
    return std::make_pair(label, collapse_whitespace(m[2].str()));
  }
  return std::nullopt;
}

std::vector<Rule> parse_section(const std::vector<std::string>& lines, std::size_t first) {
  std::vector<Rule> rules;
  enum class Last { Description, Example, Clarification } last = Last::Description;
  for (std::size_t i = first; i < lines.size(); ++i) {
    const auto& line = lines[i];
    const auto t = trim(line);
    if (t.empty()) continue;
    if (t.rfind("```", 0) == 0 || is_horizontal_rule(t)) {
      if (rules.empty()) continue;
      break;
    }
    const auto parsed = parse_line(line);
    if (auto example = after_prefix(parsed.content, {"Example", "E.g.", "Eg"})) {
      if (rules.empty()) break;
      rules.back().examples.push_back(collapse_whitespace(strip_quotes(*example)));
      last = Last::Example;
      continue;
    }
    if (auto note = after_prefix(parsed.content, {"Clarification", "Note"})) {
      if (rules.empty()) break;
      rules.back().clarifications.push_back(collapse_whitespace(*note));
      last = Last::Clarification;
      continue;
    }
    if (parsed.indent < 2) {
      if (auto head = parse_rule_head(parsed.content, parsed.has_marker)) {
        Rule r;
        r.label = head->first;
        r.description = head->second;
        rules.push_back(std::move(r));
        last = Last::Description;
        continue;
      }
      break;
    }
    if (rules.empty()) break;
    auto& rule = rules.back();
    const auto text = collapse_whitespace(parsed.content);
    if (parsed.has_marker) {
      rule.clarifications.push_back(text);
      last = Last::Clarification;
      continue;
    }
    auto append = [&](std::string& target) { target = target.empty() ? text : target + " " + text; };
    if (last == Last::Example && !rule.examples.empty()) {
      append(rule.examples.back());
    } else if (last == Last::Clarification && !rule.clarifications.empty()) {
      append(rule.clarifications.back());
    } else {
      append(rule.description);
    }
  }
  return rules;
}

}  // namespace

std::optional<std::vector<Rule>> extract_codebook_section(std::string_view reply,
                                                          const Codebook* base,
                                                          const TaskSpec* spec) {
  const auto lines = split(reply, '\n');
  for (std::size_t h = lines.size(); h-- > 0;) {
    if (!is_heading(lines[h])) continue;
    auto rules = parse_section(lines, h + 1);
    if (rules.empty()) continue;
    std::set<std::string> used;
    for (auto& r : rules) {
      const auto* match = [&]() -> const Rule* {
        if (base == nullptr) return nullptr;
        for (const auto& b : base->rules) {
          if (iequals(collapse_whitespace(b.label), r.label)) return &b;
        }
        return nullptr;
      }();
      std::string id = match != nullptr ? match->rule_id : rule_id_from_label(r.label);
      r.label_code = match != nullptr ? match->label_code : match_label_code(r.label, spec);
      const std::string stem = id;
      for (int n = 2; used.count(id) != 0; ++n) id = stem + "-" + std::to_string(n);
      used.insert(id);
      r.rule_id = id;
    }
    return rules;
  }
  return std::nullopt;
}

}  // namespace quorum
