#include "quorum/verdict_parser.hpp"

#include <cctype>
#include <optional>

namespace quorum {

std::string_view to_string(ParseFailure::Kind kind) {
  switch (kind) {
    case ParseFailure::Kind::NoJsonBlock: return "NoJsonBlock";
    case ParseFailure::Kind::MissingKey: return "MissingKey";
    case ParseFailure::Kind::UnknownCode: return "UnknownCode";
    case ParseFailure::Kind::CardinalityViolation: return "CardinalityViolation";
  }
  return "Unknown";
}

std::string ParseFailure::message() const {
  std::string out(to_string(kind));
  if (!detail.empty()) out += "(" + detail + ")";
  return out;
}

namespace {

// Offset one past the '}' balancing the '{' at `open`, honouring JSON strings.
std::optional<std::size_t> matching_brace(std::string_view text, std::size_t open) {
  int depth = 0;
  bool in_string = false;
  bool escaped = false;
  for (std::size_t i = open; i < text.size(); ++i) {
    const char c = text[i];
    if (in_string) {
      if (escaped) {
        escaped = false;
      } else if (c == '\\') {
        escaped = true;
      } else if (c == '"') {
        in_string = false;
      }
      continue;
    }
    if (c == '"') {
      in_string = true;
    } else if (c == '{') {
      ++depth;
    } else if (c == '}') {
      if (--depth == 0) return i + 1;
    }
  }
  return std::nullopt;
}

}  // namespace

std::vector<JsonBlock> find_json_objects(std::string_view text) {
  std::vector<JsonBlock> blocks;
  std::size_t pos = 0;
  while (true) {
    const auto open = text.find('{', pos);
    if (open == std::string_view::npos) break;
    const auto close = matching_brace(text, open);
    if (close) {
      auto parsed = json::parse(text.substr(open, *close - open), nullptr, false);
      if (!parsed.is_discarded() && parsed.is_object()) {
        blocks.push_back({open, *close, std::move(parsed)});
        pos = *close;
        continue;
      }
    }
    pos = open + 1;
  }
  return blocks;
}

ParseResult parse_verdict_object(const json& object, const TaskSpec& spec) {
  LabelAssignment labels;
  for (const auto& key : spec.keys) {
    const json* value = nullptr;
    if (object.contains(key.name)) {
      value = &object.at(key.name);
    } else {
      for (const auto& [name, v] : object.items()) {
        if (iequals(trim(name), key.name)) {
          value = &v;
          break;
        }
      }
    }
    if (value == nullptr) return ParseFailure{ParseFailure::Kind::MissingKey, key.name};

    std::vector<std::string> raw_codes;
    if (value->is_string()) {
      raw_codes = split(value->get<std::string>(), ',');
    } else if (value->is_array()) {
      for (const auto& item : *value) {
        raw_codes.push_back(item.is_string() ? item.get<std::string>() : item.dump());
      }
    } else if (value->is_number_integer() || value->is_number_unsigned()) {
      raw_codes.push_back(value->dump());
    } else {
      return ParseFailure{ParseFailure::Kind::UnknownCode, value->dump()};
    }

    auto& codes = labels.by_key[key.name];
    for (const auto& raw : raw_codes) {
      const auto code = trim(raw);
      if (code.empty()) continue;
      const auto canonical = spec.canonical_code(key.name, code);
      if (!canonical) return ParseFailure{ParseFailure::Kind::UnknownCode, code};
      codes.insert(*canonical);
    }
    if (codes.empty() || (key.kind == TaskKind::MultiClass && codes.size() != 1)) {
      return ParseFailure{ParseFailure::Kind::CardinalityViolation, key.name};
    }
  }
  return labels;
}

ParseResult parse_agent_verdict(std::string_view raw, const TaskSpec& spec) {
  const auto blocks = find_json_objects(raw);
  if (blocks.empty()) return ParseFailure{ParseFailure::Kind::NoJsonBlock, {}};
  return parse_verdict_object(blocks.back().value, spec);
}

namespace {

// Position of the first "TEXT: n" marker at or after `from`; the ordinal must
// not be followed by another digit.
std::optional<std::size_t> find_marker(std::string_view reply, std::size_t ordinal,
                                       std::size_t from) {
  const auto number = std::to_string(ordinal);
  std::size_t pos = from;
  while ((pos = reply.find("TEXT", pos)) != std::string_view::npos) {
    std::size_t i = pos + 4;
    while (i < reply.size() && (reply[i] == ':' || reply[i] == ' ' || reply[i] == '#' ||
                                reply[i] == '*')) {
      ++i;
    }
    if (reply.substr(i, number.size()) == number) {
      const auto after = i + number.size();
      if (after >= reply.size() || std::isdigit(static_cast<unsigned char>(reply[after])) == 0) {
        return pos;
      }
    }
    pos += 4;
  }
  return std::nullopt;
}

}  // namespace

std::vector<std::string> segment_by_ordinal(std::string_view reply,
                                            const std::vector<std::size_t>& ordinals) {
  std::vector<std::optional<std::size_t>> starts(ordinals.size());
  std::size_t cursor = 0;
  for (std::size_t i = 0; i < ordinals.size(); ++i) {
    starts[i] = find_marker(reply, ordinals[i], cursor);
    if (starts[i]) cursor = *starts[i] + 1;
  }
  std::vector<std::string> segments(ordinals.size());
  for (std::size_t i = 0; i < ordinals.size(); ++i) {
    if (!starts[i]) continue;
    std::size_t end = reply.size();
    for (std::size_t j = i + 1; j < ordinals.size(); ++j) {
      if (starts[j]) {
        end = *starts[j];
        break;
      }
    }
    segments[i] = std::string(reply.substr(*starts[i], end - *starts[i]));
  }
  return segments;
}

}  // namespace quorum
