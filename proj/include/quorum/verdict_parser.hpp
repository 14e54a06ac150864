#pragma once

// Extraction of structured verdicts from free-form agent replies.

#include <cstddef>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "quorum/core.hpp"

namespace quorum {

struct ParseFailure {
  enum class Kind { NoJsonBlock, MissingKey, UnknownCode, CardinalityViolation };

  Kind kind = Kind::NoJsonBlock;
  std::string detail;  // offending key or code

  std::string message() const;
  bool operator==(const ParseFailure&) const = default;
};

std::string_view to_string(ParseFailure::Kind kind);

using ParseResult = std::variant<LabelAssignment, ParseFailure>;

/// A well-formed top-level JSON object found inside prose.
struct JsonBlock {
  std::size_t begin = 0;  // offset of '{'
  std::size_t end = 0;    // one past the matching '}'
  json value;
};

/// Every JSON object embedded in `text`, scanned left to right. Stray braces in
/// prose are skipped; nested objects are reported only through their parent.
std::vector<JsonBlock> find_json_objects(std::string_view text);

/// Reads the last well-formed JSON object in `raw` as a verdict for `spec`.
/// Multi-label values are comma-separated codes inside one string; arrays are
/// accepted too.
ParseResult parse_agent_verdict(std::string_view raw, const TaskSpec& spec);

/// Parses an already-located JSON object (no "last block" search).
ParseResult parse_verdict_object(const json& object, const TaskSpec& spec);

/// Splits a batch reply into one segment per ordinal using "TEXT: n." markers.
/// Returns an empty string for ordinals whose marker is missing.
std::vector<std::string> segment_by_ordinal(std::string_view reply,
                                            const std::vector<std::size_t>& ordinals);

}  // namespace quorum
