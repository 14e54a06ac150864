#pragma once

#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "quorum/core.hpp"

namespace quorum {

/// One coding rule. `label` is the display name agents see ("Positive");
/// `label_code` the class it maps to, or "guidance" for key-independent notes.
struct Rule {
  std::string rule_id;
  std::string label;
  std::string label_code;
  std::string description;
  std::vector<std::string> examples;
  std::vector<std::string> clarifications;

  bool operator==(const Rule&) const = default;
};

inline constexpr std::string_view kGuidanceCode = "guidance";

enum class Provenance { Seeded, Evolved, HumanEdited };

std::string_view to_string(Provenance p);
Provenance provenance_from_string(std::string_view text);

struct Codebook {
  int version = 0;
  std::vector<Rule> rules;
  Provenance provenance = Provenance::Seeded;

  /// Canonical plain-text form inserted into prompts; a pure function of `rules`.
  std::string rendered_text() const;
  const Rule* find(std::string_view rule_id) const;

  /// Throws DomainError on duplicate rule ids or labels that cannot be rendered.
  void validate() const;

  static Codebook from_json(const json& doc, const TaskSpec* spec = nullptr);
  json to_json() const;

  bool operator==(const Codebook&) const = default;
};

std::string render_rules(const std::vector<Rule>& rules);

/// Stable id derived from label text: lowercase, alphanumerics joined by '-'.
std::string rule_id_from_label(std::string_view label);

/// Whitespace runs collapsed to single spaces, ends trimmed.
std::string collapse_whitespace(std::string_view text);

/// Parses a reply's last non-empty `CODEBOOK:` section into rules.
///
/// Rule lines look like `1. Label: description`, `- **Label:** description`
/// or `**Label:** description`; lines beginning `Example:` / `Clarification:`
/// (usually indented list items) attach to the preceding rule. Rule ids and
/// label codes are taken from `base` when labels match, then from the task's
/// class codes, then derived from the label. Returns nullopt when no section
/// with at least one rule exists.
std::optional<std::vector<Rule>> extract_codebook_section(std::string_view reply,
                                                          const Codebook* base = nullptr,
                                                          const TaskSpec* spec = nullptr);

}  // namespace quorum
