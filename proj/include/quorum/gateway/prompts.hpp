#pragma once

// Prompt library. The persona, coding, discussion, codebook-update,
// intervention, CoT and ToT templates are fixed text checked against golden files;
// `{{NAME}}` marks a placeholder. The remaining templates (mediator,
// ratification, format reminders) are the engine's own wording.

#include <map>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "quorum/gateway/message.hpp"

namespace quorum::gateway {

class PromptError : public std::runtime_error {
 public:
  enum class Kind { UnknownTemplate, MissingPlaceholder };

  PromptError(Kind kind, std::string name)
      : std::runtime_error((kind == Kind::UnknownTemplate ? "UnknownTemplate(" : "MissingPlaceholder(") +
                           name + ")"),
        kind_(kind),
        name_(std::move(name)) {}

  Kind kind() const { return kind_; }
  const std::string& name() const { return name_; }

 private:
  Kind kind_;
  std::string name_;
};

/// Placeholder values; keys match placeholder names case-insensitively.
using PromptContext = std::map<std::string, std::string>;

namespace templates {
inline constexpr std::string_view kPersona = "persona";
inline constexpr std::string_view kCoding = "coding";
inline constexpr std::string_view kDiscussion = "discussion";
inline constexpr std::string_view kCodebookUpdate = "codebook_update";
inline constexpr std::string_view kInterveneCollaborative = "intervene_collaborative";
inline constexpr std::string_view kInterveneDirective = "intervene_directive";
inline constexpr std::string_view kCotSuffix = "cot_suffix";
inline constexpr std::string_view kTotSuffix = "tot_suffix";
inline constexpr std::string_view kMediatorSystem = "mediator_system";
inline constexpr std::string_view kMediatorMerge = "mediator_merge";
inline constexpr std::string_view kMediatorRevise = "mediator_revise";
inline constexpr std::string_view kRatify = "ratify";
inline constexpr std::string_view kFormatReminder = "format_reminder";
inline constexpr std::string_view kCodebookFormat = "codebook_format";
}  // namespace templates

std::vector<std::string> template_ids();

/// Raw template text, placeholders included. Throws PromptError(UnknownTemplate).
std::string_view template_text(std::string_view template_id);

/// Names of the placeholders a template needs, in order of first appearance.
std::vector<std::string> template_placeholders(std::string_view template_id);

/// Substitutes every placeholder in a single pass (substituted values are not
/// rescanned) and wraps the result in a message of the template's role.
Messages render_prompt(std::string_view template_id, const PromptContext& context);

/// Convenience: content of the single message render_prompt produces.
std::string render_text(std::string_view template_id, const PromptContext& context);

}  // namespace quorum::gateway
