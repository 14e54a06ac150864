#include "quorum/gateway/prompts.hpp"

#include <algorithm>
#include <cctype>

#include "quorum/core.hpp"

namespace quorum::gateway {

std::string_view to_string(Role role) {
  switch (role) {
    case Role::System: return "system";
    case Role::User: return "user";
    case Role::Assistant: return "assistant";
  }
  return "user";
}

Role role_from_string(std::string_view text) {
  if (text == "system") return Role::System;
  if (text == "assistant") return Role::Assistant;
  if (text == "user") return Role::User;
  throw std::invalid_argument("unknown chat role '" + std::string(text) + "'");
}

std::string last_user_content(const Messages& messages) {
  for (auto it = messages.rbegin(); it != messages.rend(); ++it) {
    if (it->role == Role::User) return it->content;
  }
  return {};
}

namespace {

constexpr std::string_view kCodingText = R"([PERSONA]

{{PERSONA}}

[CODEBOOK]

{{CODEBOOK}}

[INSTRUCTION]

1. Process each TEXT using the guidelines in the CODEBOOK.

2. Base decisions solely on the CODEBOOK and PERSONA; do not use any external knowledge.

3. Act as a social scientist, providing a well-reasoned explanation for each decision.

4. Make sure to state your answer at the end of the response.

{{TEXT}})";

constexpr std::string_view kDiscussionText =
    R"(For some TEXTs, other social scientists have provided different coding results and reasons. You are now conducting a discussion. Below are the responses from other social scientists. Use these responses carefully as additional guidance. You may accept or reject their opinions when updating your answer. Make sure to state your answer at the end of the response.

{{TEXT}}

{{RESPONSES}})";

constexpr std::string_view kCodebookUpdateText =
    R"(Based on the coding and discussion results, please provide an updated CODEBOOK. You may revise the CODEBOOK or keep it unchanged. Do not change the CODEBOOK if it adequately fits the current examples. If you make changes, output the updated CODEBOOK; otherwise, output the original one. You don't have to respond in the JSON format until further instruction.

Criteria for a good CODEBOOK:

1. The CODEBOOK should cover all cases and patterns in the examples.

2. Each rule in the CODEBOOK should be applied at least once.

3. Each rule in the CODEBOOK should be unique, with minimal or no overlap with other rules.

4. This version simplifies the language while maintaining clarity and precision.

Guidelines for changes:

1. You may add, remove, or modify the rules in the CODEBOOK.

2. You may merge or divide rules.

3. You may add examples or clarifications for existing rules.)";

constexpr std::string_view kCollaborativeText =
    R"(Another social scientist has provided advice on your response. Consider this advice carefully as additional guidance. You may accept or reject it when updating your answer. Make sure the output is following the previous format.

{{FEEDBACK}})";

constexpr std::string_view kDirectiveText =
    R"(A human social scientist expert has issued instructions regarding your response. You MUST follow these instructions when updating your answer. Make sure the output is following the previous format.

{{FEEDBACK}})";

constexpr std::string_view kCotText =
    R"(Please explain step by step how you arrive at the solution for the problem. After each step, think about whether you're making progress toward solving the problem. If not, reconsider your approach before continuing.)";

constexpr std::string_view kTotText =
    R"(5. Please generate multiple possible approaches to solve this problem. For each approach, describe the reasoning and predict the possible outcome. Then, choose the best approach and explain why.)";

constexpr std::string_view kCodebookFormatText =
    R"(End your reply with a line that reads exactly "CODEBOOK:" followed by the complete CODEBOOK, one numbered rule per line in the form "1. Label: description". Put each example on its own line below its rule as "   - Example: "..."" and each clarification as "   - Clarification: ...". If you keep the CODEBOOK unchanged, repeat it in this form.)";

constexpr std::string_view kMediatorSystemText =
    R"(You are a neutral mediator for a team of social scientists who code texts with a shared CODEBOOK. You do not take sides. You summarize their opinions faithfully and propose a single CODEBOOK that reconciles them.)";

constexpr std::string_view kMediatorMergeText = R"(CURRENT CODEBOOK:

{{CODEBOOK}}

The social scientists reviewed the CODEBOOK after coding and discussing a batch of texts. Their responses follow.

{{DRAFTS}}

Summarize their opinions, then propose one merged CODEBOOK that keeps what they agree on and incorporates the changes that improve clarity. Do not change the CODEBOOK if none of them asked for changes.

{{FORMAT}})";

constexpr std::string_view kMediatorReviseText =
    R"(Not every social scientist agreed with the proposed CODEBOOK. Their responses follow.

{{RESPONSES}}

Revise the proposed CODEBOOK to address their concerns.

{{FORMAT}})";

constexpr std::string_view kRatifyText = R"(The mediator proposes the following CODEBOOK:

{{CODEBOOK}}

Please review it and state whether you agree with it. End your reply with the JSON object {"AGREE": "yes"} if you agree or {"AGREE": "no"} if you do not.)";

constexpr std::string_view kFormatReminderText = R"(Respond with the JSON object only.)";

struct TemplateDef {
  std::string_view id;
  Role role;
  std::string_view text;
};

constexpr TemplateDef kTemplates[] = {
    {templates::kPersona, Role::System, "{{PERSONA}}"},
    {templates::kCoding, Role::User, kCodingText},
    {templates::kDiscussion, Role::User, kDiscussionText},
    {templates::kCodebookUpdate, Role::User, kCodebookUpdateText},
    {templates::kInterveneCollaborative, Role::User, kCollaborativeText},
    {templates::kInterveneDirective, Role::User, kDirectiveText},
    {templates::kCotSuffix, Role::User, kCotText},
    {templates::kTotSuffix, Role::User, kTotText},
    {templates::kMediatorSystem, Role::System, kMediatorSystemText},
    {templates::kMediatorMerge, Role::User, kMediatorMergeText},
    {templates::kMediatorRevise, Role::User, kMediatorReviseText},
    {templates::kRatify, Role::User, kRatifyText},
    {templates::kFormatReminder, Role::User, kFormatReminderText},
    {templates::kCodebookFormat, Role::User, kCodebookFormatText},
};

const TemplateDef& lookup(std::string_view id) {
  for (const auto& t : kTemplates) {
    if (t.id == id) return t;
  }
  throw PromptError(PromptError::Kind::UnknownTemplate, std::string(id));
}

bool placeholder_char(char c) {
  return std::isupper(static_cast<unsigned char>(c)) != 0 || c == '_';
}

// Calls on_text / on_placeholder for the pieces of a template in order.
template <typename TextFn, typename PlaceholderFn>
void scan(std::string_view text, TextFn&& on_text, PlaceholderFn&& on_placeholder) {
  std::size_t pos = 0;
  while (pos < text.size()) {
    const auto open = text.find("{{", pos);
    if (open == std::string_view::npos) break;
    const auto close = text.find("}}", open + 2);
    if (close == std::string_view::npos) break;
    const auto name = text.substr(open + 2, close - open - 2);
    if (name.empty() || !std::all_of(name.begin(), name.end(), placeholder_char)) {
      on_text(text.substr(pos, open + 2 - pos));
      pos = open + 2;
      continue;
    }
    on_text(text.substr(pos, open - pos));
    on_placeholder(name);
    pos = close + 2;
  }
  on_text(text.substr(pos));
}

}  // namespace

std::vector<std::string> template_ids() {
  std::vector<std::string> ids;
  for (const auto& t : kTemplates) ids.emplace_back(t.id);
  return ids;
}

std::string_view template_text(std::string_view template_id) { return lookup(template_id).text; }

std::vector<std::string> template_placeholders(std::string_view template_id) {
  std::vector<std::string> names;
  scan(
      lookup(template_id).text, [](std::string_view) {},
      [&](std::string_view name) {
        if (std::find(names.begin(), names.end(), name) == names.end()) names.emplace_back(name);
      });
  return names;
}

Messages render_prompt(std::string_view template_id, const PromptContext& context) {
  const auto& def = lookup(template_id);
  std::map<std::string, const std::string*> values;
  for (const auto& [key, value] : context) {
    std::string upper(key);
    std::transform(upper.begin(), upper.end(), upper.begin(),
                   [](unsigned char c) { return static_cast<char>(std::toupper(c)); });
    values[upper] = &value;
  }
  std::string out;
  scan(
      def.text, [&](std::string_view piece) { out += piece; },
      [&](std::string_view name) {
        const auto it = values.find(std::string(name));
        if (it == values.end()) {
          throw PromptError(PromptError::Kind::MissingPlaceholder, std::string(name));
        }
        out += *it->second;
      });
  return {Message{def.role, std::move(out)}};
}

std::string render_text(std::string_view template_id, const PromptContext& context) {
  return render_prompt(template_id, context).front().content;
}

}  // namespace quorum::gateway
