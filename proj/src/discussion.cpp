#include "quorum/discussion.hpp"

#include <future>

#include "quorum/annotation.hpp"
#include "quorum/gateway/prompts.hpp"
#include "quorum/gateway/strategy.hpp"

namespace quorum {

namespace {

constexpr std::pair<Resolution, std::string_view> kResolutions[] = {
    {Resolution::PreAgreed, "PreAgreed"},
    {Resolution::Converged, "Converged"},
    {Resolution::MajorityFallback, "MajorityFallback"},
    {Resolution::FirstAgentFallback, "FirstAgentFallback"},
    {Resolution::Failed, "Failed"}};

bool utf8_continuation(char c) { return (static_cast<unsigned char>(c) & 0xC0) == 0x80; }

std::string utf8_prefix(const std::string& text, std::size_t n) {
  if (text.size() <= n) return text;
  while (n > 0 && utf8_continuation(text[n])) --n;
  return text.substr(0, n);
}

std::string utf8_suffix(const std::string& text, std::size_t n) {
  if (text.size() <= n) return text;
  std::size_t start = text.size() - n;
  while (start < text.size() && utf8_continuation(text[start])) ++start;
  return text.substr(start);
}

json verdicts_json(const std::vector<Verdict>& verdicts, const TaskSpec& spec) {
  json out = json::array();
  for (const auto& v : verdicts) out.push_back(verdict_to_json(v, spec));
  return out;
}

std::vector<Verdict> verdicts_from(const json& doc, const TaskSpec& spec) {
  std::vector<Verdict> out;
  for (const auto& v : doc) out.push_back(verdict_from_json(v, spec));
  return out;
}

void emit(DiscussionContext& ctx, const std::string& type, json payload) {
  if (ctx.events) ctx.events->emit(type, std::move(payload));
}

InterventionRecord checkpoint(const TextEntry& entry, int round, const std::vector<Verdict>& current,
                              DiscussionContext& ctx) {
  InterventionRequest req;
  req.request_id = ctx.batch_id + "-e" + entry.entry_id + "-r" + std::to_string(round);
  req.phase = InterventionPhase::Discussion;
  req.role = ctx.policy.role;
  req.batch_id = ctx.batch_id;
  req.entry_id = entry.entry_id;
  req.entry_excerpt = utf8_prefix(entry.text, 280);
  req.round = round;
  req.codebook_version = ctx.codebook_version;
  json verdicts = json::array();
  for (const auto& v : current) {
    verdicts.push_back({{"agent_id", v.agent_id},
                        {"labels", v.labels ? labels_to_json(*v.labels, ctx.spec) : json(nullptr)},
                        {"rationale_tail", utf8_suffix(v.rationale, 600)}});
  }
  req.context = {{"verdicts", verdicts}};
  emit(ctx, "intervention.requested", req.to_json());

  const auto response = ctx.policy.channel->request(req);
  InterventionRecord record;
  record.request_id = req.request_id;
  record.phase = InterventionPhase::Discussion;
  record.role = response.role;
  record.timestamp = ctx.events ? ctx.events->next_timestamp() : std::string();
  if (response.pass) {
    record.disposition = Disposition::Passed;
  } else {
    record.disposition = Disposition::Applied;
    record.expert_text = response.text;
    record.target = response.target;
    record.directive_labels = response.directive_labels;
    record.remove_rules = response.remove_rules;
  }
  emit(ctx, "intervention.applied",
       {{"request_id", req.request_id},
        {"batch_id", ctx.batch_id},
        {"entry_id", entry.entry_id},
        {"round", round},
        {"record", record.to_json(ctx.spec)}});
  return record;
}

std::string peer_responses(const std::vector<Verdict>& current, std::size_t self, std::size_t budget) {
  std::vector<std::string> parts;
  for (std::size_t j = 0; j < current.size(); ++j) {
    if (j == self) continue;
    const auto& v = current[j];
    const auto body = v.rationale.empty() ? std::string("(no response)") : truncate_middle(v.rationale, budget);
    parts.push_back("Response from " + v.agent_id + ":\n" + body);
  }
  return join(parts, "\n\n");
}

}  // namespace

std::string_view to_string(Resolution r) {
  for (const auto& [value, name] : kResolutions) {
    if (value == r) return name;
  }
  return "?";
}

Resolution resolution_from_string(std::string_view text) {
  for (const auto& [value, name] : kResolutions) {
    if (name == text) return value;
  }
  throw DomainError("unknown resolution '" + std::string(text) + "'");
}

const std::vector<Verdict>& DiscussionOutcome::final_verdicts() const {
  return rounds.empty() ? initial : rounds.back().verdicts;
}

json DiscussionOutcome::to_json(const TaskSpec& spec) const {
  json rounds_json = json::array();
  for (const auto& r : rounds) {
    json interventions = json::array();
    for (const auto& rec : r.interventions) interventions.push_back(rec.to_json(spec));
    rounds_json.push_back({{"round", r.round_no},
                           {"verdicts", verdicts_json(r.verdicts, spec)},
                           {"judge", r.judge_result},
                           {"interventions", interventions},
                           {"overrides", r.overrides}});
  }
  return {{"entry_id", entry_id},
          {"initial", verdicts_json(initial, spec)},
          {"rounds", rounds_json},
          {"converged", converged},
          {"final_labels", final_labels ? labels_to_json(*final_labels, spec) : json(nullptr)},
          {"resolution", to_string(resolution)},
          {"converged_round", converged_round},
          {"calls", calls}};
}

DiscussionOutcome DiscussionOutcome::from_json(const json& doc, const TaskSpec& spec) {
  DiscussionOutcome o;
  o.entry_id = doc.at("entry_id").get<std::string>();
  o.initial = verdicts_from(doc.at("initial"), spec);
  for (const auto& r : doc.at("rounds")) {
    DiscussionRound round;
    round.round_no = r.at("round").get<int>();
    round.verdicts = verdicts_from(r.at("verdicts"), spec);
    round.judge_result = r.at("judge").get<bool>();
    for (const auto& rec : r.at("interventions")) {
      round.interventions.push_back(InterventionRecord::from_json(rec, spec));
    }
    round.overrides = r.at("overrides").get<std::vector<std::string>>();
    o.rounds.push_back(std::move(round));
  }
  o.converged = doc.at("converged").get<bool>();
  if (!doc.at("final_labels").is_null()) o.final_labels = labels_from_json(doc.at("final_labels"), spec);
  o.resolution = resolution_from_string(doc.at("resolution").get<std::string>());
  o.converged_round = doc.at("converged_round").get<int>();
  o.calls = doc.at("calls").get<int>();
  return o;
}

bool judge(const std::vector<Verdict>& verdicts) {
  if (verdicts.empty()) return false;
  for (const auto& v : verdicts) {
    if (v.failed()) return false;
  }
  for (std::size_t i = 1; i < verdicts.size(); ++i) {
    if (!labels_equal(*verdicts[i].labels, *verdicts.front().labels)) return false;
  }
  return true;
}

std::optional<LabelAssignment> fallback_labels(const std::vector<Verdict>& verdicts, Resolution& resolution) {
  for (std::size_t i = 0; i < verdicts.size(); ++i) {
    if (verdicts[i].failed()) continue;
    std::size_t votes = 0;
    for (const auto& other : verdicts) {
      if (!other.failed() && labels_equal(*other.labels, *verdicts[i].labels)) ++votes;
    }
    if (2 * votes > verdicts.size()) {
      resolution = Resolution::MajorityFallback;
      return verdicts[i].labels;
    }
  }
  for (const auto& v : verdicts) {
    if (!v.failed()) {
      resolution = Resolution::FirstAgentFallback;
      return v.labels;
    }
  }
  resolution = Resolution::Failed;
  return std::nullopt;
}

std::string truncate_middle(const std::string& text, std::size_t budget) {
  static constexpr std::string_view kMarker = "\n[...]\n";
  if (text.size() <= budget) return text;
  if (budget <= kMarker.size()) return utf8_prefix(text, budget);
  const auto keep = budget - kMarker.size();
  const auto head = utf8_prefix(text, keep - keep / 2);
  const auto tail = utf8_suffix(text, keep / 2);
  return head + std::string(kMarker) + tail;
}

DiscussionOutcome discuss_entry(const TextEntry& entry, const std::vector<Verdict>& round0,
                                DiscussionContext& ctx) {
  if (round0.size() != ctx.sessions.size()) {
    throw DomainError("discuss_entry: one round-0 verdict per agent required");
  }
  DiscussionOutcome out;
  out.entry_id = entry.entry_id;
  out.initial = round0;

  std::uint64_t calls_start = 0;
  for (const auto& s : ctx.sessions) calls_start += s.call_index();

  const auto resolve = [&] {
    std::uint64_t calls_end = 0;
    for (const auto& s : ctx.sessions) calls_end += s.call_index();
    out.calls = static_cast<int>(calls_end - calls_start);
    emit(ctx, "entry.resolved",
         {{"batch_id", ctx.batch_id},
          {"entry_id", entry.entry_id},
          {"resolution", to_string(out.resolution)},
          {"converged", out.converged},
          {"converged_round", out.converged_round},
          {"rounds", out.rounds.size()},
          {"calls", out.calls},
          {"final_labels", out.final_labels ? labels_to_json(*out.final_labels, ctx.spec) : json(nullptr)}});
    return out;
  };

  if (judge(round0)) {
    out.resolution = Resolution::PreAgreed;
    out.converged = true;
    out.final_labels = round0.front().labels;
    return resolve();
  }

  const auto format_line = answer_format_line(ctx.spec);
  const auto text_line = "TEXT: " + std::to_string(entry.ordinal) + ". " + entry.text;
  std::vector<Verdict> current = round0;

  for (int r = 1; r <= ctx.max_rounds; ++r) {
    DiscussionRound round;
    round.round_no = r;
    if (ctx.policy.in_discussion()) round.interventions.push_back(checkpoint(entry, r, current, ctx));

    std::vector<std::future<Verdict>> jobs;
    for (std::size_t i = 0; i < ctx.sessions.size(); ++i) {
      std::string content;
      for (const auto& rec : round.interventions) {
        if (rec.applies_to(ctx.sessions[i].agent_id())) content += intervention_wrapper(rec) + "\n\n";
      }
      content += gateway::render_text(
          gateway::templates::kDiscussion,
          {{"TEXT", text_line}, {"RESPONSES", peer_responses(current, i, ctx.peer_char_budget)}});
      content += "\n\n" + format_line;

      jobs.push_back(std::async(std::launch::async, [&, i, content = std::move(content)] {
        auto& session = ctx.sessions[i];
        Verdict v;
        v.agent_id = session.agent_id();
        v.entry_id = entry.entry_id;
        v.round = r;
        try {
          auto result = gateway::complete_and_parse(session, ctx.backend, {{gateway::Role::User, content}},
                                                    ctx.spec);
          v.labels = std::move(result.labels);
          v.rationale = std::move(result.rationale);
        } catch (const gateway::VerdictUnparseable& e) {
          v.labels = current[i].labels;
          v.rationale = current[i].rationale;
          v.carried_over = current[i].labels.has_value();
          v.failure = e.failure().message();
        }
        return v;
      }));
    }
    std::exception_ptr error;
    for (auto& job : jobs) {
      try {
        round.verdicts.push_back(job.get());
      } catch (...) {
        if (!error) error = std::current_exception();
      }
    }
    if (error) std::rethrow_exception(error);

    for (const auto& rec : round.interventions) {
      if (rec.role != InterventionRole::Directive || !rec.directive_labels) continue;
      for (auto& v : round.verdicts) {
        if (!rec.applies_to(v.agent_id)) continue;
        if (!v.failed() && labels_equal(*v.labels, *rec.directive_labels)) continue;
        v.labels = rec.directive_labels;
        v.overridden = true;
        v.rationale += "\n\nExpert directive applied:\n" + render_labels_json(*rec.directive_labels, ctx.spec);
        round.overrides.push_back(v.agent_id);
      }
    }

    round.judge_result = judge(round.verdicts);
    current = round.verdicts;
    json interventions = json::array();
    for (const auto& rec : round.interventions) interventions.push_back(rec.to_json(ctx.spec));
    out.rounds.push_back(round);
    emit(ctx, "discussion.round",
         {{"batch_id", ctx.batch_id},
          {"entry_id", entry.entry_id},
          {"round", r},
          {"verdicts", verdicts_json(round.verdicts, ctx.spec)},
          {"judge", round.judge_result},
          {"interventions", interventions},
          {"overrides", round.overrides}});
    if (round.judge_result) {
      out.converged = true;
      out.converged_round = r;
      out.resolution = Resolution::Converged;
      out.final_labels = current.front().labels;
      emit(ctx, "discussion.converged", {{"batch_id", ctx.batch_id}, {"entry_id", entry.entry_id}, {"round", r}});
      break;
    }
  }

  if (!out.converged) out.final_labels = fallback_labels(current, out.resolution);
  return resolve();
}

}  // namespace quorum
