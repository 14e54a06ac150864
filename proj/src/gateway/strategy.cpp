#include "quorum/gateway/strategy.hpp"

#include <regex>

#include "quorum/gateway/prompts.hpp"

namespace quorum::gateway {

std::string Strategy::name() const {
  switch (kind) {
    case Kind::Vanilla: return "Vanilla";
    case Kind::CoT: return "CoT";
    case Kind::ToT: return "ToT";
    case Kind::SelfConsistency: return "SelfConsistency(" + std::to_string(samples) + ")";
  }
  return "Vanilla";
}

Strategy Strategy::parse(std::string_view text) {
  const auto t = trim(text);
  if (iequals(t, "Vanilla")) return {Kind::Vanilla, 3};
  if (iequals(t, "CoT")) return {Kind::CoT, 3};
  if (iequals(t, "ToT")) return {Kind::ToT, 3};
  if (iequals(t, "SelfConsistency")) return {Kind::SelfConsistency, 3};
  static const std::regex sc(R"(SelfConsistency\s*\(\s*(\d+)\s*\))", std::regex::icase);
  std::smatch m;
  if (std::regex_match(t, m, sc)) {
    const int samples = std::stoi(m[1].str());
    if (samples < 1) throw DomainError("SelfConsistency needs at least one sample");
    return {Kind::SelfConsistency, samples};
  }
  throw DomainError("unknown strategy '" + t + "'");
}

Messages apply_strategy_suffix(const Strategy& strategy, Messages prompt) {
  std::string_view id;
  if (strategy.kind == Strategy::Kind::CoT) id = templates::kCotSuffix;
  if (strategy.kind == Strategy::Kind::ToT) id = templates::kTotSuffix;
  if (id.empty() || prompt.empty()) return prompt;
  prompt.back().content += "\n\n" + std::string(template_text(id));
  return prompt;
}

std::optional<VoteResult> majority_vote(const std::vector<std::optional<LabelAssignment>>& samples) {
  std::vector<VoteTally> tally;
  for (std::size_t i = 0; i < samples.size(); ++i) {
    if (!samples[i]) continue;
    auto it = std::find_if(tally.begin(), tally.end(),
                           [&](const VoteTally& t) { return labels_equal(t.labels, *samples[i]); });
    if (it == tally.end()) {
      tally.push_back({*samples[i], 1, i});
    } else {
      ++it->votes;
    }
  }
  if (tally.empty()) return std::nullopt;
  const VoteTally* best = &tally.front();
  for (const auto& t : tally) {
    if (t.votes > best->votes) best = &t;
  }
  return VoteResult{best->first_sample, best->labels, tally};
}

std::string render_vote_rationale(const std::vector<std::string>& samples,
                                  const std::vector<std::optional<LabelAssignment>>& parsed,
                                  const VoteResult& vote, const TaskSpec& spec) {
  std::string out;
  for (std::size_t i = 0; i < samples.size(); ++i) {
    out += "--- Sample " + std::to_string(i + 1) + " ---\n" + samples[i] + "\n";
    if (!parsed[i]) out += "(unparseable)\n";
    out += "\n";
  }
  out += "Vote tally:\n";
  for (const auto& t : vote.tally) {
    out += render_labels_json(t.labels, spec) + ": " + std::to_string(t.votes) + "\n";
  }
  out += "\n" + render_labels_json(vote.labels, spec);
  return out;
}

namespace {

std::optional<LabelAssignment> try_parse(const std::string& reply, const TaskSpec& spec,
                                         ParseFailure* failure = nullptr) {
  auto result = parse_agent_verdict(reply, spec);
  if (auto* labels = std::get_if<LabelAssignment>(&result)) return *labels;
  if (failure) *failure = std::get<ParseFailure>(result);
  return std::nullopt;
}

// The rationale keeps the first reply; the reminder answer supplies the trailing JSON.
StrategyResult reminder_retry(AgentSession& session, ChatBackend& backend, const TaskSpec& spec,
                              const std::string& first_reply, int calls_so_far) {
  const auto reply = session.complete(backend, render_prompt(templates::kFormatReminder, {}));
  ParseFailure failure;
  if (auto labels = try_parse(reply, spec, &failure)) {
    return {*labels, first_reply + "\n\n" + reply, calls_so_far + 1};
  }
  throw VerdictUnparseable(failure, reply);
}

}  // namespace

StrategyResult complete_and_parse(AgentSession& session, ChatBackend& backend, const Messages& prompt,
                                  const TaskSpec& spec) {
  const auto reply = session.complete(backend, prompt);
  if (auto labels = try_parse(reply, spec)) return {*labels, reply, 1};
  return reminder_retry(session, backend, spec, reply, 1);
}

StrategyResult run_strategy(const Strategy& strategy, AgentSession& session, ChatBackend& backend,
                            const Messages& prompt, const TaskSpec& spec) {
  const auto messages = apply_strategy_suffix(strategy, prompt);
  // A single sample has nothing to vote against.
  if (strategy.kind != Strategy::Kind::SelfConsistency || strategy.samples == 1) {
    return complete_and_parse(session, backend, messages, spec);
  }
  const auto samples = session.sample(backend, messages, strategy.samples);
  std::vector<std::optional<LabelAssignment>> parsed;
  for (const auto& s : samples) parsed.push_back(try_parse(s, spec));
  const auto vote = majority_vote(parsed);
  if (!vote) {
    session.commit(messages, samples.front());
    try {
      return reminder_retry(session, backend, spec, samples.front(), strategy.samples);
    } catch (const VerdictUnparseable& e) {
      throw GatewayError(GatewayError::Kind::AllSamplesUnparseable, e.what());
    }
  }
  session.commit(messages, samples[vote->winner_sample]);
  return {vote->labels, render_vote_rationale(samples, parsed, *vote, spec), strategy.samples};
}

}  // namespace quorum::gateway
