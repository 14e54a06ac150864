#include "quorum/annotation.hpp"

#include <future>

#include "quorum/gateway/prompts.hpp"
#include "quorum/verdict_parser.hpp"

namespace quorum {

using gateway::AgentSession;
using gateway::Strategy;

const Verdict& AnnotationMatrix::cell(const std::string& agent_id, const std::string& entry_id) const {
  return verdicts.at(agent_id).at(entry_id);
}

std::vector<Verdict> AnnotationMatrix::row(const std::string& entry_id) const {
  std::vector<Verdict> out;
  for (const auto& agent : agents) out.push_back(cell(agent, entry_id));
  return out;
}

json AnnotationMatrix::to_json(const TaskSpec& spec) const {
  json cells = json::array();
  for (const auto& agent : agents) {
    for (const auto& entry : entries) cells.push_back(verdict_to_json(cell(agent, entry), spec));
  }
  return {{"batch_id", batch_id},
          {"entries", entries},
          {"agents", agents},
          {"codebook_version", codebook_version},
          {"verdicts", cells}};
}

AnnotationMatrix AnnotationMatrix::from_json(const json& doc, const TaskSpec& spec) {
  AnnotationMatrix m;
  m.batch_id = doc.at("batch_id").get<std::string>();
  m.entries = doc.at("entries").get<std::vector<std::string>>();
  m.agents = doc.at("agents").get<std::vector<std::string>>();
  m.codebook_version = doc.at("codebook_version").get<int>();
  for (const auto& cell : doc.at("verdicts")) {
    auto v = verdict_from_json(cell, spec);
    m.verdicts[v.agent_id][v.entry_id] = std::move(v);
  }
  return m;
}

std::string render_batch(const std::vector<TextEntry>& batch) {
  std::vector<std::string> lines;
  for (const auto& e : batch) lines.push_back("TEXT: " + std::to_string(e.ordinal) + ". " + e.text);
  return join(lines, "\n\n");
}

std::string answer_format_line(const TaskSpec& spec) {
  std::vector<std::string> parts;
  bool any_multi = false;
  for (const auto& key : spec.keys) {
    std::string part = "\"" + key.name + "\" (";
    part += key.kind == TaskKind::MultiLabel ? "one or more of " : "one of ";
    part += join(key.codes, ", ") + ")";
    parts.push_back(part);
    any_multi = any_multi || key.kind == TaskKind::MultiLabel;
  }
  std::string line = "State the answer for each TEXT as a JSON object with the key";
  line += spec.keys.size() > 1 ? "s " : " ";
  line += join(parts, ", ") + ".";
  if (any_multi) line += " Separate multiple codes with commas inside one string.";
  return line;
}

namespace {

std::optional<LabelAssignment> parse_labels(std::string_view text, const TaskSpec& spec,
                                            ParseFailure* failure = nullptr) {
  auto result = parse_agent_verdict(text, spec);
  if (auto* labels = std::get_if<LabelAssignment>(&result)) return *labels;
  if (failure) *failure = std::get<ParseFailure>(result);
  return std::nullopt;
}

Verdict make_verdict(const AgentSession& session, const TextEntry& entry) {
  Verdict v;
  v.agent_id = session.agent_id();
  v.entry_id = entry.entry_id;
  v.round = 0;
  return v;
}

// Per-cell reminder for batch replies whose segment did not parse.
void retry_cell(AgentSession& session, gateway::ChatBackend& backend, const TaskSpec& spec,
                const TextEntry& entry, Verdict& verdict) {
  const auto reminder = "TEXT: " + std::to_string(entry.ordinal) + ". " +
                        gateway::render_text(gateway::templates::kFormatReminder, {});
  const auto reply = session.complete(backend, {{gateway::Role::User, reminder}});
  ParseFailure failure;
  if (auto labels = parse_labels(reply, spec, &failure)) {
    verdict.labels = std::move(labels);
    verdict.rationale = verdict.rationale.empty() ? reply : std::string(trim(verdict.rationale)) + "\n\n" + reply;
    verdict.failure.clear();
    return;
  }
  verdict.failure = failure.message();
  verdict.rationale = verdict.rationale.empty() ? reply : std::string(trim(verdict.rationale)) + "\n\n" + reply;
}

std::string segment_or_whole(const std::string& reply, const std::vector<std::string>& segments,
                             std::size_t i) {
  if (!segments[i].empty()) return segments[i];
  return segments.size() == 1 ? reply : std::string();
}

std::map<std::string, Verdict> code_batch(AgentSession& session, gateway::ChatBackend& backend,
                                          const std::vector<TextEntry>& batch, const Codebook& codebook,
                                          const TaskSpec& spec, const Strategy& strategy) {
  const auto text = render_batch(batch) + "\n\n" + answer_format_line(spec);
  const auto prompt = gateway::apply_strategy_suffix(
      strategy, gateway::render_prompt(gateway::templates::kCoding,
                                       {{"PERSONA", session.persona().system_prompt},
                                        {"CODEBOOK", codebook.rendered_text()},
                                        {"TEXT", text}}));
  std::vector<std::size_t> ordinals;
  for (const auto& e : batch) ordinals.push_back(e.ordinal);

  std::vector<Verdict> verdicts;
  for (const auto& e : batch) verdicts.push_back(make_verdict(session, e));

  if (strategy.kind != Strategy::Kind::SelfConsistency || strategy.samples == 1) {
    const auto reply = session.complete(backend, prompt);
    const auto segments = segment_by_ordinal(reply, ordinals);
    for (std::size_t i = 0; i < batch.size(); ++i) {
      verdicts[i].rationale = segment_or_whole(reply, segments, i);
      ParseFailure failure;
      verdicts[i].labels = parse_labels(verdicts[i].rationale, spec, &failure);
      if (!verdicts[i].labels) verdicts[i].failure = failure.message();
    }
  } else {
    const auto samples = session.sample(backend, prompt, strategy.samples);
    std::vector<std::vector<std::string>> sample_segments;
    for (const auto& s : samples) sample_segments.push_back(segment_by_ordinal(s, ordinals));
    std::string committed;
    for (std::size_t i = 0; i < batch.size(); ++i) {
      std::vector<std::string> texts;
      std::vector<std::optional<LabelAssignment>> parsed;
      for (std::size_t k = 0; k < samples.size(); ++k) {
        texts.push_back(segment_or_whole(samples[k], sample_segments[k], i));
        parsed.push_back(parse_labels(texts.back(), spec));
      }
      if (auto vote = gateway::majority_vote(parsed)) {
        verdicts[i].labels = vote->labels;
        verdicts[i].rationale = gateway::render_vote_rationale(texts, parsed, *vote, spec);
        committed += texts[vote->winner_sample];
      } else {
        verdicts[i].rationale = texts.front();
        verdicts[i].failure = "no sample parsed";
        committed += texts.front();
      }
      if (!committed.empty() && committed.back() != '\n') committed += "\n";
    }
    session.commit(prompt, committed.empty() ? samples.front() : committed);
  }

  for (std::size_t i = 0; i < batch.size(); ++i) {
    if (!verdicts[i].labels) retry_cell(session, backend, spec, batch[i], verdicts[i]);
  }
  std::map<std::string, Verdict> out;
  for (auto& v : verdicts) out[v.entry_id] = std::move(v);
  return out;
}

std::map<std::string, Verdict> code_per_entry(AgentSession& session, gateway::ChatBackend& backend,
                                              const std::vector<TextEntry>& batch, const Codebook& codebook,
                                              const TaskSpec& spec, const Strategy& strategy) {
  std::map<std::string, Verdict> out;
  bool first = true;
  for (const auto& entry : batch) {
    const auto text = render_batch({entry}) + "\n\n" + answer_format_line(spec);
    gateway::Messages prompt;
    if (first) {
      prompt = gateway::render_prompt(gateway::templates::kCoding,
                                      {{"PERSONA", session.persona().system_prompt},
                                       {"CODEBOOK", codebook.rendered_text()},
                                       {"TEXT", text}});
    } else {
      prompt = {{gateway::Role::User, text}};
    }
    first = false;
    auto verdict = make_verdict(session, entry);
    try {
      auto result = gateway::run_strategy(strategy, session, backend, prompt, spec);
      verdict.labels = std::move(result.labels);
      verdict.rationale = std::move(result.rationale);
    } catch (const gateway::VerdictUnparseable& e) {
      verdict.failure = e.failure().message();
      verdict.rationale = e.last_reply();
    } catch (const gateway::GatewayError& e) {
      if (e.kind() != gateway::GatewayError::Kind::AllSamplesUnparseable) throw;
      verdict.failure = e.what();
    }
    out[entry.entry_id] = std::move(verdict);
  }
  return out;
}

}  // namespace

AnnotationMatrix annotate_batch(std::vector<AgentSession>& sessions, gateway::ChatBackend& backend,
                                const std::vector<TextEntry>& batch, const Codebook& codebook,
                                const TaskSpec& spec, const AnnotationOptions& options,
                                const std::string& batch_id) {
  if (batch.empty()) throw DomainError("annotate_batch: empty batch");
  AnnotationMatrix matrix;
  matrix.batch_id = batch_id;
  matrix.codebook_version = codebook.version;
  for (const auto& e : batch) matrix.entries.push_back(e.entry_id);

  std::vector<std::future<std::map<std::string, Verdict>>> jobs;
  for (auto& session : sessions) {
    matrix.agents.push_back(session.agent_id());
    jobs.push_back(std::async(std::launch::async, [&, s = &session] {
      return options.per_entry ? code_per_entry(*s, backend, batch, codebook, spec, options.strategy)
                               : code_batch(*s, backend, batch, codebook, spec, options.strategy);
    }));
  }
  // Join in agent order so the first error reported does not depend on timing.
  std::exception_ptr error;
  for (std::size_t i = 0; i < jobs.size(); ++i) {
    try {
      matrix.verdicts[matrix.agents[i]] = jobs[i].get();
    } catch (...) {
      if (!error) error = std::current_exception();
    }
  }
  if (error) std::rethrow_exception(error);
  return matrix;
}

std::set<std::string> pre_agreement_set(const AnnotationMatrix& matrix) {
  std::set<std::string> out;
  for (const auto& entry : matrix.entries) {
    const auto row = matrix.row(entry);
    bool agree = !row.empty();
    for (const auto& v : row) {
      if (v.failed() || !labels_equal(*v.labels, *row.front().labels)) {
        agree = false;
        break;
      }
    }
    if (agree) out.insert(entry);
  }
  return out;
}

}  // namespace quorum
