#include "quorum/evolution.hpp"

#include <future>
#include <map>

#include <spdlog/spdlog.h>

#include "quorum/gateway/prompts.hpp"
#include "quorum/verdict_parser.hpp"

namespace quorum {

using gateway::Role;

json CodebookDraft::to_json() const {
  return {{"author", author},
          {"base_version", base_version},
          {"unchanged", unchanged},
          {"extraction_failed", extraction_failed},
          {"rendered", render_rules(rules)}};
}

namespace {

json rule_json(const Rule& r) {
  return {{"rule_id", r.rule_id},
          {"label", r.label},
          {"label_code", r.label_code},
          {"description", r.description},
          {"examples", r.examples},
          {"clarifications", r.clarifications}};
}

Rule rule_from(const json& doc) {
  Rule r;
  r.rule_id = doc.at("rule_id").get<std::string>();
  r.label = doc.at("label").get<std::string>();
  r.label_code = doc.at("label_code").get<std::string>();
  r.description = doc.at("description").get<std::string>();
  r.examples = doc.at("examples").get<std::vector<std::string>>();
  r.clarifications = doc.at("clarifications").get<std::vector<std::string>>();
  return r;
}

void set_field(Rule& r, const std::string& field, const json& value) {
  if (field == "label") r.label = value.get<std::string>();
  else if (field == "label_code") r.label_code = value.get<std::string>();
  else if (field == "description") r.description = value.get<std::string>();
  else if (field == "examples") r.examples = value.get<std::vector<std::string>>();
  else if (field == "clarifications") r.clarifications = value.get<std::vector<std::string>>();
  else throw DomainError("unknown rule field '" + field + "'");
}

bool contains(const std::vector<std::string>& items, const std::string& item) {
  return std::find(items.begin(), items.end(), item) != items.end();
}

}  // namespace

bool CodebookDiff::empty() const { return added.empty() && removed.empty() && modified.empty(); }

std::string CodebookDiff::summary() const {
  if (empty()) return "no changes\n";
  std::string out;
  if (examples_added > 0) out += "+" + std::to_string(examples_added) + " examples\n";
  for (const auto& r : added) out += "+ rule " + r.rule_id + " (" + r.label + ")\n";
  for (const auto& id : removed) out += "- rule " + id + "\n";
  for (const auto& m : modified) {
    if (m.field == "examples") {
      int removed_examples = 0;
      for (const auto& e : m.before) {
        if (std::find(m.after.begin(), m.after.end(), e) == m.after.end()) ++removed_examples;
      }
      if (removed_examples > 0) out += "~ " + m.rule_id + ": -" + std::to_string(removed_examples) + " examples\n";
      continue;
    }
    out += "~ " + m.rule_id + "." + m.field + ": " + m.before.dump() + " -> " + m.after.dump() + "\n";
  }
  return out;
}

json CodebookDiff::to_json() const {
  json added_json = json::array();
  for (const auto& r : added) added_json.push_back(rule_json(r));
  json modified_json = json::array();
  for (const auto& m : modified) {
    modified_json.push_back({{"rule_id", m.rule_id}, {"field", m.field}, {"before", m.before}, {"after", m.after}});
  }
  return {{"from_version", from_version},
          {"to_version", to_version},
          {"added", added_json},
          {"removed", removed},
          {"modified", modified_json},
          {"examples_added", examples_added},
          {"order", order},
          {"provenance", to_string(provenance)}};
}

CodebookDiff CodebookDiff::from_json(const json& doc) {
  CodebookDiff d;
  d.from_version = doc.at("from_version").get<int>();
  d.to_version = doc.at("to_version").get<int>();
  for (const auto& r : doc.at("added")) d.added.push_back(rule_from(r));
  d.removed = doc.at("removed").get<std::vector<std::string>>();
  for (const auto& m : doc.at("modified")) {
    d.modified.push_back({m.at("rule_id").get<std::string>(), m.at("field").get<std::string>(), m.at("before"),
                          m.at("after")});
  }
  d.examples_added = doc.at("examples_added").get<int>();
  d.order = doc.at("order").get<std::vector<std::string>>();
  d.provenance = provenance_from_string(doc.at("provenance").get<std::string>());
  return d;
}

CodebookDiff diff(const Codebook& base, const Codebook& next) {
  CodebookDiff d;
  d.from_version = base.version;
  d.to_version = next.version;
  d.provenance = next.provenance;
  for (const auto& r : next.rules) {
    d.order.push_back(r.rule_id);
    const Rule* before = base.find(r.rule_id);
    if (!before) {
      d.added.push_back(r);
      continue;
    }
    const auto field = [&](const char* name, const json& a, const json& b) {
      if (a != b) d.modified.push_back({r.rule_id, name, a, b});
    };
    field("label", before->label, r.label);
    field("label_code", before->label_code, r.label_code);
    field("description", before->description, r.description);
    field("examples", before->examples, r.examples);
    field("clarifications", before->clarifications, r.clarifications);
    for (const auto& e : r.examples) {
      if (!contains(before->examples, e)) ++d.examples_added;
    }
  }
  for (const auto& r : base.rules) {
    if (!next.find(r.rule_id)) d.removed.push_back(r.rule_id);
  }
  return d;
}

Codebook apply(const CodebookDiff& d, const Codebook& base) {
  Codebook out;
  out.version = d.to_version;
  out.provenance = d.provenance;
  for (const auto& id : d.order) {
    auto added = std::find_if(d.added.begin(), d.added.end(), [&](const Rule& r) { return r.rule_id == id; });
    if (added != d.added.end()) {
      out.rules.push_back(*added);
      continue;
    }
    const Rule* before = base.find(id);
    if (!before) throw DomainError("diff references unknown rule '" + id + "'");
    Rule r = *before;
    for (const auto& m : d.modified) {
      if (m.rule_id == id) set_field(r, m.field, m.after);
    }
    out.rules.push_back(std::move(r));
  }
  return out;
}

std::string classify_change(const CodebookDiff& d) {
  if (d.empty()) return "none";
  if (!d.added.empty() || !d.removed.empty()) return "structural";
  for (const auto& m : d.modified) {
    if (m.field != "examples" && m.field != "clarifications") return "structural";
  }
  return "enrich";
}

bool parse_agreement(std::string_view reply) {
  const auto blocks = find_json_objects(reply);
  for (auto it = blocks.rbegin(); it != blocks.rend(); ++it) {
    for (const auto& [key, value] : it->value.items()) {
      if (!iequals(key, "agree")) continue;
      if (value.is_boolean()) return value.get<bool>();
      if (value.is_string()) {
        const auto v = to_lower(trim(value.get<std::string>()));
        return v == "yes" || v == "true" || v == "agree";
      }
    }
  }
  const auto lower = to_lower(reply);
  for (const char* negative : {"disagree", "do not agree", "don't agree", "not agree"}) {
    if (lower.find(negative) != std::string::npos) return false;
  }
  return lower.find("agree") != std::string::npos;
}

namespace {

std::string format_instruction() { return std::string(gateway::template_text(gateway::templates::kCodebookFormat)); }

void emit(EvolutionContext& ctx, const std::string& type, json payload) {
  if (ctx.events) ctx.events->emit(type, std::move(payload));
}

template <typename Fn>
auto for_each_agent(EvolutionContext& ctx, Fn fn) {
  using R = decltype(fn(ctx.sessions.front(), std::size_t{0}));
  std::vector<std::future<R>> jobs;
  for (std::size_t i = 0; i < ctx.sessions.size(); ++i) {
    jobs.push_back(std::async(std::launch::async, [&, i] { return fn(ctx.sessions[i], i); }));
  }
  std::vector<R> out;
  std::exception_ptr error;
  for (auto& j : jobs) {
    try {
      out.push_back(j.get());
    } catch (...) {
      if (!error) error = std::current_exception();
    }
  }
  if (error) std::rethrow_exception(error);
  return out;
}

bool matches_removal(const Rule& r, const std::vector<std::string>& remove) {
  for (const auto& item : remove) {
    if (iequals(r.rule_id, item) || iequals(r.label, item) || iequals(r.label_code, item) ||
        iequals(r.rule_id, rule_id_from_label(item))) {
      return true;
    }
  }
  return false;
}

void enforce_removals(std::vector<Rule>& rules, const std::vector<InterventionRecord>& records) {
  for (const auto& rec : records) {
    if (rec.disposition != Disposition::Applied || rec.role != InterventionRole::Directive) continue;
    if (rec.remove_rules.empty()) continue;
    std::erase_if(rules, [&](const Rule& r) { return matches_removal(r, rec.remove_rules); });
  }
}

InterventionRecord checkpoint(EvolutionContext& ctx, int round, const Codebook& codebook,
                              const std::vector<Rule>& proposal) {
  InterventionRequest req;
  req.request_id = ctx.batch_id + "-evolution-r" + std::to_string(round);
  req.phase = InterventionPhase::Evolution;
  req.role = ctx.policy.role;
  req.batch_id = ctx.batch_id;
  req.round = round;
  req.codebook_version = codebook.version;
  req.context = {{"current", codebook.rendered_text()}, {"proposal", render_rules(proposal)}};
  emit(ctx, "intervention.requested", req.to_json());
  const auto response = ctx.policy.channel->request(req);
  InterventionRecord record;
  record.request_id = req.request_id;
  record.phase = InterventionPhase::Evolution;
  record.role = response.role;
  record.timestamp = ctx.events ? ctx.events->next_timestamp() : std::string();
  if (response.pass) {
    record.disposition = Disposition::Passed;
  } else {
    record.disposition = Disposition::Applied;
    record.expert_text = response.text;
    record.target = response.target;
    record.remove_rules = response.remove_rules;
  }
  emit(ctx, "intervention.applied",
       {{"request_id", req.request_id}, {"batch_id", ctx.batch_id}, {"round", round},
        {"record", record.to_json(ctx.spec)}});
  return record;
}

}  // namespace

std::vector<CodebookDraft> propose_drafts(EvolutionContext& ctx, const Codebook& codebook) {
  const auto prompt = gateway::render_text(gateway::templates::kCodebookUpdate, {}) + "\n\n" + format_instruction();
  const auto base_text = codebook.rendered_text();
  return for_each_agent(ctx, [&](gateway::AgentSession& session, std::size_t) {
    CodebookDraft draft;
    draft.author = session.agent_id();
    draft.base_version = codebook.version;
    draft.change_note = session.complete(ctx.backend, {{Role::User, prompt}});
    auto rules = extract_codebook_section(draft.change_note, &codebook, &ctx.spec);
    if (!rules) {
      draft.extraction_failed = true;
      draft.rules = codebook.rules;
      draft.unchanged = true;
      return draft;
    }
    draft.rules = std::move(*rules);
    draft.unchanged = render_rules(draft.rules) == base_text;
    return draft;
  });
}

EvolutionResult mediate(EvolutionContext& ctx, std::vector<CodebookDraft> drafts, const Codebook& codebook) {
  EvolutionResult result;
  result.codebook = codebook;
  result.change_kind = "none";
  for (const auto& d : drafts) {
    if (d.extraction_failed) result.warnings.push_back("no CODEBOOK section in the reply of " + d.author);
  }
  result.drafts = std::move(drafts);
  const bool all_unchanged = std::all_of(result.drafts.begin(), result.drafts.end(),
                                         [](const CodebookDraft& d) { return d.unchanged; });
  if (all_unchanged) return result;

  std::vector<std::string> draft_texts;
  for (const auto& d : result.drafts) draft_texts.push_back("Response from " + d.author + ":\n" + d.change_note);
  const auto merge_reply = ctx.mediator.complete(
      ctx.backend, gateway::render_prompt(gateway::templates::kMediatorMerge,
                                          {{"CODEBOOK", codebook.rendered_text()},
                                           {"DRAFTS", join(draft_texts, "\n\n")},
                                           {"FORMAT", format_instruction()}}));
  result.proposals.push_back(merge_reply);
  auto proposal = extract_codebook_section(merge_reply, &codebook, &ctx.spec);
  if (!proposal) {
    result.warnings.push_back("mediator proposal has no CODEBOOK section; codebook kept");
    return result;
  }
  std::vector<Rule> rules = std::move(*proposal);

  bool agreed = false;
  for (int round = 1; round <= ctx.max_rounds && !agreed; ++round) {
    if (ctx.policy.in_evolution()) {
      result.interventions.push_back(checkpoint(ctx, round, codebook, rules));
      enforce_removals(rules, result.interventions);
    }
    const auto& records = result.interventions;
    const auto rendered = render_rules(rules);
    auto replies = for_each_agent(ctx, [&](gateway::AgentSession& session, std::size_t) {
      std::string content;
      for (const auto& rec : records) {
        if (rec.applies_to(session.agent_id())) content += intervention_wrapper(rec) + "\n\n";
      }
      content += gateway::render_text(gateway::templates::kRatify, {{"CODEBOOK", rendered}});
      return session.complete(ctx.backend, {{Role::User, content}});
    });
    result.ratification_rounds = round;
    json votes = json::object();
    std::vector<std::string> dissent;
    agreed = true;
    for (std::size_t i = 0; i < replies.size(); ++i) {
      const bool yes = parse_agreement(replies[i]);
      votes[ctx.sessions[i].agent_id()] = yes;
      if (!yes) {
        agreed = false;
        dissent.push_back("Response from " + ctx.sessions[i].agent_id() + ":\n" + replies[i]);
      }
    }
    emit(ctx, "codebook.ratification", {{"batch_id", ctx.batch_id}, {"round", round}, {"votes", votes},
                                        {"agreed", agreed}});
    if (agreed || round == ctx.max_rounds) break;
    const auto revised = ctx.mediator.complete(
        ctx.backend, gateway::render_prompt(gateway::templates::kMediatorRevise,
                                            {{"RESPONSES", join(dissent, "\n\n")}, {"FORMAT", format_instruction()}}));
    result.proposals.push_back(revised);
    if (auto next = extract_codebook_section(revised, &codebook, &ctx.spec)) {
      rules = std::move(*next);
    } else {
      result.warnings.push_back("revised proposal has no CODEBOOK section; previous proposal kept");
    }
  }
  enforce_removals(rules, result.interventions);
  result.forced_merge = !agreed;

  Codebook adopted;
  adopted.rules = std::move(rules);
  try {
    adopted.validate();
  } catch (const DomainError& e) {
    result.warnings.push_back(std::string("proposal rejected: ") + e.what());
    return result;
  }
  if (adopted.rendered_text() == codebook.rendered_text()) return result;
  adopted.version = codebook.version + 1;
  adopted.provenance = Provenance::Evolved;
  result.change_kind = classify_change(diff(codebook, adopted));
  result.codebook = std::move(adopted);
  result.changed = true;
  return result;
}

EvolutionResult evolve_codebook(EvolutionContext& ctx, const Codebook& codebook) {
  try {
    return mediate(ctx, propose_drafts(ctx, codebook), codebook);
  } catch (const gateway::GatewayError& e) {
    spdlog::warn("codebook evolution skipped: {}", e.what());
    EvolutionResult result;
    result.codebook = codebook;
    result.change_kind = "none";
    result.warnings.push_back(std::string("evolution skipped: ") + e.what());
    return result;
  }
}

}  // namespace quorum
