#include "quorum/run_record.hpp"

namespace quorum {

std::string_view to_string(RunStatus s) {
  switch (s) {
    case RunStatus::Running: return "Running";
    case RunStatus::AwaitingIntervention: return "AwaitingIntervention";
    case RunStatus::Completed: return "Completed";
    case RunStatus::Failed: return "Failed";
  }
  return "Running";
}

std::vector<DiscussionOutcome> BatchRecord::ordered_outcomes() const {
  std::vector<DiscussionOutcome> out;
  for (const auto& id : entry_ids) {
    if (const auto it = outcomes.find(id); it != outcomes.end()) out.push_back(it->second);
  }
  return out;
}

namespace {

BatchRecord* find_batch(RunRecord& r, const json& payload) {
  const auto id = payload.at("batch_id").get<std::string>();
  for (auto it = r.batches.rbegin(); it != r.batches.rend(); ++it) {
    if (it->batch_id == id) return &*it;
  }
  throw std::invalid_argument("event references unknown batch '" + id + "'");
}

std::vector<Verdict> verdicts_from(const json& doc, const TaskSpec& spec) {
  std::vector<Verdict> out;
  for (const auto& v : doc) out.push_back(verdict_from_json(v, spec));
  return out;
}

}  // namespace

void RunRecord::apply_event(const Event& e) {
  if (e.seq != last_seq + 1) {
    throw std::invalid_argument("event seq " + std::to_string(e.seq) + " follows " + std::to_string(last_seq));
  }
  last_seq = e.seq;
  const auto& p = e.payload;

  if (e.type == "run.started") {
    run_id = p.at("run_id").get<std::string>();
    config = p.at("config");
    spec = TaskSpec::from_json(config.at("task"));
    codebook_version = p.at("codebook_version").get<int>();
    codebook_versions = {codebook_version};
    status = RunStatus::Running;
    return;
  }
  if (!spec) throw std::invalid_argument("event '" + e.type + "' before run.started");

  if (e.type == "run.resumed") {
    const auto completed = p.at("completed_batches").get<std::size_t>();
    if (batches.size() > completed) batches.resize(completed);
    status = RunStatus::Running;
    error.clear();
    pending_intervention = nullptr;
  } else if (e.type == "batch.started") {
    BatchRecord b;
    b.batch_id = p.at("batch_id").get<std::string>();
    b.index = p.at("index").get<int>();
    b.entry_ids = p.at("entry_ids").get<std::vector<std::string>>();
    b.codebook_version = p.at("codebook_version").get<int>();
    batches.push_back(std::move(b));
  } else if (e.type == "annotation.completed") {
    auto* b = find_batch(*this, p);
    b->matrix = AnnotationMatrix::from_json(p.at("matrix"), *spec);
    for (const auto& id : b->entry_ids) {
      DiscussionOutcome o;
      o.entry_id = id;
      o.initial = b->matrix->row(id);
      b->outcomes[id] = std::move(o);
    }
  } else if (e.type == "discussion.round") {
    auto* b = find_batch(*this, p);
    auto& o = b->outcomes.at(p.at("entry_id").get<std::string>());
    DiscussionRound round;
    round.round_no = p.at("round").get<int>();
    round.verdicts = verdicts_from(p.at("verdicts"), *spec);
    round.judge_result = p.at("judge").get<bool>();
    for (const auto& rec : p.at("interventions")) {
      round.interventions.push_back(InterventionRecord::from_json(rec, *spec));
    }
    round.overrides = p.at("overrides").get<std::vector<std::string>>();
    o.rounds.push_back(std::move(round));
  } else if (e.type == "entry.resolved") {
    auto* b = find_batch(*this, p);
    auto& o = b->outcomes.at(p.at("entry_id").get<std::string>());
    o.resolution = resolution_from_string(p.at("resolution").get<std::string>());
    o.converged = p.at("converged").get<bool>();
    o.converged_round = p.at("converged_round").get<int>();
    o.calls = p.at("calls").get<int>();
    if (!p.at("final_labels").is_null()) o.final_labels = labels_from_json(p.at("final_labels"), *spec);
  } else if (e.type == "intervention.requested") {
    status = RunStatus::AwaitingIntervention;
    pending_intervention = p;
  } else if (e.type == "intervention.applied") {
    status = RunStatus::Running;
    pending_intervention = nullptr;
  } else if (e.type == "codebook.evolved") {
    auto* b = find_batch(*this, p);
    b->evolved_to = p.at("to_version").get<int>();
    b->forced_merge = p.at("forced_merge").get<bool>();
    b->change_kind = p.at("change_kind").get<std::string>();
    codebook_version = *b->evolved_to;
    codebook_versions.push_back(codebook_version);
    for (const auto& w : p.value("warnings", json::array())) warnings.push_back(w.get<std::string>());
  } else if (e.type == "codebook.unchanged") {
    for (const auto& w : p.value("warnings", json::array())) warnings.push_back(w.get<std::string>());
  } else if (e.type == "batch.completed") {
    auto* b = find_batch(*this, p);
    b->metrics = BatchMetrics::from_json(p.at("metrics"));
    b->call_counters = p.at("call_counters");
    b->completed = true;
  } else if (e.type == "run.completed") {
    metrics = RunMetrics::from_json(p.at("metrics"));
    status = RunStatus::Completed;
  } else if (e.type == "run.failed") {
    error = p.at("error").get<std::string>();
    status = RunStatus::Failed;
    pending_intervention = nullptr;
  }
  // Other event types (discussion.converged, codebook.ratification) carry no
  // state beyond what the events above already record.
}

RunRecord RunRecord::replay(const std::vector<Event>& events) {
  RunRecord r;
  for (const auto& e : events) r.apply_event(e);
  return r;
}

std::vector<DiscussionOutcome> RunRecord::outcomes() const {
  std::vector<DiscussionOutcome> out;
  for (const auto& b : batches) {
    auto batch = b.ordered_outcomes();
    out.insert(out.end(), batch.begin(), batch.end());
  }
  return out;
}

json RunRecord::to_json() const {
  json batches_json = json::array();
  for (const auto& b : batches) {
    json outcomes_json = json::array();
    for (const auto& o : b.ordered_outcomes()) {
      outcomes_json.push_back(
          {{"entry_id", o.entry_id},
           {"resolution", to_string(o.resolution)},
           {"converged", o.converged},
           {"converged_round", o.converged_round},
           {"rounds", o.rounds.size()},
           {"final_labels", o.final_labels && spec ? labels_to_json(*o.final_labels, *spec) : json(nullptr)}});
    }
    batches_json.push_back({{"batch_id", b.batch_id},
                            {"index", b.index},
                            {"entry_ids", b.entry_ids},
                            {"codebook_version", b.codebook_version},
                            {"evolved_to", b.evolved_to ? json(*b.evolved_to) : json(nullptr)},
                            {"forced_merge", b.forced_merge},
                            {"change_kind", b.change_kind},
                            {"completed", b.completed},
                            {"metrics", b.metrics ? b.metrics->to_json() : json(nullptr)},
                            {"outcomes", outcomes_json}});
  }
  return {{"run_id", run_id},
          {"status", to_string(status)},
          {"config", config},
          {"batches", batches_json},
          {"codebook_versions", codebook_versions},
          {"codebook_version", codebook_version},
          {"metrics", metrics ? metrics->to_json() : json(nullptr)},
          {"error", error},
          {"last_seq", last_seq},
          {"pending_intervention", pending_intervention},
          {"warnings", warnings}};
}

}  // namespace quorum
