#include "quorum/orchestrator.hpp"

#include <spdlog/fmt/fmt.h>
#include <spdlog/spdlog.h>

#include "quorum/annotation.hpp"
#include "quorum/discussion.hpp"
#include "quorum/evolution.hpp"
#include "quorum/gateway/mock_backend.hpp"

namespace quorum {

std::vector<std::vector<TextEntry>> split_batches(const std::vector<TextEntry>& entries, std::size_t batch_size) {
  if (batch_size == 0) throw DomainError("batch size must be positive");
  std::vector<std::vector<TextEntry>> out;
  for (std::size_t i = 0; i < entries.size(); i += batch_size) {
    out.emplace_back(entries.begin() + static_cast<std::ptrdiff_t>(i),
                     entries.begin() + static_cast<std::ptrdiff_t>(std::min(entries.size(), i + batch_size)));
  }
  return out;
}

std::string default_run_id(const RunConfig& config) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : config.to_json(false).dump()) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return fmt::format("{}-{:08x}", config.task.task_id, static_cast<std::uint32_t>(h ^ (h >> 32)));
}

std::string backbone_name(const gateway::BackendDescriptor& backend) {
  if (const auto* live = std::get_if<gateway::OpenAiCompatible>(&backend)) return live->model_id;
  return "mock";
}

namespace {

struct LoopState {
  std::size_t next_batch = 0;
  Codebook codebook;
  std::map<std::string, std::uint64_t> counters;
};

std::unique_ptr<Clock> make_clock(const RunConfig& c) {
  if (c.logical_clock) return std::make_unique<LogicalClock>();
  return std::make_unique<SystemClock>();
}

std::string batch_id_for(std::size_t index) { return "b" + std::to_string(index + 1); }

json counters_json(const std::map<std::string, std::uint64_t>& counters) {
  json out = json::object();
  for (const auto& [k, v] : counters) out[k] = v;
  return out;
}

std::string csv_for(const RunConfig& config, const RunRecord& record) {
  return render_csv(records_csv_rows(config, {record}));
}

// Drives batches from state.next_batch to the end, emitting events into `log`.
void drive(const RunConfig& config, const std::string& run_id, RunStore& store, EventLog& log,
           RunRecord& record, LoopState state, const std::vector<TextEntry>& entries, const PipelineHooks& hooks) {
  std::unique_ptr<InterventionChannel> owned_channel;
  InterventionChannel* channel = nullptr;
  if (config.intervention.scope != InterventionScope::None) {
    if (!config.intervention.scripted.is_null()) {
      owned_channel = std::make_unique<ScriptedChannel>(
          ScriptedChannel::rules_from_json(config.intervention.scripted, config.task, config.intervention.role));
      channel = owned_channel.get();
    } else if (hooks.channel) {
      channel = hooks.channel;
    } else {
      owned_channel = std::make_unique<InterventionQueue>(config.intervention.role, config.intervention.wait,
                                                          config.intervention.timeout);
      channel = owned_channel.get();
    }
  }
  const InterventionPolicy policy{config.intervention.scope, config.intervention.role, channel};

  std::shared_ptr<gateway::ChatBackend> backend = hooks.backend;
  if (!backend) backend = gateway::make_backend(config.backend, config.task, config.seed);

  const auto batches = split_batches(entries, static_cast<std::size_t>(config.batch_size));
  std::string current_batch;
  try {
    for (std::size_t index = state.next_batch; index < batches.size(); ++index) {
      const auto& batch = batches[index];
      const auto batch_id = batch_id_for(index);
      current_batch = batch_id;
      std::vector<std::string> ids;
      for (const auto& e : batch) ids.push_back(e.entry_id);
      log.emit("batch.started", {{"batch_id", batch_id},
                                 {"index", index},
                                 {"entry_ids", ids},
                                 {"codebook_version", state.codebook.version}});

      gateway::Sampling sampling;
      sampling.temperature = config.temperature;
      sampling.seed = config.seed;
      std::vector<gateway::AgentSession> sessions;
      for (const auto& a : config.agents) {
        sessions.emplace_back(a.agent_id, a.persona, sampling, state.counters[a.agent_id]);
      }

      const auto matrix = annotate_batch(sessions, *backend, batch, state.codebook, config.task,
                                         {config.strategy, config.per_entry_coding}, batch_id);
      log.emit("annotation.completed", {{"batch_id", batch_id}, {"matrix", matrix.to_json(config.task)}});

      DiscussionContext dctx{config.task, *backend, sessions, config.max_rounds, policy, &log, batch_id,
                             state.codebook.version, config.peer_char_budget};
      std::vector<DiscussionOutcome> outcomes;
      for (const auto& entry : batch) outcomes.push_back(discuss_entry(entry, matrix.row(entry.entry_id), dctx));

      if (config.evolve_every > 0 && (index + 1) % static_cast<std::size_t>(config.evolve_every) == 0) {
        gateway::AgentSession mediator(std::string(kMediatorId), gateway::mediator_persona(), sampling,
                                       state.counters[std::string(kMediatorId)]);
        EvolutionContext ectx{config.task, *backend, sessions, mediator, config.effective_mediation_rounds(),
                              policy, &log, batch_id};
        auto result = evolve_codebook(ectx, state.codebook);
        json drafts = json::array();
        for (const auto& d : result.drafts) drafts.push_back(d.to_json());
        if (result.changed) {
          store.write_codebook(run_id, result.codebook);
          log.emit("codebook.evolved", {{"batch_id", batch_id},
                                        {"from_version", state.codebook.version},
                                        {"to_version", result.codebook.version},
                                        {"diff", diff(state.codebook, result.codebook).to_json()},
                                        {"forced_merge", result.forced_merge},
                                        {"change_kind", result.change_kind},
                                        {"ratification_rounds", result.ratification_rounds},
                                        {"drafts", drafts},
                                        {"warnings", result.warnings}});
          state.codebook = result.codebook;
        } else {
          log.emit("codebook.unchanged", {{"batch_id", batch_id},
                                          {"version", state.codebook.version},
                                          {"drafts", drafts},
                                          {"warnings", result.warnings}});
        }
        for (const auto& w : result.warnings) spdlog::warn("{} {}: {}", run_id, batch_id, w);
        state.counters[std::string(kMediatorId)] = mediator.call_index();
      }
      for (const auto& s : sessions) state.counters[s.agent_id()] = s.call_index();

      const auto metrics = batch_metrics(matrix, outcomes, batch, config.task);
      log.emit("batch.completed", {{"batch_id", batch_id},
                                   {"index", index},
                                   {"metrics", metrics.to_json()},
                                   {"codebook_version", state.codebook.version},
                                   {"call_counters", counters_json(state.counters)}});
    }

    std::vector<BatchMetrics> batch_list;
    for (const auto& b : record.batches) batch_list.push_back(*b.metrics);
    const auto metrics = run_metrics(batch_list, entries, record.outcomes(), config.task);
    log.emit("run.completed", {{"metrics", metrics.to_json()}, {"codebook_version", state.codebook.version}});
    store.write_metrics_csv(run_id, csv_for(config, record));
  } catch (const std::exception& e) {
    spdlog::error("run {} failed: {}", run_id, e.what());
    log.emit("run.failed", {{"batch_id", current_batch}, {"error", e.what()}});
  }
  log.close();
}

RunRecord start_log(const RunConfig& config, const std::string& run_id, RunStore& store, EventLog& log,
                    std::vector<Event> existing, const PipelineHooks& hooks) {
  RunRecord record = RunRecord::replay(existing);
  log.attach_file(store.events_path(run_id), std::move(existing));
  if (hooks.on_start) hooks.on_start(run_id, log);
  (void)config;
  return record;
}

}  // namespace

RunRecord run_pipeline(const RunConfig& config, const PipelineHooks& hooks) {
  const auto entries = load_dataset(config.dataset, config.task);
  if (entries.empty()) throw DatasetInvalid(0, "dataset has no entries");

  RunStore store(config.store);
  const auto run_id = store.unique_run_id(config.run_id.value_or(default_run_id(config)));
  store.create(run_id, config.to_json());
  LoopState state;
  state.codebook = config.initial_codebook();
  store.write_codebook(run_id, state.codebook);

  EventLog log(make_clock(config));
  RunRecord record = start_log(config, run_id, store, log, {}, hooks);
  log.add_listener([&record](const Event& e) { record.apply_event(e); });
  log.emit("run.started", {{"run_id", run_id},
                           {"config", config.to_json(false)},
                           {"codebook_version", state.codebook.version},
                           {"entries", entries.size()}});
  drive(config, run_id, store, log, record, std::move(state), entries, hooks);
  return record;
}

RunRecord resume_run(const std::filesystem::path& store_root, const std::string& run_id,
                     const PipelineHooks& hooks) {
  RunStore store(store_root);
  auto config = RunConfig::from_json(store.read_config(run_id), store.run_dir(run_id));
  config.store = store_root;
  auto events = store.read_events(run_id);
  if (events.empty() || events.front().type != "run.started") throw CorruptLog(1, "log has no run.started");

  auto record = RunRecord::replay(events);
  if (record.status == RunStatus::Completed) return record;

  std::size_t keep = 1;
  for (std::size_t i = 0; i < events.size(); ++i) {
    if (events[i].type == "batch.completed") keep = i + 1;
  }
  events.resize(keep);
  record = RunRecord::replay(events);

  std::size_t completed = 0;
  LoopState state;
  for (const auto& b : record.batches) {
    if (!b.completed) break;
    ++completed;
    for (const auto& [agent, count] : b.call_counters.items()) state.counters[agent] = count.get<std::uint64_t>();
  }
  state.next_batch = completed;
  store.remove_codebooks_after(run_id, record.codebook_version);
  state.codebook = store.read_codebook(run_id, record.codebook_version);
  store.rewrite_events(run_id, events);

  const auto entries = load_dataset(config.dataset, config.task);
  EventLog log(make_clock(config));
  record = start_log(config, run_id, store, log, events, hooks);
  log.add_listener([&record](const Event& e) { record.apply_event(e); });
  log.emit("run.resumed", {{"completed_batches", completed}, {"codebook_version", state.codebook.version}});
  drive(config, run_id, store, log, record, std::move(state), entries, hooks);
  return record;
}

std::vector<RunRecord> run_repeated(const RunConfig& config, const PipelineHooks& hooks) {
  std::vector<RunRecord> records;
  const auto base_id = config.run_id.value_or(default_run_id(config));
  for (int r = 0; r < config.runs; ++r) {
    RunConfig c = config;
    c.seed = config.seed + static_cast<std::uint64_t>(r);
    c.run_id = config.runs == 1 ? base_id : base_id + "-r" + std::to_string(r + 1);
    records.push_back(run_pipeline(c, hooks));
  }
  return records;
}

std::vector<CsvRow> records_csv_rows(const RunConfig& config, const std::vector<RunRecord>& records) {
  std::vector<RunMetrics> metrics;
  for (const auto& r : records) {
    if (r.metrics) metrics.push_back(*r.metrics);
  }
  if (metrics.empty()) throw DomainError("no completed run to report");
  return csv_rows(config.task, backbone_name(config.backend), config.strategy.name(),
                  static_cast<int>(config.agents.size()), config.batch_size, config.max_rounds, metrics);
}

SweepAxis sweep_axis_from_string(std::string_view text) {
  if (iequals(text, "B")) return SweepAxis::B;
  if (iequals(text, "K")) return SweepAxis::K;
  if (iequals(text, "N")) return SweepAxis::N;
  throw DomainError("sweep axis must be B, K or N");
}

SweepResult sweep(const RunConfig& base, SweepAxis axis, const std::vector<int>& values, const PipelineHooks& hooks) {
  if (values.empty()) throw DomainError("sweep needs at least one value");
  SweepResult result;
  const auto base_id = base.run_id.value_or(default_run_id(base));
  for (int value : values) {
    RunConfig c = base;
    std::string tag;
    switch (axis) {
      case SweepAxis::B:
        if (value < 1) throw DomainError("B must be at least 1");
        c.batch_size = value;
        tag = "B";
        break;
      case SweepAxis::K:
        if (value < 0) throw DomainError("K must not be negative");
        c.max_rounds = value;
        tag = "K";
        break;
      case SweepAxis::N: {
        if (value < 1) throw DomainError("N must be at least 1");
        std::vector<AgentSpec> agents = base.agents;
        for (const auto& p : gateway::builtin_personas()) {
          if (std::none_of(agents.begin(), agents.end(), [&](const AgentSpec& a) { return a.agent_id == p.persona_id; })) {
            agents.push_back({p.persona_id, p});
          }
        }
        if (static_cast<std::size_t>(value) > agents.size()) {
          throw DomainError("N=" + std::to_string(value) + " exceeds the available personas");
        }
        agents.resize(static_cast<std::size_t>(value));
        c.agents = agents;
        tag = "N";
        break;
      }
    }
    c.run_id = base_id + "-" + tag + std::to_string(value);
    auto records = run_repeated(c, hooks);
    for (const auto& r : records) result.run_ids.push_back(r.run_id);
    auto rows = records_csv_rows(c, records);
    result.rows.insert(result.rows.end(), rows.begin(), rows.end());
  }
  return result;
}

}  // namespace quorum
