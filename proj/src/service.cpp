#include "quorum/service.hpp"

#include <httplib.h>
#include <spdlog/spdlog.h>

#include <algorithm>
#include <atomic>
#include <condition_variable>
#include <cstdlib>
#include <thread>

#include "quorum/evolution.hpp"

namespace quorum {

struct RunManager::LiveRun {
  std::string run_id;
  TaskSpec spec;
  mutable std::mutex mutex;
  mutable std::condition_variable cv;
  std::vector<Event> events;
  RunRecord record;
  bool done = false;
  std::string error;
  std::shared_ptr<InterventionQueue> queue;
  std::thread thread;
};

RunManager::RunManager(std::filesystem::path store) : store_(std::move(store)) {}

RunManager::~RunManager() { shutdown(); }

std::shared_ptr<RunManager::LiveRun> RunManager::prepare(RunConfig& config) {
  RunStore store(store_);
  std::lock_guard lock(mutex_);
  const auto base = config.run_id.value_or(default_run_id(config));
  auto id = base;
  for (int i = 2; store.exists(id) || live_.count(id) > 0; ++i) id = base + "-" + std::to_string(i);
  config.run_id = id;
  config.store = store_;

  auto live = std::make_shared<LiveRun>();
  live->run_id = id;
  live->spec = config.task;
  if (config.intervention.scope != InterventionScope::None && config.intervention.scripted.is_null()) {
    live->queue = std::make_shared<InterventionQueue>(config.intervention.role, config.intervention.wait,
                                                      config.intervention.timeout);
  }
  live_[id] = live;
  return live;
}

void RunManager::execute(const std::shared_ptr<LiveRun>& live, const RunConfig& config) {
  PipelineHooks hooks;
  hooks.channel = live->queue.get();
  hooks.on_start = [live](const std::string&, EventLog& log) {
    log.add_listener([live](const Event& e) {
      std::lock_guard lock(live->mutex);
      live->events.push_back(e);
      live->record.apply_event(e);
      live->cv.notify_all();
    });
  };
  try {
    run_pipeline(config, hooks);
  } catch (const std::exception& e) {
    spdlog::error("run {} did not start: {}", live->run_id, e.what());
    std::lock_guard lock(live->mutex);
    live->error = e.what();
  }
  std::lock_guard lock(live->mutex);
  live->done = true;
  live->cv.notify_all();
}

std::string RunManager::start(RunConfig config) {
  auto live = prepare(config);
  live->thread = std::thread([live, config] { execute(live, config); });
  return live->run_id;
}

RunRecord RunManager::run_foreground(RunConfig config) {
  auto live = prepare(config);
  execute(live, config);
  std::lock_guard lock(live->mutex);
  if (!live->error.empty()) throw DomainError(live->error);
  return live->record;
}

std::shared_ptr<RunManager::LiveRun> RunManager::find(const std::string& run_id) const {
  std::lock_guard lock(mutex_);
  const auto it = live_.find(run_id);
  return it == live_.end() ? nullptr : it->second;
}

bool RunManager::known(const std::string& run_id) const {
  return find(run_id) != nullptr || RunStore(store_).exists(run_id);
}

std::vector<std::string> RunManager::list() const {
  auto ids = RunStore(store_).list_runs();
  std::lock_guard lock(mutex_);
  for (const auto& [id, live] : live_) {
    if (std::find(ids.begin(), ids.end(), id) == ids.end()) ids.push_back(id);
  }
  std::sort(ids.begin(), ids.end());
  return ids;
}

std::optional<json> RunManager::snapshot(const std::string& run_id) const {
  if (auto live = find(run_id)) {
    json out;
    {
      std::lock_guard lock(live->mutex);
      out = live->record.to_json();
      out["run_id"] = live->run_id;
      if (!live->error.empty()) {
        out["status"] = "Failed";
        out["error"] = live->error;
      }
    }
    out["pending_intervention"] = pending(run_id).value_or(nullptr);
    return out;
  }
  RunStore store(store_);
  if (!store.exists(run_id)) return std::nullopt;
  return store.load(run_id).to_json();
}

std::optional<RunManager::EventBatch> RunManager::wait_events(const std::string& run_id, std::uint64_t after,
                                                              std::chrono::milliseconds timeout) const {
  EventBatch batch;
  if (auto live = find(run_id)) {
    std::unique_lock lock(live->mutex);
    live->cv.wait_for(lock, timeout, [&] {
      return live->done || (!live->events.empty() && live->events.back().seq > after);
    });
    for (const auto& e : live->events) {
      if (e.seq > after) batch.events.push_back(e);
    }
    batch.finished = live->done;
    return batch;
  }
  RunStore store(store_);
  if (!store.exists(run_id)) return std::nullopt;
  for (auto& e : store.read_events(run_id)) {
    if (e.seq > after) batch.events.push_back(std::move(e));
  }
  batch.finished = true;
  return batch;
}

std::optional<json> RunManager::pending(const std::string& run_id) const {
  auto live = find(run_id);
  if (!live) {
    if (RunStore(store_).exists(run_id)) return json(nullptr);
    return std::nullopt;
  }
  if (!live->queue) return json(nullptr);
  const auto request = live->queue->pending();
  if (!request) return json(nullptr);
  auto view = request->to_json();
  view["run_id"] = run_id;
  return view;
}

std::optional<TaskSpec> RunManager::task_of(const std::string& run_id) const {
  if (auto live = find(run_id)) return live->spec;
  RunStore store(store_);
  if (!store.exists(run_id)) return std::nullopt;
  return store.load(run_id).spec;
}

RunManager::SubmitResult RunManager::submit(const std::string& run_id, const std::string& request_id,
                                            const std::string& body, std::string& error) {
  auto live = find(run_id);
  if (!live) return known(run_id) ? SubmitResult::NotFound : SubmitResult::RunNotFound;
  if (!live->queue) return SubmitResult::NotFound;
  const auto doc = json::parse(body, nullptr, false);
  if (doc.is_discarded() || !doc.is_object()) {
    error = "body is not a JSON object";
    return SubmitResult::Invalid;
  }
  InterventionResponse response;
  try {
    response = intervention_response_from_json(doc, live->spec);
  } catch (const std::exception& e) {
    error = e.what();
    return SubmitResult::Invalid;
  }
  switch (live->queue->submit(request_id, response, doc.dump())) {
    case InterventionQueue::SubmitStatus::Accepted: return SubmitResult::Accepted;
    case InterventionQueue::SubmitStatus::Replayed: return SubmitResult::Replayed;
    case InterventionQueue::SubmitStatus::Conflict: return SubmitResult::Conflict;
    case InterventionQueue::SubmitStatus::NotFound: return SubmitResult::NotFound;
    case InterventionQueue::SubmitStatus::RoleMismatch: return SubmitResult::RoleMismatch;
  }
  return SubmitResult::Invalid;
}

void RunManager::wait_all() {
  std::vector<std::shared_ptr<LiveRun>> runs;
  {
    std::lock_guard lock(mutex_);
    for (const auto& [id, live] : live_) runs.push_back(live);
  }
  for (const auto& live : runs) {
    if (live->thread.joinable()) live->thread.join();
  }
}

void RunManager::shutdown() {
  {
    std::lock_guard lock(mutex_);
    for (const auto& [id, live] : live_) {
      if (live->queue) live->queue->close();
    }
  }
  wait_all();
}

std::string token_from_env() {
  const char* value = std::getenv("QUORUM_API_TOKEN");
  return value ? std::string(value) : std::string();
}

namespace {

void send_json(httplib::Response& res, int status, const json& body) {
  res.status = status;
  res.set_content(body.dump(), "application/json");
}

void send_error(httplib::Response& res, int status, const std::string& message, const std::string& field = {}) {
  json body = {{"error", message}};
  if (!field.empty()) body["field"] = field;
  send_json(res, status, body);
}

std::optional<std::uint64_t> parse_u64(const std::string& text) {
  try {
    std::size_t used = 0;
    const auto v = std::stoull(text, &used);
    if (used != text.size()) return std::nullopt;
    return v;
  } catch (const std::exception&) {
    return std::nullopt;
  }
}

std::string sse_frame(const Event& e) {
  return "id: " + std::to_string(e.seq) + "\nevent: " + e.type + "\ndata: " + event_to_line(e) + "\n\n";
}

}  // namespace

struct Service::Impl {
  RunManager& manager;
  ServiceOptions options;
  httplib::Server server;
  std::thread thread;
  std::atomic<bool> stopping{false};

  Impl(RunManager& m, ServiceOptions o) : manager(m), options(std::move(o)) { routes(); }

  bool authorized(const httplib::Request& req) const {
    if (options.token.empty()) return true;
    if (req.get_header_value("Authorization") == "Bearer " + options.token) return true;
    // EventSource cannot set headers, so the stream also accepts ?token=.
    return req.has_param("token") && req.get_param_value("token") == options.token;
  }

  void routes() {
    server.set_default_headers({{"Access-Control-Allow-Origin", options.cors_origin},
                                {"Access-Control-Allow-Headers", "Authorization, Content-Type, Last-Event-ID"},
                                {"Access-Control-Allow-Methods", "GET, POST, OPTIONS"}});
    server.set_pre_routing_handler([this](const httplib::Request& req, httplib::Response& res) {
      if (req.method == "OPTIONS") {
        res.status = 204;
        return httplib::Server::HandlerResponse::Handled;
      }
      if (req.path.rfind("/runs", 0) == 0 && !authorized(req)) {
        send_error(res, 401, "missing or invalid bearer token");
        return httplib::Server::HandlerResponse::Handled;
      }
      return httplib::Server::HandlerResponse::Unhandled;
    });
    server.set_exception_handler([](const httplib::Request&, httplib::Response& res, std::exception_ptr ep) {
      try {
        std::rethrow_exception(ep);
      } catch (const std::exception& e) {
        send_error(res, 500, e.what());
      }
    });
    if (options.static_dir) {
      if (!server.set_mount_point("/", options.static_dir->string())) {
        spdlog::warn("static directory {} not found", options.static_dir->string());
      }
    }

    server.Post("/runs", [this](const httplib::Request& req, httplib::Response& res) { post_run(req, res); });
    server.Get("/runs", [this](const httplib::Request&, httplib::Response& res) {
      send_json(res, 200, {{"runs", manager.list()}});
    });
    server.Get(R"(/runs/([^/]+))", [this](const httplib::Request& req, httplib::Response& res) {
      const auto snap = manager.snapshot(req.matches[1]);
      if (!snap) return send_error(res, 404, "unknown run");
      send_json(res, 200, *snap);
    });
    server.Get(R"(/runs/([^/]+)/events)",
               [this](const httplib::Request& req, httplib::Response& res) { stream_events(req, res); });
    server.Get(R"(/runs/([^/]+)/interventions/pending)", [this](const httplib::Request& req, httplib::Response& res) {
      const auto view = manager.pending(req.matches[1]);
      if (!view) return send_error(res, 404, "unknown run");
      send_json(res, 200, *view);
    });
    server.Post(R"(/runs/([^/]+)/interventions/([^/]+))",
                [this](const httplib::Request& req, httplib::Response& res) { post_intervention(req, res); });
    server.Get(R"(/runs/([^/]+)/codebooks)", [this](const httplib::Request& req, httplib::Response& res) {
      RunStore store(manager.store());
      if (!store.exists(req.matches[1])) return send_error(res, 404, "unknown run");
      send_json(res, 200, {{"versions", store.codebook_versions(req.matches[1])}});
    });
    server.Get(R"(/runs/([^/]+)/codebooks/diff)", [this](const httplib::Request& req, httplib::Response& res) {
      codebook_diff(req, res);
    });
    server.Get(R"(/runs/([^/]+)/codebooks/(\d+))", [this](const httplib::Request& req, httplib::Response& res) {
      RunStore store(manager.store());
      try {
        send_json(res, 200, store.read_codebook(req.matches[1], std::stoi(req.matches[2])).to_json());
      } catch (const NotFound& e) {
        send_error(res, 404, e.what());
      }
    });
  }

  void post_run(const httplib::Request& req, httplib::Response& res) {
    const auto doc = json::parse(req.body, nullptr, false);
    if (doc.is_discarded() || !doc.is_object()) return send_error(res, 400, "body is not a JSON object", "");
    RunConfig config;
    try {
      config = RunConfig::from_json(doc, std::filesystem::current_path());
      load_dataset(config.dataset, config.task);
    } catch (const ConfigInvalid& e) {
      return send_error(res, 400, e.what(), e.field());
    } catch (const DatasetInvalid& e) {
      return send_error(res, 400, e.what(), "/dataset");
    } catch (const std::exception& e) {
      return send_error(res, 400, e.what());
    }
    send_json(res, 202, {{"run_id", manager.start(std::move(config))}});
  }

  void stream_events(const httplib::Request& req, httplib::Response& res) {
    const std::string run_id = req.matches[1];
    if (!manager.known(run_id)) return send_error(res, 404, "unknown run");
    std::uint64_t after = 0;
    std::string cursor = req.has_param("after") ? req.get_param_value("after") : req.get_header_value("Last-Event-ID");
    if (!cursor.empty()) {
      const auto v = parse_u64(cursor);
      if (!v) return send_error(res, 400, "after must be a non-negative integer");
      after = *v;
    }
    auto position = std::make_shared<std::uint64_t>(after);
    auto idle = std::make_shared<std::chrono::milliseconds>(0);
    res.set_header("Cache-Control", "no-cache");
    res.set_chunked_content_provider("text/event-stream", [this, run_id, position, idle](std::size_t,
                                                                                        httplib::DataSink& sink) {
      constexpr std::chrono::milliseconds kPoll{200};
      if (stopping) {
        sink.done();
        return true;
      }
      const auto batch = manager.wait_events(run_id, *position, kPoll);
      if (!batch) {
        sink.done();
        return true;
      }
      for (const auto& e : batch->events) {
        const auto frame = sse_frame(e);
        if (!sink.write(frame.data(), frame.size())) return false;
        *position = e.seq;
      }
      if (batch->events.empty()) {
        *idle += kPoll;
        if (*idle >= options.keepalive) {
          static constexpr std::string_view kKeepalive = ": keepalive\n\n";
          if (!sink.write(kKeepalive.data(), kKeepalive.size())) return false;
          *idle = std::chrono::milliseconds(0);
        }
      } else {
        *idle = std::chrono::milliseconds(0);
      }
      if (batch->finished) sink.done();
      return true;
    });
  }

  void post_intervention(const httplib::Request& req, httplib::Response& res) {
    std::string error;
    switch (manager.submit(req.matches[1], req.matches[2], req.body, error)) {
      case RunManager::SubmitResult::Accepted:
        return send_json(res, 200, {{"request_id", std::string(req.matches[2])}, {"status", "accepted"}});
      case RunManager::SubmitResult::Replayed:
        return send_json(res, 200, {{"request_id", std::string(req.matches[2])}, {"status", "accepted"}});
      case RunManager::SubmitResult::Conflict: return send_error(res, 409, "request already resolved");
      case RunManager::SubmitResult::NotFound: return send_error(res, 404, "unknown intervention request");
      case RunManager::SubmitResult::RunNotFound: return send_error(res, 404, "unknown run");
      case RunManager::SubmitResult::RoleMismatch:
        return send_error(res, 400, "role does not match the run's intervention role", "/role");
      case RunManager::SubmitResult::Invalid: return send_error(res, 400, error);
    }
  }

  void codebook_diff(const httplib::Request& req, httplib::Response& res) {
    RunStore store(manager.store());
    const std::string run_id = req.matches[1];
    if (!store.exists(run_id)) return send_error(res, 404, "unknown run");
    const auto from = parse_u64(req.get_param_value("from"));
    const auto to = parse_u64(req.get_param_value("to"));
    if (!from || !to) return send_error(res, 400, "from and to must be version numbers");
    try {
      const auto d = diff(store.read_codebook(run_id, static_cast<int>(*from)),
                          store.read_codebook(run_id, static_cast<int>(*to)));
      auto body = d.to_json();
      body["summary"] = d.summary();
      send_json(res, 200, body);
    } catch (const NotFound& e) {
      send_error(res, 404, e.what());
    }
  }
};

Service::Service(RunManager& manager, ServiceOptions options)
    : impl_(std::make_unique<Impl>(manager, std::move(options))) {}

Service::~Service() { stop(); }

int Service::bind(const std::string& host, int port) {
  if (port == 0) return impl_->server.bind_to_any_port(host);
  return impl_->server.bind_to_port(host, port) ? port : -1;
}

void Service::listen_after_bind() { impl_->server.listen_after_bind(); }

int Service::start_background(const std::string& host, int port) {
  const int bound = bind(host, port);
  if (bound < 0) return bound;
  impl_->thread = std::thread([this] { listen_after_bind(); });
  impl_->server.wait_until_ready();
  return bound;
}

void Service::stop() {
  impl_->stopping = true;
  impl_->server.stop();
  if (impl_->thread.joinable()) impl_->thread.join();
}

}  // namespace quorum
