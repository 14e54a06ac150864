// Command-line entry points: run, resume, metrics, sweep, codebook diff, serve.
// Exit codes: 0 ok, 1 run failed, 2 usage or configuration error.

#include <CLI11.hpp>
#include <spdlog/fmt/fmt.h>
#include <spdlog/sinks/stdout_color_sinks.h>
#include <spdlog/spdlog.h>

#include <csignal>
#include <iostream>

#include "quorum/evolution.hpp"
#include "quorum/orchestrator.hpp"
#include "quorum/service.hpp"

namespace {

using namespace quorum;

constexpr int kOk = 0;
constexpr int kRunFailed = 1;
constexpr int kUsage = 2;

std::string fmt_opt(const std::optional<double>& v) { return v ? fmt::format("{:.4f}", *v) : std::string("-"); }

void print_metrics(const RunMetrics& m) {
  std::cout << fmt::format("{:<10} {:>4} {:>8} {:>8} {:>8} {:>8} {:>8}\n", "batch", "B", "PreAR", "PostAR", "dAR",
                           "ACCpre", "ACCpost");
  auto line = [](const BatchMetrics& b, const std::string& name) {
    std::cout << fmt::format("{:<10} {:>4} {:>8.4f} {:>8.4f} {:>8.4f} {:>8} {:>8}\n", name, b.b, b.rates.pre_ar,
                             b.rates.post_ar, b.rates.delta_ar, fmt_opt(b.acc_pre), fmt_opt(b.acc_post));
  };
  for (const auto& b : m.batches) line(b, b.batch_id);
  line(m.total, "total");
  if (m.total.keys.size() > 1) {
    for (const auto& k : m.total.keys) {
      std::cout << fmt::format("{:<10} {:>4} {:>8.4f} {:>8.4f} {:>8.4f} {:>8} {:>8}\n", "key " + k.key, m.total.b,
                               k.rates.pre_ar, k.rates.post_ar, k.rates.delta_ar, fmt_opt(k.acc_pre),
                               fmt_opt(k.acc_post));
    }
  }
}

int report(const RunRecord& record, const RunStore& store) {
  std::cout << "run " << record.run_id << " " << to_string(record.status) << " (" << store.run_dir(record.run_id).string()
            << ")\n";
  for (const auto& w : record.warnings) std::cout << "warning: " << w << "\n";
  if (record.status != RunStatus::Completed) {
    std::cerr << "error: " << record.error << "\n";
    return kRunFailed;
  }
  if (record.metrics) print_metrics(*record.metrics);
  return kOk;
}

struct ServeFlags {
  std::string host = "127.0.0.1";
  int port = 8080;
  std::string static_dir;
  std::string cors_origin = "*";
};

ServiceOptions service_options(const ServeFlags& flags) {
  ServiceOptions options;
  if (!flags.static_dir.empty()) options.static_dir = flags.static_dir;
  options.token = token_from_env();
  options.cors_origin = flags.cors_origin;
  return options;
}

void add_serve_flags(CLI::App* cmd, ServeFlags& flags) {
  cmd->add_option("--host", flags.host, "Address to bind");
  cmd->add_option("--port", flags.port, "Port to bind (0 picks a free port)");
  cmd->add_option("--static", flags.static_dir, "Directory served at /");
  cmd->add_option("--cors-origin", flags.cors_origin, "Allowed CORS origin");
}

RunConfig load_config(const std::string& path, const std::optional<std::uint64_t>& seed, const std::string& store) {
  auto config = RunConfig::load(path);
  if (seed) config.seed = *seed;
  if (!store.empty()) config.store = store;
  load_dataset(config.dataset, config.task);
  return config;
}

int cmd_run(const std::string& config_path, std::optional<std::uint64_t> seed, const std::string& store_flag,
            bool serve, const ServeFlags& flags) {
  const auto config = load_config(config_path, seed, store_flag);
  RunStore store(config.store);
  const auto base_id = config.run_id.value_or(default_run_id(config));

  std::unique_ptr<RunManager> manager;
  std::unique_ptr<Service> service;
  if (serve) {
    manager = std::make_unique<RunManager>(config.store);
    service = std::make_unique<Service>(*manager, service_options(flags));
    const int port = service->start_background(flags.host, flags.port);
    if (port < 0) {
      std::cerr << "error: cannot bind " << flags.host << ":" << flags.port << "\n";
      return kUsage;
    }
    std::cout << "serving on http://" << flags.host << ":" << port << std::endl;
  }

  std::vector<RunRecord> records;
  int status = kOk;
  for (int r = 0; r < config.runs; ++r) {
    RunConfig c = config;
    c.seed = config.seed + static_cast<std::uint64_t>(r);
    c.run_id = config.runs == 1 ? base_id : base_id + "-r" + std::to_string(r + 1);
    auto record = manager ? manager->run_foreground(c) : run_pipeline(c);
    if (report(record, store) != kOk) status = kRunFailed;
    records.push_back(std::move(record));
  }
  if (config.runs > 1 && status == kOk) std::cout << render_csv(records_csv_rows(config, records));
  if (service) service->stop();
  return status;
}

int cmd_resume(const std::string& run_id, const std::string& store_dir) {
  RunStore store(store_dir);
  if (!store.exists(run_id)) throw NotFound("run " + run_id);
  return report(resume_run(store_dir, run_id), store);
}

int cmd_metrics(const std::string& run_id, const std::string& store_dir, const std::string& csv_path) {
  RunStore store(store_dir);
  if (!store.exists(run_id)) throw NotFound("run " + run_id);
  const auto record = store.load(run_id);
  if (!record.metrics) {
    std::cerr << "error: run " << run_id << " has no metrics (" << to_string(record.status) << ")\n";
    return kRunFailed;
  }
  print_metrics(*record.metrics);
  if (!csv_path.empty()) {
    const auto config = RunConfig::from_json(store.read_config(run_id), store.run_dir(run_id));
    write_file_atomic(csv_path, render_csv(records_csv_rows(config, {record})));
  }
  return kOk;
}

std::vector<int> parse_values(const std::string& text) {
  std::vector<int> values;
  for (const auto& part : split(text, ',')) {
    const auto t = trim(part);
    if (t.empty()) continue;
    std::size_t used = 0;
    int v = 0;
    try {
      v = std::stoi(std::string(t), &used);
    } catch (const std::exception&) {
      used = 0;
    }
    if (used != t.size()) throw CLI::ValidationError("--values", "'" + std::string(t) + "' is not an integer");
    values.push_back(v);
  }
  if (values.empty()) throw CLI::ValidationError("--values", "no values given");
  return values;
}

int cmd_sweep(const std::string& config_path, const std::string& axis, const std::string& values,
              std::optional<std::uint64_t> seed, const std::string& store_flag, const std::string& csv_path) {
  const auto config = load_config(config_path, seed, store_flag);
  const auto result = sweep(config, sweep_axis_from_string(axis), parse_values(values));
  const auto csv = result.csv();
  if (!csv_path.empty()) write_file_atomic(csv_path, csv);
  std::cout << csv;
  return kOk;
}

int cmd_codebook_diff(const std::string& run_id, const std::string& store_dir, int from, int to) {
  RunStore store(store_dir);
  if (!store.exists(run_id)) throw NotFound("run " + run_id);
  const auto d = diff(store.read_codebook(run_id, from), store.read_codebook(run_id, to));
  std::cout << "codebook v" << from << " -> v" << to << "\n" << d.summary() << "\n";
  return kOk;
}

Service* g_service = nullptr;

int cmd_serve(const std::string& store_dir, const ServeFlags& flags) {
  RunManager manager(store_dir);
  Service service(manager, service_options(flags));
  const int port = service.bind(flags.host, flags.port);
  if (port < 0) {
    std::cerr << "error: cannot bind " << flags.host << ":" << flags.port << "\n";
    return kUsage;
  }
  std::cout << "serving on http://" << flags.host << ":" << port << std::endl;
  g_service = &service;
  std::signal(SIGINT, [](int) {
    if (g_service) g_service->stop();
  });
  std::signal(SIGTERM, [](int) {
    if (g_service) g_service->stop();
  });
  service.listen_after_bind();
  g_service = nullptr;
  return kOk;
}

}  // namespace

int main(int argc, char** argv) {
  auto logger = spdlog::stderr_color_mt("quorum");
  spdlog::set_default_logger(logger);
  spdlog::set_level(spdlog::level::warn);

  CLI::App app{"Multi-agent content analysis with LLM coders"};
  app.require_subcommand(1);
  std::string log_level = "warn";
  app.add_option("--log-level", log_level, "trace, debug, info, warn, error or off")
      ->check(CLI::IsMember({"trace", "debug", "info", "warn", "error", "off"}));

  std::string config_path;
  std::string store_dir;
  std::string store_override;
  std::string run_id;
  std::string csv_path;
  std::optional<std::uint64_t> seed;
  bool serve = false;
  ServeFlags serve_flags;

  auto* run = app.add_subcommand("run", "Run the pipeline for a configuration");
  run->add_option("--config", config_path, "Run configuration (JSON)")->required();
  run->add_option("--seed", seed, "Override the configured seed");
  run->add_option("--store", store_override, "Override the run store directory");
  run->add_flag("--serve", serve, "Also serve the HTTP API while running");
  add_serve_flags(run, serve_flags);

  auto* resume = app.add_subcommand("resume", "Continue an interrupted run from its last completed batch");
  resume->add_option("--run", run_id, "Run id")->required();
  resume->add_option("--store", store_dir, "Run store directory")->default_val("runs");

  auto* metrics = app.add_subcommand("metrics", "Print the metrics of a run");
  metrics->add_option("--run", run_id, "Run id")->required();
  metrics->add_option("--store", store_dir, "Run store directory")->default_val("runs");
  metrics->add_option("--csv", csv_path, "Also write the metrics CSV here");

  std::string axis;
  std::string values;
  auto* sweep_cmd = app.add_subcommand("sweep", "Vary B, K or N and report one CSV group per value");
  sweep_cmd->add_option("--config", config_path, "Base run configuration")->required();
  sweep_cmd->add_option("--axis", axis, "B, K or N")->required()->check(CLI::IsMember({"B", "K", "N", "b", "k", "n"}));
  sweep_cmd->add_option("--values", values, "Comma-separated values, e.g. 0,1,3,5")->required();
  sweep_cmd->add_option("--seed", seed, "Override the configured seed");
  sweep_cmd->add_option("--store", store_override, "Override the run store directory");
  sweep_cmd->add_option("--csv", csv_path, "Also write the CSV here");

  int from = 0;
  int to = 0;
  auto* codebook = app.add_subcommand("codebook", "Codebook utilities");
  codebook->require_subcommand(1);
  auto* diff_cmd = codebook->add_subcommand("diff", "Show the changes between two codebook versions");
  diff_cmd->add_option("--run", run_id, "Run id")->required();
  diff_cmd->add_option("--store", store_dir, "Run store directory")->default_val("runs");
  diff_cmd->add_option("--from", from, "Base version")->required();
  diff_cmd->add_option("--to", to, "Target version")->required();

  auto* serve_cmd = app.add_subcommand("serve", "Serve the HTTP API over a run store");
  serve_cmd->add_option("--store", store_dir, "Run store directory")->default_val("runs");
  add_serve_flags(serve_cmd, serve_flags);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kOk : kUsage;
  }
  spdlog::set_level(spdlog::level::from_str(log_level));

  try {
    if (*run) return cmd_run(config_path, seed, store_override, serve, serve_flags);
    if (*resume) return cmd_resume(run_id, store_dir);
    if (*metrics) return cmd_metrics(run_id, store_dir, csv_path);
    if (*sweep_cmd) return cmd_sweep(config_path, axis, values, seed, store_override, csv_path);
    if (*diff_cmd) return cmd_codebook_diff(run_id, store_dir, from, to);
    if (*serve_cmd) return cmd_serve(store_dir, serve_flags);
  } catch (const CLI::ValidationError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kUsage;
  } catch (const ConfigInvalid& e) {
    std::cerr << "error: invalid configuration at " << e.what() << "\n";
    return kUsage;
  } catch (const DomainError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kUsage;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kRunFailed;
  }
  return kUsage;
}
