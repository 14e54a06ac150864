#include <gtest/gtest.h>

#include <cstdio>
#include <fstream>
#include <sys/wait.h>

#include "support.hpp"

namespace quorum {
namespace {

struct CliResult {
  int exit_code = -1;
  std::string out;
};

CliResult run_cli(const std::string& args) {
  const auto command = std::string(QUORUM_CLI_PATH) + " " + args + " 2>/dev/null";
  CliResult result;
  FILE* pipe = popen(command.c_str(), "r");
  if (!pipe) return result;
  char buffer[4096];
  std::size_t n = 0;
  while ((n = fread(buffer, 1, sizeof buffer, pipe)) > 0) result.out.append(buffer, n);
  const int status = pclose(pipe);
  result.exit_code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  return result;
}

/// Writes the toy mock config with absolute paths and a store inside `dir`.
std::string write_config(const test::TempDir& dir, const json& edits = json::object()) {
  auto doc = json::parse(read_file(test::data_path("configs/pis_mock.json")));
  const auto base = test::data_path("configs");
  for (const auto* key : {"task", "dataset", "seed_codebook"}) {
    doc[key] = (base / doc[key].get<std::string>()).lexically_normal().string();
  }
  doc["store"] = (dir.path() / "runs").string();
  doc.merge_patch(edits);
  const auto path = dir.path() / "config.json";
  std::ofstream(path) << doc.dump(2);
  return path.string();
}

TEST(Cli, UsageErrorsExitWithTwo) {
  test::TempDir dir;
  EXPECT_EQ(run_cli("").exit_code, 2);
  EXPECT_EQ(run_cli("run --config " + (dir.path() / "missing.json").string()).exit_code, 2);
  EXPECT_EQ(run_cli("run --config " + write_config(dir, {{"K", -1}})).exit_code, 2);
  EXPECT_EQ(run_cli("metrics --run nope --store " + (dir.path() / "runs").string()).exit_code, 2);
  EXPECT_EQ(run_cli("sweep --config " + write_config(dir) + " --axis B --values x").exit_code, 2);
}

TEST(Cli, RunMetricsDiffAndResume) {
  test::TempDir dir;
  const auto config = write_config(dir, {{"run_id", "cli"}});
  const auto store = (dir.path() / "runs").string();

  const auto run = run_cli("run --config " + config);
  ASSERT_EQ(run.exit_code, 0) << run.out;
  EXPECT_NE(run.out.find("run cli Completed"), std::string::npos);
  EXPECT_NE(run.out.find("total"), std::string::npos);

  const auto csv = (dir.path() / "m.csv").string();
  const auto metrics = run_cli("metrics --run cli --store " + store + " --csv " + csv);
  ASSERT_EQ(metrics.exit_code, 0);
  EXPECT_NE(metrics.out.find("PreAR"), std::string::npos);
  EXPECT_NE(metrics.out.find("b2"), std::string::npos);
  EXPECT_EQ(read_file(csv).rfind("task,", 0), 0u);

  const auto diff = run_cli("codebook diff --run cli --store " + store + " --from 0 --to 0");
  EXPECT_EQ(diff.exit_code, 0);
  EXPECT_NE(diff.out.find("no changes"), std::string::npos);
  EXPECT_EQ(run_cli("codebook diff --run cli --store " + store + " --from 0 --to 7").exit_code, 2);

  const auto resumed = run_cli("resume --run cli --store " + store);
  EXPECT_EQ(resumed.exit_code, 0);
  EXPECT_NE(resumed.out.find("Completed"), std::string::npos);
  EXPECT_EQ(run_cli("resume --run nope --store " + store).exit_code, 2);
}

TEST(Cli, SeedOverrideChangesRunId) {
  test::TempDir dir;
  const auto config = write_config(dir);
  const auto a = run_cli("run --config " + config + " --seed 5");
  const auto b = run_cli("run --config " + config + " --seed 5");
  ASSERT_EQ(a.exit_code, 0);
  ASSERT_EQ(b.exit_code, 0);
  EXPECT_NE(a.out.substr(0, a.out.find('\n')), b.out.substr(0, b.out.find('\n')));
}

TEST(Cli, SweepPrintsOneGroupPerValue) {
  test::TempDir dir;
  const auto csv = (dir.path() / "sweep.csv").string();
  const auto out = run_cli("sweep --config " + write_config(dir, {{"run_id", "sw"}}) + " --axis K --values 0,1 --csv " + csv);
  ASSERT_EQ(out.exit_code, 0);
  EXPECT_EQ(out.out, read_file(csv));
  const auto lines = split(trim(out.out), '\n');
  ASSERT_EQ(lines.size(), 3u);
  EXPECT_NE(lines[1].find(",0,"), std::string::npos);
}

TEST(Cli, FailedRunExitsWithOne) {
  test::TempDir dir;
  const auto config = write_config(dir, {{"backend", {{"kind", "ScriptedMock"}, {"synthetic", false}}}});
  const auto out = run_cli("run --config " + config);
  EXPECT_EQ(out.exit_code, 1);
  EXPECT_NE(out.out.find("Failed"), std::string::npos);
}

}  // namespace
}  // namespace quorum
