#include <gtest/gtest.h>

#include <fstream>

#include "quorum/orchestrator.hpp"
#include "quorum/run_store.hpp"
#include "scenarios.hpp"

namespace quorum {
namespace {

std::size_t count_type(const std::vector<Event>& events, const std::string& type) {
  return static_cast<std::size_t>(std::count_if(events.begin(), events.end(), [&](const Event& e) { return e.type == type; }));
}

TEST(Orchestrator, SplitBatchesKeepsOrder) {
  std::vector<TextEntry> entries;
  for (int i = 1; i <= 45; ++i) entries.push_back(TextEntry{std::to_string(i), static_cast<std::size_t>(i), "t", std::nullopt});
  const auto batches = split_batches(entries, 20);
  ASSERT_EQ(batches.size(), 3u);
  EXPECT_EQ(batches[2].size(), 5u);
  EXPECT_EQ(batches[1].front().entry_id, "21");
  EXPECT_TRUE(split_batches({}, 20).empty());
}

TEST(Orchestrator, DefaultRunIdIsStable) {
  test::TempDir dir;
  const auto a = test::toy_config(dir.path() / "a");
  const auto b = test::toy_config(dir.path() / "b");
  EXPECT_EQ(default_run_id(a), default_run_id(b));
  EXPECT_EQ(default_run_id(a).rfind("PIS-", 0), 0u);
  EXPECT_EQ(default_run_id(a).size(), 12u);
  EXPECT_NE(default_run_id(a), default_run_id(test::toy_config(dir.path(), {{"K", 1}})));
}

TEST(Orchestrator, MockRunCompletesAndPersists) {
  test::TempDir dir;
  const auto config = test::toy_config(dir.path());
  const auto record = run_pipeline(config);
  ASSERT_EQ(record.status, RunStatus::Completed) << record.error;
  ASSERT_EQ(record.batches.size(), 2u);
  EXPECT_EQ(record.batches[0].batch_id, "b1");
  EXPECT_EQ(record.batches[1].entry_ids.size(), 20u);
  EXPECT_EQ(record.outcomes().size(), 40u);
  ASSERT_TRUE(record.metrics.has_value());
  EXPECT_EQ(record.metrics->total.b, 40u);
  EXPECT_TRUE(record.metrics->total.acc_post.has_value());

  RunStore store(config.store);
  const auto events = store.read_events(record.run_id);
  EXPECT_EQ(events.front().type, "run.started");
  EXPECT_EQ(events.back().type, "run.completed");
  EXPECT_EQ(count_type(events, "batch.started"), 2u);
  EXPECT_EQ(count_type(events, "batch.completed"), 2u);
  EXPECT_EQ(count_type(events, "annotation.completed"), 2u);
  EXPECT_EQ(count_type(events, "entry.resolved"), 40u);
  EXPECT_EQ(count_type(events, "codebook.evolved") + count_type(events, "codebook.unchanged"), 2u);
  for (std::size_t i = 0; i < events.size(); ++i) EXPECT_EQ(events[i].seq, i + 1);

  // Folding the persisted log rebuilds the same state.
  EXPECT_EQ(store.load(record.run_id).to_json(), record.to_json());
  EXPECT_EQ(store.codebook_versions(record.run_id).front(), 0);
  EXPECT_EQ(store.codebook_versions(record.run_id).back(), record.codebook_version);
  const auto csv = read_file(store.run_dir(record.run_id) / "metrics.csv");
  EXPECT_EQ(csv.rfind(std::string(kCsvHeader) + "\nPIS,mock,Vanilla,2,20,3,", 0), 0u);
}

TEST(Orchestrator, AgreementNeverDropsAfterDiscussion) {
  test::TempDir dir;
  const auto record = run_pipeline(test::toy_config(dir.path()));
  for (const auto& b : record.batches) {
    ASSERT_TRUE(b.metrics.has_value());
    EXPECT_GE(b.metrics->b_after, b.metrics->b_before) << b.batch_id;
    EXPECT_EQ(b.metrics->rates.delta_ar, b.metrics->rates.post_ar - b.metrics->rates.pre_ar);
  }
}

TEST(Orchestrator, RunsAreByteIdenticalForTheSameSeed) {
  test::TempDir dir;
  const auto check = test::check_determinism(dir.path());
  EXPECT_TRUE(check.completed);
  EXPECT_TRUE(check.identical);
  EXPECT_LT(check.seconds, 10.0);
}

TEST(Orchestrator, DifferentSeedsDiffer) {
  test::TempDir dir;
  const auto a = run_pipeline(test::toy_config(dir.path() / "a"));
  const auto b = run_pipeline(test::toy_config(dir.path() / "b", {{"seed", 2}}));
  EXPECT_NE(read_file(RunStore(dir.path() / "a").events_path(a.run_id)),
            read_file(RunStore(dir.path() / "b").events_path(b.run_id)));
}

TEST(Orchestrator, ResumeAfterCrashMatchesAnUninterruptedRun) {
  test::TempDir dir;
  const auto config = test::toy_config(dir.path());
  const auto full = run_pipeline(config);
  RunStore store(config.store);
  const auto events = store.read_events(full.run_id);

  // Simulate a crash midway through the second batch, including a torn write.
  std::size_t cut = 0;
  for (std::size_t i = 0; i < events.size(); ++i) {
    if (events[i].type == "batch.completed") {
      cut = i + 1;
      break;
    }
  }
  ASSERT_GT(cut, 0u);
  std::string partial;
  for (std::size_t i = 0; i < cut + 5; ++i) partial += event_to_line(events[i]) + "\n";
  partial += event_to_line(events[cut + 5]).substr(0, 25);
  write_file_atomic(store.events_path(full.run_id), partial);

  const auto resumed = resume_run(config.store, full.run_id);
  ASSERT_EQ(resumed.status, RunStatus::Completed) << resumed.error;
  const auto spec = test::pis_spec();
  ASSERT_EQ(resumed.outcomes().size(), full.outcomes().size());
  for (std::size_t i = 0; i < full.outcomes().size(); ++i) {
    EXPECT_EQ(resumed.outcomes()[i].to_json(spec), full.outcomes()[i].to_json(spec)) << i;
  }
  EXPECT_EQ(resumed.metrics->to_json(), full.metrics->to_json());
  EXPECT_EQ(resumed.codebook_version, full.codebook_version);
  const auto after = store.read_events(full.run_id);
  EXPECT_EQ(count_type(after, "run.resumed"), 1u);
  EXPECT_EQ(count_type(after, "batch.completed"), 2u);

  // Resuming a completed run is a no-op.
  const auto again = resume_run(config.store, full.run_id);
  EXPECT_EQ(again.status, RunStatus::Completed);
  EXPECT_EQ(store.read_events(full.run_id).size(), after.size());
}

TEST(Orchestrator, BackendFailureFailsTheRun) {
  test::TempDir dir;
  const auto config = test::toy_config(dir.path(), {{"backend", {{"kind", "ScriptedMock"}, {"synthetic", false}}}});
  const auto record = run_pipeline(config);
  EXPECT_EQ(record.status, RunStatus::Failed);
  EXPECT_FALSE(record.error.empty());
  const auto events = RunStore(config.store).read_events(record.run_id);
  EXPECT_EQ(events.back().type, "run.failed");
  EXPECT_EQ(events.back().payload["batch_id"], "b1");
}

TEST(Orchestrator, InvalidDatasetThrowsBeforeWriting) {
  test::TempDir dir;
  std::ofstream(dir.path() / "bad.jsonl") << "{\"id\": \"a\", \"text\": \"x\"}\nnot json\n";
  const auto config = test::toy_config(dir.path() / "store", {{"dataset", (dir.path() / "bad.jsonl").string()}});
  EXPECT_THROW(run_pipeline(config), DatasetInvalid);
  EXPECT_FALSE(std::filesystem::exists(dir.path() / "store") && !RunStore(dir.path() / "store").list_runs().empty());
}

TEST(Orchestrator, TargetedScopeIntervenesOnlyInDiscussion) {
  test::TempDir dir;
  const auto config = test::toy_config(
      dir.path(), {{"intervention", {{"scope", "Targeted"}, {"role", "Collaborative"},
                                     {"scripted", json::array({{{"round", 1}, {"text", "Read the codebook again."}}})}}}});
  const auto record = run_pipeline(config);
  ASSERT_EQ(record.status, RunStatus::Completed) << record.error;
  const auto events = RunStore(config.store).read_events(record.run_id);
  std::size_t discussion = 0;
  for (const auto& e : events) {
    if (e.type != "intervention.requested") continue;
    EXPECT_EQ(e.payload["phase"], "Discussion");
    ++discussion;
  }
  EXPECT_GT(discussion, 0u);
}

TEST(Orchestrator, ExtensiveScopeAlsoIntervenesInEvolution) {
  test::TempDir dir;
  const auto config = test::toy_config(
      dir.path(), {{"intervention", {{"scope", "Extensive"}, {"role", "Collaborative"},
                                     {"scripted", json::array({{{"text", "Keep rules short."}}})}}},
                   {"backend", {{"rng_seed", 3}}}});
  const auto record = run_pipeline(config);
  ASSERT_EQ(record.status, RunStatus::Completed) << record.error;
  const auto events = RunStore(config.store).read_events(record.run_id);
  const bool evolution = std::any_of(events.begin(), events.end(), [](const Event& e) {
    return e.type == "intervention.requested" && e.payload["phase"] == "Evolution";
  });
  const bool mediated = std::any_of(events.begin(), events.end(), [](const Event& e) { return e.type == "codebook.ratification"; });
  EXPECT_EQ(evolution, mediated);
}

TEST(Orchestrator, ZeroRoundsNeverDiscusses) {
  test::TempDir dir;
  const auto config = test::toy_config(dir.path(), {{"K", 0}});
  const auto record = run_pipeline(config);
  ASSERT_EQ(record.status, RunStatus::Completed);
  const auto events = RunStore(config.store).read_events(record.run_id);
  EXPECT_EQ(count_type(events, "discussion.round"), 0u);
  EXPECT_EQ(record.metrics->total.b_after, record.metrics->total.b_before);
}

TEST(Orchestrator, GoldlessDatasetLeavesAccuracyBlank) {
  test::TempDir dir;
  const auto config = test::toy_config(dir.path(), {{"dataset", "../pis_toy_nogold.jsonl"}});
  const auto record = run_pipeline(config);
  ASSERT_EQ(record.status, RunStatus::Completed);
  EXPECT_FALSE(record.metrics->total.acc_pre.has_value());
  const auto csv = read_file(RunStore(config.store).run_dir(record.run_id) / "metrics.csv");
  EXPECT_NE(csv.find(",,1\n"), std::string::npos);
}

TEST(Orchestrator, RepeatedRunsUseSuffixedIdsAndSeeds) {
  test::TempDir dir;
  auto config = test::toy_config(dir.path(), {{"runs", 2}, {"run_id", "rep"}});
  const auto records = run_repeated(config);
  ASSERT_EQ(records.size(), 2u);
  EXPECT_EQ(records[0].run_id, "rep-r1");
  EXPECT_EQ(records[1].run_id, "rep-r2");
  EXPECT_EQ(records[1].config["seed"], 2);
  const auto rows = records_csv_rows(config, records);
  ASSERT_EQ(rows.size(), 1u);
  EXPECT_EQ(rows[0].runs, 2);
}

TEST(Orchestrator, SweepOverKProducesOneGroupPerValue) {
  test::TempDir dir;
  const auto config = test::toy_config(dir.path(), {{"run_id", "sw"}});
  const auto result = sweep(config, SweepAxis::K, {0, 1, 3, 5});
  ASSERT_EQ(result.rows.size(), 4u);
  EXPECT_EQ(result.run_ids, (std::vector<std::string>{"sw-K0", "sw-K1", "sw-K3", "sw-K5"}));
  for (std::size_t i = 0; i < 4; ++i) EXPECT_EQ(result.rows[i].k, (std::vector<int>{0, 1, 3, 5})[i]);
  EXPECT_EQ(result.rows[0].delta_ar, 0.0);
  const auto csv = result.csv();
  EXPECT_EQ(std::count(csv.begin(), csv.end(), '\n'), 5);
}

TEST(Orchestrator, SweepOverNAddsPersonas) {
  test::TempDir dir;
  const auto config = test::toy_config(dir.path(), {{"run_id", "swn"}, {"B", 40}});
  const auto result = sweep(config, SweepAxis::N, {2, 3});
  ASSERT_EQ(result.rows.size(), 2u);
  EXPECT_EQ(result.rows[1].n, 3);
  const auto record = RunStore(dir.path()).load("swn-N3");
  EXPECT_EQ(record.config["agents"].size(), 3u);
  EXPECT_THROW(sweep(config, SweepAxis::N, {6}), DomainError);
  EXPECT_THROW(sweep_axis_from_string("Q"), DomainError);
}

}  // namespace
}  // namespace quorum
