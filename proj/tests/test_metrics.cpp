#include <gtest/gtest.h>

#include <chrono>

#include "oracles.hpp"
#include "quorum/annotation.hpp"
#include "quorum/discussion.hpp"
#include "support.hpp"

namespace quorum {
namespace {

using test::labels;
using test::verdict;

TEST(MetricsOracle, MultilabelMatchesXorOracle) {
  const auto start = std::chrono::steady_clock::now();
  const auto check = test::check_multilabel_against_xor(1234, 1000);
  const auto elapsed = std::chrono::steady_clock::now() - start;
  EXPECT_EQ(check.instances, 1000u);
  EXPECT_LE(check.max_error, 1e-12);
  EXPECT_LT(elapsed, std::chrono::seconds(1));
}

TEST(MetricsOracle, MulticlassIsExactMatchCounting) {
  const auto check = test::check_multiclass_against_counting(99, 1000);
  EXPECT_EQ(check.max_error, 0.0);
}

TEST(MetricsOracle, AgreementRatesAreExact) { EXPECT_EQ(test::agreement_formula_mismatches(5, 500), 0u); }

TEST(Metrics, KeyScore) {
  EXPECT_DOUBLE_EQ(key_score({"1", "2"}, {"2", "3"}, 5), 1.0 - 2.0 / 5.0);
  EXPECT_DOUBLE_EQ(key_score({}, {}, 5), 1.0);
  EXPECT_DOUBLE_EQ(key_score({"1", "2", "3", "4", "5"}, {}, 5), 0.0);
}

TEST(Metrics, MissingGoldIsReported) {
  const auto spec = test::pis_spec();
  const std::vector<TextEntry> entries = {TextEntry{"a", 1, "t", std::nullopt}};
  FinalLabels final = {{"a", labels("S", {"neutral"})}};
  try {
    multiclass_accuracy(final, entries, spec);
    FAIL();
  } catch (const MissingGold& e) {
    EXPECT_EQ(e.entry_id(), "a");
  }
}

TEST(Metrics, CnUsesExactMatchPerKeyAndHammingForTheMultiLabelKey) {
  const auto spec = test::cn_spec();
  LabelAssignment gold;
  gold.by_key = {{"NES", {"2", "4"}}, {"NP", {"1"}}};
  LabelAssignment pred;
  pred.by_key = {{"NES", {"2"}}, {"NP", {"3"}}};
  const std::vector<TextEntry> entries = {TextEntry{"a", 1, "t", gold}};
  const FinalLabels final = {{"a", pred}};
  EXPECT_DOUBLE_EQ(key_accuracy(final, entries, spec, "NES"), 1.0 - 1.0 / 5.0);
  EXPECT_DOUBLE_EQ(key_accuracy(final, entries, spec, "NP"), 0.0);
}

TEST(Metrics, AgreementRateErrors) {
  EXPECT_THROW(agreement_rates(0, 0, 0), EmptyBatch);
  EXPECT_THROW(agreement_rates(3, 2, 2), DomainError);
}

DiscussionOutcome outcome(const std::string& id, std::vector<Verdict> initial, std::vector<Verdict> last,
                          Resolution resolution, std::optional<LabelAssignment> final_labels) {
  DiscussionOutcome o;
  o.entry_id = id;
  o.initial = std::move(initial);
  if (!last.empty()) {
    DiscussionRound r;
    r.round_no = 1;
    r.verdicts = std::move(last);
    r.judge_result = judge(r.verdicts);
    o.rounds.push_back(r);
  }
  o.resolution = resolution;
  o.converged = resolution == Resolution::PreAgreed || resolution == Resolution::Converged;
  o.final_labels = std::move(final_labels);
  return o;
}

TEST(Metrics, BatchMetricsFromOutcomes) {
  const auto spec = test::pis_spec();
  const auto pos = labels("S", {"positive"});
  const auto neu = labels("S", {"neutral"});
  const auto neg = labels("S", {"negative"});
  const std::vector<TextEntry> batch = {TextEntry{"a", 1, "t", pos}, TextEntry{"b", 2, "t", neu},
                                        TextEntry{"c", 3, "t", neg}, TextEntry{"d", 4, "t", neu}};
  const std::vector<DiscussionOutcome> outcomes = {
      outcome("a", {verdict("x", "a", pos), verdict("y", "a", pos)}, {}, Resolution::PreAgreed, pos),
      outcome("b", {verdict("x", "b", neg), verdict("y", "b", neu)}, {verdict("x", "b", neu), verdict("y", "b", neu)},
              Resolution::Converged, neu),
      outcome("c", {verdict("x", "c", neu), verdict("y", "c", neg)}, {verdict("x", "c", neu), verdict("y", "c", neg)},
              Resolution::FirstAgentFallback, neu),
      outcome("d", {verdict("x", "d", neu), verdict("y", "d", neu)}, {}, Resolution::PreAgreed, neu)};
  AnnotationMatrix matrix;
  matrix.batch_id = "b1";
  const auto m = batch_metrics(matrix, outcomes, batch, spec);
  EXPECT_EQ(m.b, 4u);
  EXPECT_EQ(m.b_before, 2u);
  EXPECT_EQ(m.b_after, 3u);
  EXPECT_EQ(m.rates, agreement_rates(2, 3, 4));
  // Before discussion b falls back to agent x (negative): a, d correct. After: a, b, d.
  EXPECT_DOUBLE_EQ(*m.acc_pre, 2.0 / 4.0);
  EXPECT_DOUBLE_EQ(*m.acc_post, 3.0 / 4.0);
  ASSERT_EQ(m.keys.size(), 1u);
  EXPECT_EQ(m.keys[0].b_after, 3u);
  EXPECT_EQ(BatchMetrics::from_json(m.to_json()), m);

  const auto run = run_metrics({m, m}, batch, outcomes, spec);
  EXPECT_EQ(RunMetrics::from_json(run.to_json()), run);
}

TEST(Metrics, GoldlessBatchesOmitAccuracy) {
  const auto spec = test::pis_spec();
  const auto neu = labels("S", {"neutral"});
  const std::vector<TextEntry> batch = {TextEntry{"a", 1, "t", std::nullopt}};
  const std::vector<DiscussionOutcome> outcomes = {
      outcome("a", {verdict("x", "a", neu), verdict("y", "a", neu)}, {}, Resolution::PreAgreed, neu)};
  const auto m = batch_metrics(AnnotationMatrix{}, outcomes, batch, spec);
  EXPECT_FALSE(m.acc_pre.has_value());
  EXPECT_FALSE(m.acc_post.has_value());
}

TEST(Metrics, AggregateRuns) {
  const auto a = aggregate_runs({1.0, 2.0, 3.0});
  EXPECT_DOUBLE_EQ(a.mean, 2.0);
  EXPECT_DOUBLE_EQ(a.std, 1.0);
  EXPECT_EQ(a.n, 3u);
  EXPECT_DOUBLE_EQ(aggregate_runs({0.5}).std, 0.0);
  const auto same = aggregate_runs(std::vector<double>(10, 0.1));
  EXPECT_GE(same.mean, same.min);
  EXPECT_LE(same.mean, same.max);
  EXPECT_THROW(aggregate_runs({}), DomainError);
}

TEST(Metrics, CsvHasOneRowPerKey) {
  const auto spec = test::cn_spec();
  RunMetrics run;
  for (const auto* key : {"NES", "NP"}) {
    KeyMetrics k;
    k.key = key;
    k.rates = agreement_rates(5, 15, 20);
    k.acc_pre = 0.5;
    k.acc_post = 0.75;
    run.total.keys.push_back(k);
  }
  const auto csv = render_csv(csv_rows(spec, "gpt-4o-2024-05-13", "Vanilla", 2, 20, 3, {run, run}));
  EXPECT_EQ(csv,
            "task,backbone,strategy,N,B,K,pre_ar,post_ar,delta_ar,acc_pre,acc_post,runs\n"
            "CN-NES,gpt-4o-2024-05-13,Vanilla,2,20,3,0.250000,0.750000,0.500000,0.500000,0.750000,2\n"
            "CN-NP,gpt-4o-2024-05-13,Vanilla,2,20,3,0.250000,0.750000,0.500000,0.500000,0.750000,2\n");
}

}  // namespace
}  // namespace quorum
