#include <gtest/gtest.h>

#include <random>

#include "quorum/gateway/mock_backend.hpp"
#include "quorum/gateway/prompts.hpp"
#include "quorum/gateway/strategy.hpp"
#include "support.hpp"

namespace quorum::gateway {
namespace {

const Messages kPrompt{Message{Role::User, "TEXT: 1. something"}};

ScriptLine line(const std::string& reply) { return ScriptLine{std::nullopt, std::nullopt, reply}; }

TEST(Strategy, NamesRoundTrip) {
  for (const auto& name : {"Vanilla", "CoT", "ToT", "SelfConsistency(5)"}) {
    EXPECT_EQ(Strategy::parse(name).name(), name);
  }
  EXPECT_EQ(Strategy::parse("SelfConsistency").samples, 3);
  EXPECT_THROW(Strategy::parse("Magic"), std::exception);
}

TEST(Strategy, SuffixesAppendTemplateText) {
  const auto cot = apply_strategy_suffix(Strategy::parse("CoT"), kPrompt);
  EXPECT_NE(cot.back().content.find(std::string(template_text("cot_suffix"))), std::string::npos);
  const auto tot = apply_strategy_suffix(Strategy::parse("ToT"), kPrompt);
  EXPECT_NE(tot.back().content.find(std::string(template_text("tot_suffix"))), std::string::npos);
  EXPECT_EQ(apply_strategy_suffix(Strategy::parse("Vanilla"), kPrompt), kPrompt);
}

TEST(Strategy, ReminderRecoversAFailedParse) {
  const auto spec = test::pis_spec();
  MockBackend mock({line("I cannot decide."), line(test::answer("S", "neutral"))});
  AgentSession session("a", builtin_personas()[0]);
  const auto result = run_strategy(Strategy{}, session, mock, kPrompt, spec);
  EXPECT_EQ(result.labels, test::labels("S", {"neutral"}));
  EXPECT_EQ(result.calls, 2);
  EXPECT_EQ(mock.call_log()[1].prompt, std::string(template_text("format_reminder")));
}

TEST(Strategy, SecondFailureThrows) {
  const auto spec = test::pis_spec();
  MockBackend mock({line("no"), line("still no")});
  AgentSession session("a", builtin_personas()[0]);
  EXPECT_THROW(run_strategy(Strategy{}, session, mock, kPrompt, spec), VerdictUnparseable);
}

TEST(Strategy, SelfConsistencyCommitsTheWinner) {
  const auto spec = test::pis_spec();
  MockBackend mock({line(test::answer("S", "negative", "first")), line(test::answer("S", "neutral", "second")),
                    line(test::answer("S", "neutral", "third"))});
  AgentSession session("a", builtin_personas()[0]);
  const auto result = run_strategy(Strategy{Strategy::Kind::SelfConsistency, 3}, session, mock, kPrompt, spec);
  EXPECT_EQ(result.labels, test::labels("S", {"neutral"}));
  EXPECT_EQ(result.calls, 3);
  EXPECT_EQ(session.history().back().content, test::answer("S", "neutral", "second"));
}

TEST(Strategy, AllSamplesUnparseableAfterReminder) {
  const auto spec = test::pis_spec();
  MockBackend mock({line("x"), line("y"), line("z"), line("still nothing")});
  AgentSession session("a", builtin_personas()[0]);
  try {
    run_strategy(Strategy{Strategy::Kind::SelfConsistency, 3}, session, mock, kPrompt, spec);
    FAIL();
  } catch (const GatewayError& e) {
    EXPECT_EQ(e.kind(), GatewayError::Kind::AllSamplesUnparseable);
  }
}

// Independent plurality counter: counts whole assignments, earliest wins ties.
std::optional<LabelAssignment> oracle_vote(const std::vector<std::optional<LabelAssignment>>& samples) {
  std::vector<std::pair<LabelAssignment, int>> counts;
  for (const auto& s : samples) {
    if (!s) continue;
    bool found = false;
    for (auto& [labels, n] : counts) {
      if (labels == *s) {
        ++n;
        found = true;
      }
    }
    if (!found) counts.emplace_back(*s, 1);
  }
  if (counts.empty()) return std::nullopt;
  auto best = counts.front();
  for (const auto& c : counts) {
    if (c.second > best.second) best = c;
  }
  return best.first;
}

TEST(MajorityVote, AgreesWithCountingOracle) {
  std::mt19937_64 rng(3);
  const std::vector<std::string> codes = {"positive", "neutral", "negative"};
  for (int i = 0; i < 2000; ++i) {
    const auto m = std::uniform_int_distribution<int>(1, 9)(rng);
    std::vector<std::optional<LabelAssignment>> samples;
    for (int j = 0; j < m; ++j) {
      const auto r = std::uniform_int_distribution<int>(0, 3)(rng);
      if (r == 3) samples.emplace_back(std::nullopt);
      else samples.emplace_back(test::labels("S", {codes[r]}));
    }
    const auto vote = majority_vote(samples);
    const auto expected = oracle_vote(samples);
    ASSERT_EQ(vote.has_value(), expected.has_value());
    if (!vote) continue;
    EXPECT_EQ(vote->labels, *expected);
    ASSERT_TRUE(samples[vote->winner_sample].has_value());
    EXPECT_EQ(*samples[vote->winner_sample], vote->labels);
    for (std::size_t k = 0; k < vote->winner_sample; ++k) {
      EXPECT_FALSE(samples[k].has_value() && *samples[k] == vote->labels);
    }
    int total = 0;
    for (const auto& t : vote->tally) total += t.votes;
    EXPECT_EQ(total, static_cast<int>(std::count_if(samples.begin(), samples.end(), [](const auto& s) { return s.has_value(); })));
  }
}

TEST(MajorityVote, StrictMajorityAlwaysWins) {
  const auto a = test::labels("S", {"neutral"});
  const auto b = test::labels("S", {"negative"});
  const auto vote = majority_vote({b, a, a});
  ASSERT_TRUE(vote.has_value());
  EXPECT_EQ(vote->labels, a);
  EXPECT_EQ(vote->winner_sample, 1u);
}

TEST(Strategy, SelfConsistencyOfOneIsVanilla) {
  const auto spec = test::pis_spec();
  std::mt19937_64 rng(11);
  const std::vector<std::string> replies = {test::answer("S", "positive"), test::answer("S", "neutral"), "garbled",
                                            test::answer("S", "negative")};
  for (int i = 0; i < 200; ++i) {
    std::vector<ScriptLine> script;
    for (int j = 0; j < 2; ++j) script.push_back(line(replies[std::uniform_int_distribution<std::size_t>(0, 3)(rng)]));
    MockBackend m1(script), m2(script);
    AgentSession s1("a", builtin_personas()[0]), s2("a", builtin_personas()[0]);
    std::optional<StrategyResult> r1, r2;
    bool e1 = false, e2 = false;
    try { r1 = run_strategy(Strategy{}, s1, m1, kPrompt, spec); } catch (const VerdictUnparseable&) { e1 = true; }
    try { r2 = run_strategy(Strategy{Strategy::Kind::SelfConsistency, 1}, s2, m2, kPrompt, spec); } catch (const VerdictUnparseable&) { e2 = true; }
    ASSERT_EQ(e1, e2);
    if (r1) {
      EXPECT_EQ(r1->labels, r2->labels);
      EXPECT_EQ(r1->rationale, r2->rationale);
      EXPECT_EQ(r1->calls, r2->calls);
    }
    EXPECT_EQ(s1.history(), s2.history());
  }
}

}  // namespace
}  // namespace quorum::gateway
