#include <gtest/gtest.h>

#include <thread>

#include "quorum/gateway/mock_backend.hpp"
#include "quorum/gateway/prompts.hpp"
#include "quorum/verdict_parser.hpp"
#include "support.hpp"

namespace quorum::gateway {
namespace {

ChatRequest request(const std::string& agent, std::uint64_t index, const std::string& prompt) {
  return ChatRequest{agent, index, {Message{Role::User, prompt}}, {}};
}

TEST(MockBackend, RoutesLinesPerAgentAndIndex) {
  MockBackend mock(parse_script(
      "{\"agent\": \"a\", \"reply\": \"a0\"}\n{\"agent\": \"b\", \"reply\": \"b0\"}\n{\"agent\": \"a\", \"reply\": \"a1\"}\n"));
  EXPECT_EQ(mock.complete(request("a", 1, "x")), "a1");
  EXPECT_EQ(mock.complete(request("b", 0, "x")), "b0");
  EXPECT_EQ(mock.complete(request("a", 0, "x")), "a0");
  EXPECT_EQ(mock.total_calls(), 3u);
  ASSERT_EQ(mock.call_log().size(), 3u);
  EXPECT_EQ(mock.call_log()[0].call_index, 1u);
}

TEST(MockBackend, SharedQueueServesAgentsWithoutLines) {
  MockBackend mock(parse_script("{\"reply\": \"s0\"}\n{\"reply\": \"s1\"}\n"));
  EXPECT_EQ(mock.complete(request("anyone", 1, "x")), "s1");
  EXPECT_EQ(mock.complete(request("other", 0, "x")), "s0");
}

TEST(MockBackend, ExhaustionAndMismatchAreErrors) {
  MockBackend mock(parse_script("{\"agent\": \"a\", \"match\": \"CODEBOOK\", \"reply\": \"r\"}\n"));
  try {
    mock.complete(request("a", 0, "no keyword"));
    FAIL();
  } catch (const GatewayError& e) {
    EXPECT_EQ(e.kind(), GatewayError::Kind::ScriptMismatch);
  }
  EXPECT_EQ(mock.complete(request("a", 0, "the CODEBOOK")), "r");
  try {
    mock.complete(request("a", 1, "x"));
    FAIL();
  } catch (const GatewayError& e) {
    EXPECT_EQ(e.kind(), GatewayError::Kind::ScriptExhausted);
  }
}

TEST(MockBackend, ScriptParserRejectsMalformedLines) {
  EXPECT_THROW(parse_script("{\"agent\": \"a\"}\n"), std::exception);
  EXPECT_THROW(parse_script("nope\n"), std::exception);
  EXPECT_TRUE(parse_script("\n\n").empty());
}

TEST(MockBackend, SyntheticRepliesAreDeterministicAndParseable) {
  const auto spec = test::pis_spec();
  const auto prompt = render_text("coding", {{"PERSONA", "p"}, {"CODEBOOK", "c"}, {"TEXT", "TEXT: 1. The company did well."}});
  MockBackend a({}, 5, true, spec);
  MockBackend b({}, 5, true, spec);
  for (std::uint64_t i = 0; i < 20; ++i) {
    const auto ra = a.complete(request("agent_1", i, prompt));
    EXPECT_EQ(ra, b.complete(request("agent_1", i, prompt)));
    EXPECT_TRUE(std::holds_alternative<LabelAssignment>(parse_agent_verdict(ra, spec))) << ra;
  }
}

TEST(MockBackend, RepliesDoNotDependOnThreadTiming) {
  const auto spec = test::pis_spec();
  const auto prompt = render_text("coding", {{"PERSONA", "p"}, {"CODEBOOK", "c"}, {"TEXT", "TEXT: 1. hello"}});
  MockBackend serial({}, 9, true, spec);
  std::vector<std::string> expected;
  for (int agent = 0; agent < 4; ++agent) {
    for (std::uint64_t i = 0; i < 25; ++i) expected.push_back(serial.complete(request("a" + std::to_string(agent), i, prompt)));
  }
  MockBackend parallel({}, 9, true, spec);
  std::vector<std::string> got(expected.size());
  std::vector<std::thread> threads;
  for (int agent = 0; agent < 4; ++agent) {
    threads.emplace_back([&, agent] {
      for (std::uint64_t i = 0; i < 25; ++i) got[agent * 25 + i] = parallel.complete(request("a" + std::to_string(agent), i, prompt));
    });
  }
  for (auto& t : threads) t.join();
  EXPECT_EQ(got, expected);
}

TEST(AgentSession, HistoryAlternatesAndCallIndexAdvances) {
  MockBackend mock(parse_script("{\"reply\": \"one\"}\n{\"reply\": \"two\"}\n"));
  AgentSession session("a", builtin_personas()[0]);
  EXPECT_EQ(session.complete(mock, {Message{Role::User, "q1"}}), "one");
  EXPECT_EQ(session.complete(mock, {Message{Role::User, "q2"}}), "two");
  EXPECT_EQ(session.call_index(), 2u);
  const auto& h = session.history();
  ASSERT_EQ(h.size(), 5u);
  EXPECT_EQ(h[0].role, Role::System);
  EXPECT_EQ(h[0].content, builtin_personas()[0].system_prompt);
  EXPECT_EQ(h[1].role, Role::User);
  EXPECT_EQ(h[2].role, Role::Assistant);
  EXPECT_EQ(h[4].content, "two");
}

TEST(AgentSession, SamplingLeavesHistoryUntilCommit) {
  MockBackend mock(parse_script("{\"reply\": \"s0\"}\n{\"reply\": \"s1\"}\n{\"reply\": \"s2\"}\n"));
  AgentSession session("a", builtin_personas()[1]);
  const Messages prompt{Message{Role::User, "q"}};
  const auto samples = session.sample(mock, prompt, 3);
  EXPECT_EQ(samples, (std::vector<std::string>{"s0", "s1", "s2"}));
  EXPECT_EQ(session.history().size(), 1u);
  session.commit(prompt, samples[1]);
  EXPECT_EQ(session.history().size(), 3u);
  EXPECT_EQ(session.history().back().content, "s1");
  EXPECT_EQ(session.call_index(), 3u);
}

TEST(AgentSession, FirstCallIndexContinuesAcrossSessions) {
  MockBackend mock(parse_script("{\"reply\": \"r0\"}\n{\"reply\": \"r1\"}\n"));
  AgentSession session("a", builtin_personas()[0], {}, 1);
  EXPECT_EQ(session.complete(mock, {Message{Role::User, "q"}}), "r1");
}

}  // namespace
}  // namespace quorum::gateway
