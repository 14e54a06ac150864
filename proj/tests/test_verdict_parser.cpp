#include <gtest/gtest.h>

#include "quorum/verdict_parser.hpp"
#include "support.hpp"

namespace quorum {
namespace {

LabelAssignment expect_labels(const ParseResult& r) {
  EXPECT_TRUE(std::holds_alternative<LabelAssignment>(r))
      << (std::holds_alternative<ParseFailure>(r) ? std::get<ParseFailure>(r).message() : "");
  return std::holds_alternative<LabelAssignment>(r) ? std::get<LabelAssignment>(r) : LabelAssignment{};
}

ParseFailure::Kind failure_kind(const ParseResult& r) {
  EXPECT_TRUE(std::holds_alternative<ParseFailure>(r));
  return std::holds_alternative<ParseFailure>(r) ? std::get<ParseFailure>(r).kind : ParseFailure::Kind::NoJsonBlock;
}

TEST(VerdictParser, ReadsTheLastJsonObject) {
  const auto spec = test::pis_spec();
  const std::string reply =
      "Earlier I thought {\"S\": \"negative\"} but on reflection:\n```json\n{\n  \"S\": \"neutral\"\n}\n```";
  EXPECT_EQ(expect_labels(parse_agent_verdict(reply, spec)), test::labels("S", {"neutral"}));
}

TEST(VerdictParser, IgnoresStrayBracesInProse) {
  const auto spec = test::pis_spec();
  const std::string reply = "Set notation {a, b} is not JSON. {\"S\": \"Positive\"} and a } stray brace.";
  EXPECT_EQ(expect_labels(parse_agent_verdict(reply, spec)), test::labels("S", {"positive"}));
}

TEST(VerdictParser, MultiLabelValues) {
  const auto spec = test::cn_spec();
  auto l = expect_labels(parse_agent_verdict(R"({"NES": "2, 4", "NP": "1"})", spec));
  EXPECT_EQ(l.by_key["NES"], (std::set<std::string>{"2", "4"}));
  l = expect_labels(parse_agent_verdict(R"({"NES": ["3"], "NP": 2})", spec));
  EXPECT_EQ(l.by_key["NES"], (std::set<std::string>{"3"}));
  EXPECT_EQ(l.by_key["NP"], (std::set<std::string>{"2"}));
}

TEST(VerdictParser, FailureKinds) {
  const auto spec = test::cn_spec();
  EXPECT_EQ(failure_kind(parse_agent_verdict("no json at all", spec)), ParseFailure::Kind::NoJsonBlock);
  EXPECT_EQ(failure_kind(parse_agent_verdict(R"({"NES": "2"})", spec)), ParseFailure::Kind::MissingKey);
  EXPECT_EQ(failure_kind(parse_agent_verdict(R"({"NES": "9", "NP": "1"})", spec)), ParseFailure::Kind::UnknownCode);
  EXPECT_EQ(failure_kind(parse_agent_verdict(R"({"NES": "2", "NP": "1,2"})", spec)),
            ParseFailure::Kind::CardinalityViolation);
}

TEST(VerdictParser, FindsTopLevelObjectsOnly) {
  const auto blocks = find_json_objects(R"(x {"a": {"b": 1}} y {"c": "}"} z)");
  ASSERT_EQ(blocks.size(), 2u);
  EXPECT_TRUE(blocks[0].value.contains("a"));
  EXPECT_EQ(blocks[1].value["c"], "}");
}

TEST(VerdictParser, SegmentsByOrdinal) {
  const std::string reply =
      "TEXT: 3.\nfirst {\"S\": \"neutral\"}\n\nTEXT: 4. second {\"S\": \"negative\"}\nTEXT 6: third";
  const auto segments = segment_by_ordinal(reply, {3, 4, 5, 6});
  ASSERT_EQ(segments.size(), 4u);
  EXPECT_NE(segments[0].find("first"), std::string::npos);
  EXPECT_EQ(segments[0].find("second"), std::string::npos);
  EXPECT_NE(segments[1].find("second"), std::string::npos);
  EXPECT_TRUE(segments[2].empty());
  EXPECT_NE(segments[3].find("third"), std::string::npos);
}

TEST(VerdictParser, ReadsTheReplayedTranscripts) {
  const auto pis = test::pis_spec();
  const auto script = test::load_script("e1_pis48_discussion.jsonl");
  const std::vector<std::string> expected = {"neutral", "negative", "negative", "neutral", "neutral", "neutral"};
  ASSERT_EQ(script.size(), expected.size());
  for (std::size_t i = 0; i < script.size(); ++i) {
    EXPECT_EQ(expect_labels(parse_agent_verdict(script[i].reply, pis)), test::labels("S", {expected[i]}));
  }
}

}  // namespace
}  // namespace quorum
