#include <gtest/gtest.h>

#include "quorum/core.hpp"
#include "quorum/dataset.hpp"
#include "support.hpp"

namespace quorum {
namespace {

using test::labels;

TEST(TaskSpec, LoadsSingleKeyTask) {
  const auto spec = test::pis_spec();
  EXPECT_EQ(spec.task_id, "PIS");
  EXPECT_EQ(spec.verdict_keys(), std::vector<std::string>{"S"});
  EXPECT_EQ(spec.num_classes("S"), 3u);
  EXPECT_EQ(spec.canonical_code("S", " Neutral "), "neutral");
  EXPECT_FALSE(spec.canonical_code("S", "mixed").has_value());
}

TEST(TaskSpec, PerKeyKindsAndCodes) {
  const auto spec = test::cn_spec();
  EXPECT_EQ(spec.key("NES").kind, TaskKind::MultiLabel);
  EXPECT_EQ(spec.key("NP").kind, TaskKind::MultiClass);
  EXPECT_EQ(spec.num_classes("NES"), 5u);
  EXPECT_THROW(spec.key("XX"), DomainError);
}

TEST(TaskSpec, RejectsInconsistentClassCounts) {
  json doc = {{"task_id", "T"}, {"verdict_keys", {"S"}}, {"class_codes", {"a", "b"}}, {"num_classes", 3}};
  EXPECT_THROW(TaskSpec::from_json(doc), DomainError);
  doc["num_classes"] = 2;
  doc["class_codes"] = {"a", "a"};
  EXPECT_THROW(TaskSpec::from_json(doc), DomainError);
}

TEST(TaskSpec, JsonRoundTrip) {
  const auto spec = test::cn_spec();
  EXPECT_EQ(TaskSpec::from_json(spec.to_json()), spec);
}

TEST(Labels, EqualityIsSetEqualityPerKey) {
  LabelAssignment a;
  a.by_key["NES"] = {"3", "4"};
  a.by_key["NP"] = {"1"};
  LabelAssignment b;
  b.by_key["NES"] = {"4", "3"};
  b.by_key["NP"] = {"1"};
  EXPECT_TRUE(labels_equal(a, b));
  b.by_key["NES"] = {"3"};
  EXPECT_FALSE(labels_equal(a, b));
}

TEST(Labels, EqualityIgnoresCaseAndWhitespace) {
  EXPECT_TRUE(labels_equal(labels("S", {"Neutral"}), labels("S", {" neutral"})));
}

TEST(Labels, DifferentKeysAreASpecMismatch) {
  EXPECT_THROW(labels_equal(labels("S", {"neutral"}), labels("ES", {"2"})), SpecMismatch);
}

TEST(Labels, ValidationEnforcesCardinality) {
  const auto spec = test::cn_spec();
  LabelAssignment ok;
  ok.by_key["NES"] = {"2", "4"};
  ok.by_key["NP"] = {"1"};
  EXPECT_NO_THROW(validate_labels(ok, spec));
  auto two_np = ok;
  two_np.by_key["NP"] = {"1", "2"};
  EXPECT_THROW(validate_labels(two_np, spec), DomainError);
  auto bad_code = ok;
  bad_code.by_key["NES"] = {"9"};
  EXPECT_THROW(validate_labels(bad_code, spec), DomainError);
}

TEST(Labels, CanonicalJsonFollowsSpecOrder) {
  const auto spec = test::cn_spec();
  LabelAssignment a;
  a.by_key["NP"] = {"1"};
  a.by_key["NES"] = {"4", "2"};
  EXPECT_EQ(render_labels_json(a, spec), R"({"NES": "2,4", "NP": "1"})");
  EXPECT_EQ(labels_from_json(labels_to_json(a, spec), spec), a);
}

TEST(Verdict, JsonRoundTripKeepsFailures) {
  const auto spec = test::pis_spec();
  auto v = test::verdict("a", "e1", std::nullopt, "no json");
  v.failure = "NoJsonBlock";
  v.round = 2;
  v.carried_over = true;
  EXPECT_EQ(verdict_from_json(verdict_to_json(v, spec), spec), v);
  auto w = test::verdict("a", "e1", labels("S", {"neutral"}));
  w.overridden = true;
  EXPECT_EQ(verdict_from_json(verdict_to_json(w, spec), spec), w);
}

TEST(Strings, Helpers) {
  EXPECT_EQ(trim("  a b \n"), "a b");
  EXPECT_EQ(to_lower("AbC"), "abc");
  EXPECT_TRUE(iequals("Neutral", "nEUTRAL"));
  EXPECT_EQ(split("a,b,,c", ','), (std::vector<std::string>{"a", "b", "", "c"}));
  EXPECT_EQ(join({"a", "b"}, ", "), "a, b");
}

TEST(Dataset, ParsesEntriesWithOrdinals) {
  const auto spec = test::pis_spec();
  const auto entries = parse_dataset(
      "{\"id\": \"a\", \"text\": \"one\", \"gold\": {\"S\": \"neutral\"}}\n\n{\"id\": 7, \"text\": \"two\"}\n", spec);
  ASSERT_EQ(entries.size(), 2u);
  EXPECT_EQ(entries[0].ordinal, 1u);
  EXPECT_EQ(entries[1].entry_id, "7");
  EXPECT_EQ(entries[1].ordinal, 2u);
  EXPECT_TRUE(entries[0].gold.has_value());
  EXPECT_FALSE(entries[1].gold.has_value());
}

TEST(Dataset, ReportsTheOffendingLine) {
  const auto spec = test::pis_spec();
  try {
    parse_dataset("{\"id\": \"a\", \"text\": \"one\"}\n{\"id\": \"a\", \"text\": \"dup\"}\n", spec);
    FAIL() << "duplicate id accepted";
  } catch (const DatasetInvalid& e) {
    EXPECT_EQ(e.line(), 2u);
  }
  EXPECT_THROW(parse_dataset("not json\n", spec), DatasetInvalid);
  EXPECT_THROW(parse_dataset("{\"id\": \"a\", \"text\": \"x\", \"gold\": {\"S\": \"mixed\"}}\n", spec), DatasetInvalid);
  EXPECT_THROW(parse_dataset("{\"id\": \"a\", \"text\": \"  \"}\n", spec), DatasetInvalid);
}

TEST(Dataset, ToyCorpusHasFortyGoldEntries) {
  const auto entries = load_dataset(test::data_path("pis_toy.jsonl"), test::pis_spec());
  ASSERT_EQ(entries.size(), 40u);
  for (const auto& e : entries) EXPECT_TRUE(e.gold.has_value()) << e.entry_id;
}

TEST(Dataset, AtomicWriteReplacesContents) {
  test::TempDir dir;
  const auto path = dir.path() / "f.txt";
  write_file_atomic(path, "one");
  write_file_atomic(path, "two");
  EXPECT_EQ(read_file(path), "two");
  EXPECT_FALSE(std::filesystem::exists(dir.path() / "f.txt.tmp"));
}

}  // namespace
}  // namespace quorum
