#include <gtest/gtest.h>

#include "quorum/run_config.hpp"
#include "support.hpp"

namespace quorum {
namespace {

std::string field_of(const json& edits) {
  auto doc = json::parse(read_file(test::data_path("configs/pis_mock.json")));
  doc.merge_patch(edits);
  try {
    RunConfig::from_json(doc, test::data_path("configs"));
  } catch (const ConfigInvalid& e) {
    return e.field();
  }
  return "<accepted>";
}

TEST(RunConfig, LoadsTheShippedMockConfig) {
  const auto c = RunConfig::load(test::data_path("configs/pis_mock.json"));
  EXPECT_EQ(c.task.task_id, "PIS");
  EXPECT_EQ(c.batch_size, 20);
  EXPECT_EQ(c.max_rounds, 3);
  ASSERT_EQ(c.agents.size(), 2u);
  EXPECT_EQ(c.agents[0].agent_id, "emily_carter");
  EXPECT_EQ(c.agents[1].persona.persona_id, "michael_rodriguez");
  EXPECT_TRUE(std::holds_alternative<gateway::ScriptedMock>(c.backend));
  EXPECT_TRUE(c.seed_codebook.has_value());
  EXPECT_EQ(c.effective_mediation_rounds(), 3);
  EXPECT_TRUE(c.dataset.is_absolute());
}

TEST(RunConfig, LiveConfigNamesTheModel) {
  const auto c = RunConfig::load(test::data_path("configs/pis_live.json"));
  ASSERT_TRUE(std::holds_alternative<gateway::OpenAiCompatible>(c.backend));
  EXPECT_EQ(std::get<gateway::OpenAiCompatible>(c.backend).model_id, "gpt-4o-mini-2024-07-18");
}

TEST(RunConfig, JsonRoundTrip) {
  const auto c = test::toy_config("/tmp/somewhere", {{"intervention", {{"scope", "Targeted"}, {"role", "Directive"},
                                                                     {"scripted", json::array({{{"round", 1}, {"text", "x"}}})}}}});
  EXPECT_EQ(RunConfig::from_json(c.to_json(), "/"), c);
  EXPECT_FALSE(c.to_json(false).contains("store"));
}

TEST(RunConfig, ErrorsCarryFieldPaths) {
  EXPECT_EQ(field_of({{"B", 0}}), "/B");
  EXPECT_EQ(field_of({{"K", -1}}), "/K");
  EXPECT_EQ(field_of({{"agents", {"emily_carter", "nobody"}}}), "/agents/1");
  EXPECT_EQ(field_of({{"agents", {"emily_carter", "emily_carter"}}}), "/agents/1");
  EXPECT_EQ(field_of({{"strategy", "Telepathy"}}), "/strategy");
  EXPECT_EQ(field_of({{"intervention", {{"scope", "Everywhere"}}}}), "/intervention/scope");
  EXPECT_EQ(field_of({{"intervention", {{"scripted", json::array({{{"role", "Directive"}, {"text", "x"}}})}}}}),
            "/intervention/scripted");
  EXPECT_EQ(field_of({{"run_id", "../escape"}}), "/run_id");
  EXPECT_EQ(field_of({{"task", nullptr}}), "/task");
  EXPECT_EQ(field_of({{"backend", {{"kind", "Psychic"}}}}), "/backend");
  EXPECT_EQ(field_of({{"N", 9}, {"agents", nullptr}}), "/N");
  EXPECT_EQ(field_of({{"B", 5}}), "<accepted>");
}

TEST(RunConfig, AgentCountSelectsBuiltinPersonasInOrder) {
  const auto c = test::toy_config("/tmp/x", {{"agents", nullptr}, {"N", 4}});
  ASSERT_EQ(c.agents.size(), 4u);
  EXPECT_EQ(c.agents[3].agent_id, "amina_thompson");
}

TEST(RunConfig, StoreDefaultsNextToTheConfigFile) {
  auto doc = json::parse(read_file(test::data_path("configs/pis_mock.json")));
  doc.erase("store");
  const auto base = test::data_path("configs");
  const auto c = RunConfig::from_json(doc, base);
  EXPECT_EQ(c.store, base / "runs");
}

TEST(RunConfig, EmptyCodebookNeedsEvolution) {
  EXPECT_EQ(field_of({{"seed_codebook", nullptr}, {"evolve_every", 0}}), "/evolve_every");
  const auto c = test::toy_config("/tmp/x", {{"seed_codebook", nullptr}});
  EXPECT_TRUE(c.initial_codebook().rules.empty());
}

}  // namespace
}  // namespace quorum
