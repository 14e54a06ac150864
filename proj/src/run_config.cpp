#include "quorum/run_config.hpp"

#include <set>

#include "quorum/dataset.hpp"

namespace quorum {

namespace {

std::filesystem::path resolve(const std::filesystem::path& base, const std::string& p) {
  std::filesystem::path path(p);
  return path.is_absolute() ? path : (base / path).lexically_normal();
}

// Runs `fn`, rethrowing any failure as ConfigInvalid at `field`.
template <typename Fn>
auto at_field(const std::string& field, Fn&& fn) -> decltype(fn()) {
  try {
    return fn();
  } catch (const ConfigInvalid&) {
    throw;
  } catch (const std::exception& e) {
    throw ConfigInvalid(field, e.what());
  }
}

int int_field(const json& doc, const char* name, int fallback, int minimum) {
  const std::string field = std::string("/") + name;
  if (!doc.contains(name) || doc.at(name).is_null()) return fallback;
  const auto& v = doc.at(name);
  if (!v.is_number_integer()) throw ConfigInvalid(field, "must be an integer");
  const auto value = v.get<long long>();
  if (value < minimum) throw ConfigInvalid(field, "must be at least " + std::to_string(minimum));
  return static_cast<int>(value);
}

json persona_json(const gateway::Persona& p) {
  return {{"persona_id", p.persona_id}, {"display_name", p.display_name}, {"system_prompt", p.system_prompt}};
}

}  // namespace

Codebook RunConfig::initial_codebook() const {
  if (seed_codebook) return *seed_codebook;
  return Codebook{};
}

json RunConfig::to_json(bool include_store) const {
  json agents_json = json::array();
  json personas_json = json::array();
  for (const auto& a : agents) {
    agents_json.push_back(a.agent_id);
    if (!gateway::find_builtin_persona(a.persona.persona_id) ||
        *gateway::find_builtin_persona(a.persona.persona_id) != a.persona) {
      personas_json.push_back(persona_json(a.persona));
    }
  }
  json doc = {{"task", task.to_json()},
              {"dataset", dataset.string()},
              {"backend", gateway::backend_to_json(backend)},
              {"agents", agents_json},
              {"personas", personas_json},
              {"B", batch_size},
              {"K", max_rounds},
              {"strategy", strategy.name()},
              {"intervention",
               {{"scope", to_string(intervention.scope)},
                {"role", to_string(intervention.role)},
                {"wait", to_string(intervention.wait)},
                {"timeout_ms", intervention.timeout.count()},
                {"scripted", intervention.scripted}}},
              {"seed_codebook", seed_codebook ? seed_codebook->to_json() : json(nullptr)},
              {"runs", runs},
              {"seed", seed},
              {"evolve_every", evolve_every},
              {"per_entry_coding", per_entry_coding},
              {"peer_char_budget", peer_char_budget},
              {"mediation_rounds", mediation_rounds ? json(*mediation_rounds) : json(nullptr)},
              {"temperature", temperature},
              {"clock", logical_clock ? "logical" : "system"}};
  if (include_store) {
    doc["store"] = store.string();
    doc["run_id"] = run_id ? json(*run_id) : json(nullptr);
  }
  return doc;
}

RunConfig RunConfig::from_json(const json& doc, const std::filesystem::path& base_dir) {
  if (!doc.is_object()) throw ConfigInvalid("", "configuration must be a JSON object");
  RunConfig c;

  if (!doc.contains("task")) throw ConfigInvalid("/task", "required");
  c.task = at_field("/task", [&] {
    const auto& t = doc.at("task");
    return t.is_string() ? load_task_spec(resolve(base_dir, t.get<std::string>())) : TaskSpec::from_json(t);
  });

  if (!doc.contains("dataset") || !doc.at("dataset").is_string()) throw ConfigInvalid("/dataset", "required path");
  c.dataset = resolve(base_dir, doc.at("dataset").get<std::string>());

  if (!doc.contains("backend")) throw ConfigInvalid("/backend", "required");
  c.backend = at_field("/backend", [&] { return gateway::backend_from_json(doc.at("backend"), base_dir); });

  std::vector<gateway::Persona> personas = gateway::builtin_personas();
  if (doc.contains("personas") && !doc.at("personas").is_null()) {
    const auto& list = doc.at("personas");
    if (!list.is_array()) throw ConfigInvalid("/personas", "must be an array");
    for (std::size_t i = 0; i < list.size(); ++i) {
      const auto field = "/personas/" + std::to_string(i);
      gateway::Persona p = at_field(field, [&] {
        return gateway::Persona{list[i].at("persona_id").get<std::string>(),
                                list[i].value("display_name", list[i].at("persona_id").get<std::string>()),
                                list[i].at("system_prompt").get<std::string>()};
      });
      if (trim(p.system_prompt).empty()) throw ConfigInvalid(field + "/system_prompt", "must not be empty");
      auto same = std::find_if(personas.begin(), personas.end(),
                               [&](const gateway::Persona& q) { return q.persona_id == p.persona_id; });
      if (same != personas.end()) {
        *same = p;
      } else {
        personas.push_back(p);
      }
    }
  }
  const auto persona_by_id = [&](const std::string& id) -> std::optional<gateway::Persona> {
    for (const auto& p : personas) {
      if (p.persona_id == id) return p;
    }
    return std::nullopt;
  };

  if (doc.contains("agents") && doc.at("agents").is_array()) {
    const auto& list = doc.at("agents");
    if (list.empty()) throw ConfigInvalid("/agents", "needs at least one agent");
    std::set<std::string> seen;
    for (std::size_t i = 0; i < list.size(); ++i) {
      const auto field = "/agents/" + std::to_string(i);
      if (!list[i].is_string()) throw ConfigInvalid(field, "must be a persona id");
      const auto id = list[i].get<std::string>();
      auto persona = persona_by_id(id);
      if (!persona) throw ConfigInvalid(field, "unknown persona id '" + id + "'");
      if (!seen.insert(id).second) throw ConfigInvalid(field, "duplicate agent '" + id + "'");
      c.agents.push_back({id, *persona});
    }
  } else {
    const int n = int_field(doc, "N", 2, 1);
    if (doc.contains("agents") && !doc.at("agents").is_null() && !doc.at("agents").is_number_integer()) {
      throw ConfigInvalid("/agents", "must be a list of persona ids");
    }
    const int count = doc.contains("agents") && doc.at("agents").is_number_integer() ? int_field(doc, "agents", 2, 1) : n;
    if (static_cast<std::size_t>(count) > personas.size()) {
      throw ConfigInvalid(doc.contains("agents") ? "/agents" : "/N",
                          "only " + std::to_string(personas.size()) + " personas are available");
    }
    for (int i = 0; i < count; ++i) c.agents.push_back({personas[i].persona_id, personas[i]});
  }

  c.batch_size = int_field(doc, "B", 20, 1);
  c.max_rounds = int_field(doc, "K", 3, 0);
  if (doc.contains("strategy") && !doc.at("strategy").is_null()) {
    c.strategy = at_field("/strategy", [&] {
      const auto& s = doc.at("strategy");
      if (s.is_object()) {
        auto st = gateway::Strategy::parse(s.at("kind").get<std::string>());
        if (s.contains("samples")) st.samples = s.at("samples").get<int>();
        if (st.samples < 1) throw DomainError("samples must be at least 1");
        return st;
      }
      return gateway::Strategy::parse(s.get<std::string>());
    });
  }

  if (doc.contains("intervention") && !doc.at("intervention").is_null()) {
    const auto& iv = doc.at("intervention");
    if (!iv.is_object()) throw ConfigInvalid("/intervention", "must be an object");
    if (iv.contains("scope")) {
      c.intervention.scope = at_field("/intervention/scope", [&] {
        return intervention_scope_from_string(iv.at("scope").get<std::string>());
      });
    }
    if (iv.contains("role")) {
      c.intervention.role = at_field("/intervention/role", [&] {
        return intervention_role_from_string(iv.at("role").get<std::string>());
      });
    }
    if (iv.contains("wait")) {
      c.intervention.wait = at_field("/intervention/wait", [&] {
        return wait_policy_from_string(iv.at("wait").get<std::string>());
      });
    }
    if (iv.contains("timeout_ms")) {
      c.intervention.timeout = std::chrono::milliseconds(int_field(iv, "timeout_ms", 0, 0));
    }
    if (iv.contains("scripted") && !iv.at("scripted").is_null()) {
      c.intervention.scripted = iv.at("scripted");
      at_field("/intervention/scripted",
               [&] { return ScriptedChannel::rules_from_json(c.intervention.scripted, c.task, c.intervention.role); });
    }
  }

  if (doc.contains("seed_codebook") && !doc.at("seed_codebook").is_null()) {
    c.seed_codebook = at_field("/seed_codebook", [&] {
      const auto& s = doc.at("seed_codebook");
      json cb = s.is_string() ? json::parse(read_file(resolve(base_dir, s.get<std::string>()))) : s;
      auto codebook = Codebook::from_json(cb, &c.task);
      codebook.validate();
      return codebook;
    });
  }

  c.runs = int_field(doc, "runs", 1, 1);
  if (doc.contains("seed")) {
    c.seed = at_field("/seed", [&] { return doc.at("seed").get<std::uint64_t>(); });
  }
  c.evolve_every = int_field(doc, "evolve_every", 1, 0);
  if (!c.seed_codebook && c.evolve_every == 0) {
    throw ConfigInvalid("/evolve_every", "an empty seed codebook requires evolution");
  }
  c.per_entry_coding = doc.value("per_entry_coding", false);
  c.peer_char_budget = static_cast<std::size_t>(int_field(doc, "peer_char_budget", 6000, 64));
  if (doc.contains("mediation_rounds") && !doc.at("mediation_rounds").is_null()) {
    c.mediation_rounds = int_field(doc, "mediation_rounds", 0, 0);
  }
  if (doc.contains("temperature")) {
    c.temperature = at_field("/temperature", [&] { return doc.at("temperature").get<double>(); });
  }
  if (doc.contains("store") && doc.at("store").is_string()) c.store = resolve(base_dir, doc.at("store").get<std::string>());
  else c.store = resolve(base_dir, "runs");
  if (doc.contains("run_id") && !doc.at("run_id").is_null()) {
    c.run_id = doc.at("run_id").get<std::string>();
    static const std::string allowed = "abcdefghijklmnopqrstuvwxyzABCDEFGHIJKLMNOPQRSTUVWXYZ0123456789-_.";
    if (c.run_id->empty() || c.run_id->find_first_not_of(allowed) != std::string::npos || *c.run_id == "." ||
        *c.run_id == "..") {
      throw ConfigInvalid("/run_id", "may contain only letters, digits, '-', '_' and '.'");
    }
  }
  if (doc.contains("clock")) {
    const auto clock = doc.at("clock").get<std::string>();
    if (clock != "logical" && clock != "system") throw ConfigInvalid("/clock", "must be 'logical' or 'system'");
    c.logical_clock = clock == "logical";
  } else {
    c.logical_clock = std::holds_alternative<gateway::ScriptedMock>(c.backend);
  }
  return c;
}

RunConfig RunConfig::load(const std::filesystem::path& path) {
  std::string text;
  try {
    text = read_file(path);
  } catch (const std::exception& e) {
    throw ConfigInvalid("", e.what());
  }
  auto doc = json::parse(text, nullptr, false);
  if (doc.is_discarded()) throw ConfigInvalid("", path.string() + " is not valid JSON");
  return from_json(doc, std::filesystem::absolute(path).parent_path());
}

}  // namespace quorum
