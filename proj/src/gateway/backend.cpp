#include "quorum/gateway/backend.hpp"

#include <sstream>

#include "quorum/dataset.hpp"
#include "quorum/gateway/mock_backend.hpp"
#include "quorum/gateway/openai_backend.hpp"

namespace quorum::gateway {

GatewayError::GatewayError(Kind kind, const std::string& message)
    : std::runtime_error(std::string(to_string(kind)) + ": " + message), kind_(kind) {}

std::string_view to_string(GatewayError::Kind kind) {
  switch (kind) {
    case GatewayError::Kind::BackendUnavailable: return "BackendUnavailable";
    case GatewayError::Kind::RateLimited: return "RateLimited";
    case GatewayError::Kind::Timeout: return "Timeout";
    case GatewayError::Kind::ScriptExhausted: return "ScriptExhausted";
    case GatewayError::Kind::ScriptMismatch: return "ScriptMismatch";
    case GatewayError::Kind::AllSamplesUnparseable: return "AllSamplesUnparseable";
  }
  return "GatewayError";
}

namespace {

ScriptLine script_line_from_json(const json& doc) {
  ScriptLine line;
  if (!doc.is_object()) throw DomainError("script line is not an object");
  if (!doc.contains("reply") || !doc.at("reply").is_string()) {
    throw DomainError("script line needs a string \"reply\"");
  }
  line.reply = doc.at("reply").get<std::string>();
  if (doc.contains("agent") && !doc.at("agent").is_null()) {
    line.agent = doc.at("agent").get<std::string>();
  }
  if (doc.contains("match") && !doc.at("match").is_null()) {
    line.match = doc.at("match").get<std::string>();
  }
  return line;
}

json script_line_to_json(const ScriptLine& line) {
  json doc = json::object();
  if (line.agent) doc["agent"] = *line.agent;
  if (line.match) doc["match"] = *line.match;
  doc["reply"] = line.reply;
  return doc;
}

}  // namespace

std::vector<ScriptLine> parse_script(const std::string& jsonl) {
  std::vector<ScriptLine> lines;
  std::istringstream in(jsonl);
  std::string text;
  std::size_t line_no = 0;
  while (std::getline(in, text)) {
    ++line_no;
    if (trim(text).empty()) continue;
    auto doc = json::parse(text, nullptr, false);
    if (doc.is_discarded()) {
      throw DomainError("script line " + std::to_string(line_no) + " is not valid JSON");
    }
    try {
      lines.push_back(script_line_from_json(doc));
    } catch (const std::exception& e) {
      throw DomainError("script line " + std::to_string(line_no) + ": " + e.what());
    }
  }
  return lines;
}

BackendDescriptor backend_from_json(const json& doc, const std::filesystem::path& base_dir) {
  const auto kind = doc.at("kind").get<std::string>();
  if (kind == "ScriptedMock") {
    ScriptedMock mock;
    if (doc.contains("script") && !doc.at("script").is_null()) {
      const auto& script = doc.at("script");
      if (script.is_string()) {
        std::filesystem::path p = script.get<std::string>();
        mock.script_path = p.is_absolute() ? p : base_dir / p;
      } else if (script.is_array()) {
        for (const auto& line : script) mock.inline_script.push_back(script_line_from_json(line));
      } else {
        throw DomainError("script must be a path or an array of lines");
      }
    }
    mock.rng_seed = doc.value("rng_seed", std::uint64_t{0});
    mock.synthetic = doc.value("synthetic", false);
    return mock;
  }
  if (kind == "OpenAiCompatible") {
    OpenAiCompatible live;
    live.base_url = doc.at("base_url").get<std::string>();
    live.model_id = doc.at("model_id").get<std::string>();
    live.api_key_env = doc.value("api_key_env", std::string("OPENAI_API_KEY"));
    live.timeout = std::chrono::milliseconds(doc.value("timeout_ms", 120'000));
    live.max_in_flight = doc.value("max_in_flight", 4);
    live.max_retries = doc.value("max_retries", 3);
    live.initial_backoff = std::chrono::milliseconds(doc.value("backoff_ms", 1'000));
    live.temperature = doc.value("temperature", 0.7);
    if (live.max_in_flight < 1) throw DomainError("max_in_flight must be at least 1");
    if (live.max_retries < 0) throw DomainError("max_retries must not be negative");
    return live;
  }
  throw DomainError("unknown backend kind '" + kind + "'");
}

json backend_to_json(const BackendDescriptor& descriptor) {
  if (const auto* mock = std::get_if<ScriptedMock>(&descriptor)) {
    json doc = {{"kind", "ScriptedMock"}, {"rng_seed", mock->rng_seed}, {"synthetic", mock->synthetic}};
    if (mock->script_path) {
      doc["script"] = mock->script_path->string();
    } else if (!mock->inline_script.empty()) {
      doc["script"] = json::array();
      for (const auto& line : mock->inline_script) doc["script"].push_back(script_line_to_json(line));
    }
    return doc;
  }
  const auto& live = std::get<OpenAiCompatible>(descriptor);
  return {{"kind", "OpenAiCompatible"},
          {"base_url", live.base_url},
          {"model_id", live.model_id},
          {"api_key_env", live.api_key_env},
          {"timeout_ms", live.timeout.count()},
          {"max_in_flight", live.max_in_flight},
          {"max_retries", live.max_retries},
          {"backoff_ms", live.initial_backoff.count()},
          {"temperature", live.temperature}};
}

std::unique_ptr<ChatBackend> make_backend(const BackendDescriptor& descriptor, const TaskSpec& spec,
                                          std::uint64_t run_seed) {
  if (const auto* mock = std::get_if<ScriptedMock>(&descriptor)) {
    auto lines = mock->inline_script;
    if (mock->script_path) lines = parse_script(read_file(*mock->script_path));
    const std::uint64_t seed = mock->rng_seed ^ (run_seed * 0x9E3779B97F4A7C15ULL);
    return std::make_unique<MockBackend>(std::move(lines), seed, mock->synthetic, spec);
  }
  return std::make_unique<OpenAiBackend>(std::get<OpenAiCompatible>(descriptor));
}

}  // namespace quorum::gateway
