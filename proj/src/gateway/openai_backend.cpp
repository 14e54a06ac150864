#include "quorum/gateway/openai_backend.hpp"

#include <httplib.h>
#include <spdlog/spdlog.h>

#include <cstdlib>
#include <regex>
#include <thread>

namespace quorum::gateway {

namespace {

struct Endpoint {
  std::string origin;  // scheme://host[:port]
  std::string path;    // prefix such as "/v1", without trailing slash
};

Endpoint split_base_url(const std::string& base_url) {
  static const std::regex pattern(R"(^(https?://[^/]+)(/.*)?$)");
  std::smatch m;
  if (!std::regex_match(base_url, m, pattern)) {
    throw GatewayError(GatewayError::Kind::BackendUnavailable, "malformed base_url '" + base_url + "'");
  }
  std::string path = m[2].matched ? m[2].str() : "";
  while (!path.empty() && path.back() == '/') path.pop_back();
  return {m[1].str(), path};
}

bool transient_status(int status) { return status == 429 || (status >= 500 && status <= 599); }

class SemaphoreGuard {
 public:
  explicit SemaphoreGuard(std::counting_semaphore<>& s) : s_(s) { s_.acquire(); }
  ~SemaphoreGuard() { s_.release(); }
  SemaphoreGuard(const SemaphoreGuard&) = delete;
  SemaphoreGuard& operator=(const SemaphoreGuard&) = delete;

 private:
  std::counting_semaphore<>& s_;
};

}  // namespace

OpenAiBackend::OpenAiBackend(OpenAiCompatible config)
    : config_(std::move(config)),
      in_flight_(std::make_unique<std::counting_semaphore<>>(config_.max_in_flight)) {
  if (!config_.api_key_env.empty()) {
    if (const char* key = std::getenv(config_.api_key_env.c_str())) api_key_ = key;
  }
}

json OpenAiBackend::request_body(const ChatRequest& request) const {
  json messages = json::array();
  for (const auto& m : request.messages) {
    messages.push_back({{"role", to_string(m.role)}, {"content", m.content}});
  }
  json body = {{"model", config_.model_id},
               {"messages", std::move(messages)},
               {"temperature", request.sampling.temperature},
               {"max_tokens", request.sampling.max_tokens}};
  if (request.sampling.seed) body["seed"] = *request.sampling.seed;
  return body;
}

std::string OpenAiBackend::complete(const ChatRequest& request) {
  const auto endpoint = split_base_url(config_.base_url);
  const auto body = request_body(request).dump();
  const auto timeout = config_.timeout;

  SemaphoreGuard guard(*in_flight_);
  GatewayError::Kind last_kind = GatewayError::Kind::BackendUnavailable;
  std::string last_detail;
  for (int attempt = 0; attempt <= config_.max_retries; ++attempt) {
    if (attempt > 0) {
      std::this_thread::sleep_for(config_.initial_backoff * (1LL << (attempt - 1)));
    }
    httplib::Client client(endpoint.origin);
    client.set_connection_timeout(timeout);
    client.set_read_timeout(timeout);
    client.set_write_timeout(timeout);
    httplib::Headers headers;
    if (!api_key_.empty()) headers.emplace("Authorization", "Bearer " + api_key_);

    const auto started = std::chrono::steady_clock::now();
    auto res = client.Post(endpoint.path + "/chat/completions", headers, body, "application/json");
    if (!res) {
      const auto elapsed = std::chrono::steady_clock::now() - started;
      if (elapsed >= timeout) {
        throw GatewayError(GatewayError::Kind::Timeout,
                           "no response within " + std::to_string(timeout.count()) + " ms");
      }
      last_kind = GatewayError::Kind::BackendUnavailable;
      last_detail = httplib::to_string(res.error());
      spdlog::warn("{}: attempt {} failed: {}", request.agent_id, attempt + 1, last_detail);
      continue;
    }
    if (transient_status(res->status)) {
      last_kind = res->status == 429 ? GatewayError::Kind::RateLimited
                                     : GatewayError::Kind::BackendUnavailable;
      last_detail = "HTTP " + std::to_string(res->status);
      spdlog::warn("{}: attempt {} got {}", request.agent_id, attempt + 1, last_detail);
      continue;
    }
    if (res->status != 200) {
      throw GatewayError(GatewayError::Kind::BackendUnavailable,
                         "HTTP " + std::to_string(res->status) + ": " + res->body.substr(0, 200));
    }
    auto doc = json::parse(res->body, nullptr, false);
    if (doc.is_discarded()) {
      throw GatewayError(GatewayError::Kind::BackendUnavailable, "response is not JSON");
    }
    try {
      auto content = doc.at("choices").at(0).at("message").at("content").get<std::string>();
      if (doc.contains("usage")) {
        const auto& usage = doc.at("usage");
        spdlog::debug("{} call {}: prompt_tokens={} completion_tokens={}", request.agent_id,
                      request.call_index, usage.value("prompt_tokens", 0),
                      usage.value("completion_tokens", 0));
      }
      return content;
    } catch (const json::exception& e) {
      throw GatewayError(GatewayError::Kind::BackendUnavailable,
                         std::string("unexpected response shape: ") + e.what());
    }
  }
  throw GatewayError(last_kind, last_detail + " after " + std::to_string(config_.max_retries) +
                                    " retries");
}

}  // namespace quorum::gateway
