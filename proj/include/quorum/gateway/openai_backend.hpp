#pragma once

#include <memory>
#include <semaphore>
#include <string>

#include "quorum/gateway/backend.hpp"

namespace quorum::gateway {

/// Client for `POST {base_url}/chat/completions`. Retries 429, 5xx and
/// connection failures with exponential backoff; caps concurrent requests.
class OpenAiBackend : public ChatBackend {
 public:
  explicit OpenAiBackend(OpenAiCompatible config);

  std::string complete(const ChatRequest& request) override;
  std::string backbone() const override { return config_.model_id; }

  /// Request body sent for `request`; exposed for tests.
  json request_body(const ChatRequest& request) const;

 private:
  OpenAiCompatible config_;
  std::string api_key_;
  std::unique_ptr<std::counting_semaphore<>> in_flight_;
};

}  // namespace quorum::gateway
