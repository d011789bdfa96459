#pragma once

#include <cstdint>
#include <memory>
#include <string>

namespace riskgraph {

/// Name of the environment variable holding the LLM API key. The key is
/// never accepted as a flag and never written to any output.
inline constexpr const char* kApiKeyEnvVar = "RISKGRAPH_LLM_API_KEY";

struct ChatRequest {
  std::string model;
  std::string system;
  std::string user;
};

struct ChatResponse {
  std::string text;  // extracted completion text
  std::string raw;   // raw response body
};

class LlmClient {
public:
  virtual ~LlmClient() = default;
  virtual ChatResponse complete(const ChatRequest& request) = 0;
  virtual std::string id() const = 0;
};

/// Pulls the completion text out of common response shapes:
/// {"text": ...}, {"content": "..."}, {"content": [{"text": ...}]},
/// {"choices": [{"message": {"content": ...}}]}.
/// Throws Error(SchemaViolation) when none applies.
std::string extract_completion_text(const std::string& body);

/// POSTs {"model", "system", "user"} as JSON to the configured endpoint.
class HttpLlmClient : public LlmClient {
public:
  HttpLlmClient(std::string url, std::string model, double timeout_seconds = 30.0);
  ChatResponse complete(const ChatRequest& request) override;
  std::string id() const override;

private:
  std::string base_;  // scheme://host[:port]
  std::string path_;
  std::string model_;
  double timeout_seconds_;
};

}  // namespace riskgraph
