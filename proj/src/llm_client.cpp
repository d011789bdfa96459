#include "riskgraph/llm_client.hpp"

#include <cstdlib>

#include <httplib.h>
#include <nlohmann/json.hpp>

#include "riskgraph/errors.hpp"

namespace riskgraph {

std::string extract_completion_text(const std::string& body) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(body);
  } catch (const nlohmann::json::exception& e) {
    fail(ErrorCode::SchemaViolation, std::string("response is not JSON: ") + e.what() +
                                         "; payload: " + body);
  }
  try {
    if (j.contains("text") && j["text"].is_string()) return j["text"].get<std::string>();
    if (j.contains("content")) {
      if (j["content"].is_string()) return j["content"].get<std::string>();
      if (j["content"].is_array() && !j["content"].empty() && j["content"][0].contains("text"))
        return j["content"][0]["text"].get<std::string>();
    }
    if (j.contains("choices") && j["choices"].is_array() && !j["choices"].empty()) {
      const auto& c = j["choices"][0];
      if (c.contains("message")) return c["message"].at("content").get<std::string>();
      if (c.contains("text")) return c["text"].get<std::string>();
    }
  } catch (const nlohmann::json::exception& e) {
    fail(ErrorCode::SchemaViolation, std::string(e.what()) + "; payload: " + body);
  }
  fail(ErrorCode::SchemaViolation, "no completion text found in response; payload: " + body);
}

HttpLlmClient::HttpLlmClient(std::string url, std::string model, double timeout_seconds)
    : model_(std::move(model)), timeout_seconds_(timeout_seconds) {
  if (url.empty()) fail(ErrorCode::BadConfig, "LLM endpoint URL is empty");
  const size_t scheme = url.find("://");
  if (scheme == std::string::npos)
    fail(ErrorCode::BadConfig, "LLM endpoint URL must include a scheme: " + url);
  const size_t slash = url.find('/', scheme + 3);
  if (slash == std::string::npos) {
    base_ = url;
    path_ = "/";
  } else {
    base_ = url.substr(0, slash);
    path_ = url.substr(slash);
  }
}

std::string HttpLlmClient::id() const { return "http:" + base_ + path_; }

ChatResponse HttpLlmClient::complete(const ChatRequest& request) {
  httplib::Client client(base_);
  client.set_connection_timeout(static_cast<time_t>(timeout_seconds_),
                                static_cast<time_t>((timeout_seconds_ - static_cast<time_t>(
                                                                            timeout_seconds_)) *
                                                    1e6));
  client.set_read_timeout(static_cast<time_t>(timeout_seconds_), 0);
  client.set_write_timeout(static_cast<time_t>(timeout_seconds_), 0);

  httplib::Headers headers;
  if (const char* key = std::getenv(kApiKeyEnvVar)) {
    headers.emplace("Authorization", std::string("Bearer ") + key);
    headers.emplace("x-api-key", key);
  }

  nlohmann::json body;
  body["model"] = request.model.empty() ? model_ : request.model;
  body["system"] = request.system;
  body["user"] = request.user;

  auto res = client.Post(path_, headers, body.dump(), "application/json");
  if (!res)
    fail(ErrorCode::BackendUnavailable,
         "no response from " + base_ + path_ + " (" + httplib::to_string(res.error()) + ")");
  if (res->status < 200 || res->status >= 300)
    fail(ErrorCode::BackendUnavailable,
         "HTTP " + std::to_string(res->status) + " from " + base_ + path_);

  ChatResponse out;
  out.raw = res->body;
  out.text = extract_completion_text(res->body);
  return out;
}

}  // namespace riskgraph
