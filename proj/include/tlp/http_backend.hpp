#pragma once

// Completion backend over plain HTTP. Configured from the environment:
//   TLP_LLM_ENDPOINT    http://host[:port]/path   (required)
//   TLP_LLM_MODEL       model name sent with each request
//   TLP_LLM_TIMEOUT_MS  per-request timeout, default 30000
//   TLP_LLM_API_KEY     sent as a bearer token when set
//
// Request body: {"model", "prompt", "max_tokens", "stop"}. The reply may be
// {"text": ...}, {"choices": [{"text": ...}]} or
// {"choices": [{"message": {"content": ...}}]}.

#include <cstdlib>
#include <optional>
#include <string>

#include <httplib.h>
#include <json.hpp>

#include "tlp/core.hpp"
#include "tlp/promptkit.hpp"

namespace tlp {

struct HttpBackendConfig {
  std::string host;
  int port = 80;
  std::string path = "/";
  std::string model;
  int timeout_ms = 30000;
  std::string api_key;
  int max_tokens = 512;
};

inline HttpBackendConfig parse_endpoint(std::string_view url) {
  HttpBackendConfig c;
  constexpr std::string_view scheme = "http://";
  if (url.substr(0, scheme.size()) != scheme) {
    throw Error(Errc::config_error, "TLP_LLM_ENDPOINT: only http:// endpoints are supported");
  }
  url.remove_prefix(scheme.size());
  const auto slash = url.find('/');
  std::string_view authority = url.substr(0, slash);
  c.path = slash == std::string_view::npos ? "/" : std::string(url.substr(slash));
  const auto colon = authority.find(':');
  c.host = std::string(authority.substr(0, colon));
  if (colon != std::string_view::npos) {
    try {
      c.port = std::stoi(std::string(authority.substr(colon + 1)));
    } catch (const std::exception&) {
      throw Error(Errc::config_error, "TLP_LLM_ENDPOINT: bad port");
    }
  }
  if (c.host.empty()) throw Error(Errc::config_error, "TLP_LLM_ENDPOINT: missing host");
  return c;
}

inline HttpBackendConfig http_config_from_env() {
  const char* endpoint = std::getenv("TLP_LLM_ENDPOINT");
  if (!endpoint || !*endpoint) throw Error(Errc::config_error, "TLP_LLM_ENDPOINT is not set");
  auto c = parse_endpoint(endpoint);
  if (const char* m = std::getenv("TLP_LLM_MODEL")) c.model = m;
  if (const char* t = std::getenv("TLP_LLM_TIMEOUT_MS")) {
    try {
      c.timeout_ms = std::stoi(t);
    } catch (const std::exception&) {
      throw Error(Errc::config_error, "TLP_LLM_TIMEOUT_MS: not a number");
    }
  }
  if (const char* k = std::getenv("TLP_LLM_API_KEY")) c.api_key = k;
  return c;
}

class HttpBackend final : public CompletionBackend {
 public:
  explicit HttpBackend(HttpBackendConfig cfg) : cfg_(std::move(cfg)) {}

  std::string complete(const std::string& prompt) override {
    httplib::Client cli(cfg_.host, cfg_.port);
    const auto sec = cfg_.timeout_ms / 1000;
    const auto usec = (cfg_.timeout_ms % 1000) * 1000;
    cli.set_connection_timeout(sec, usec);
    cli.set_read_timeout(sec, usec);
    cli.set_write_timeout(sec, usec);
    httplib::Headers headers;
    if (!cfg_.api_key.empty()) headers.emplace("Authorization", "Bearer " + cfg_.api_key);
    const nlohmann::json body{{"model", cfg_.model},
                              {"prompt", prompt},
                              {"max_tokens", cfg_.max_tokens},
                              {"stop", {"\nVLM:"}}};
    auto res = cli.Post(cfg_.path, headers, body.dump(), "application/json");
    if (!res) throw Error(Errc::backend_error, "request failed: " + httplib::to_string(res.error()));
    if (res->status != 200) throw Error(Errc::backend_error, "HTTP status " + std::to_string(res->status));
    try {
      const auto j = nlohmann::json::parse(res->body);
      if (j.contains("text")) return j.at("text").get<std::string>();
      const auto& choice = j.at("choices").at(0);
      if (choice.contains("text")) return choice.at("text").get<std::string>();
      return choice.at("message").at("content").get<std::string>();
    } catch (const nlohmann::json::exception& e) {
      throw Error(Errc::backend_error, std::string("malformed reply body: ") + e.what());
    }
  }

 private:
  HttpBackendConfig cfg_;
};

}  // namespace tlp
