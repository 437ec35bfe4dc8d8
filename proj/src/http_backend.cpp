#include <thread>

#include <httplib.h>

#include "fincon/error.hpp"
#include "fincon/llm_gateway.hpp"

namespace fincon {

using nlohmann::json;

HttpBackend::HttpBackend(HttpBackendConfig config) : config_(std::move(config)) {
  const auto scheme_end = config_.endpoint.find("://");
  if (scheme_end == std::string::npos)
    raise(ErrorCode::ConfigError, "LLM endpoint must be an http(s) URL: " + config_.endpoint);
  const auto scheme = config_.endpoint.substr(0, scheme_end);
  if (scheme != "http" && scheme != "https")
    raise(ErrorCode::ConfigError, "unsupported LLM endpoint scheme " + scheme);
  const auto path_start = config_.endpoint.find('/', scheme_end + 3);
  if (path_start == std::string::npos) {
    scheme_host_port_ = config_.endpoint;
    path_ = "/v1/chat/completions";
  } else {
    scheme_host_port_ = config_.endpoint.substr(0, path_start);
    path_ = config_.endpoint.substr(path_start);
  }
}

json HttpBackend::build_request_body(const HttpBackendConfig& config, const CompletionRequest& request,
                                     const std::string& user_prompt) {
  json body = {{"model", config.model},
               {"temperature", request.temperature},
               {"response_format", {{"type", "json_object"}}},
               {"messages",
                json::array({{{"role", "system"}, {"content", request.system_prompt}},
                             {{"role", "user"}, {"content", user_prompt}}})}};
  if (request.seed) body["seed"] = *request.seed;
  return body;
}

std::string HttpBackend::parse_response_body(const std::string& body) {
  auto j = json::parse(body, nullptr, false);
  if (j.is_discarded()) raise(ErrorCode::BackendUnavailable, "response body is not JSON");
  try {
    return j.at("choices").at(0).at("message").at("content").get<std::string>();
  } catch (const json::exception& e) {
    raise(ErrorCode::BackendUnavailable, std::string("unexpected response shape: ") + e.what());
  }
}

void HttpBackend::throttle() {
  if (config_.min_request_interval.count() <= 0) return;
  std::unique_lock lock(rate_mutex_);
  const auto now = std::chrono::steady_clock::now();
  const auto slot = std::max(now, next_allowed_);
  next_allowed_ = slot + config_.min_request_interval;
  lock.unlock();
  std::this_thread::sleep_until(slot);
}

std::string HttpBackend::generate(const CompletionRequest& request, const std::string& user_prompt) {
  throttle();
  httplib::Client client(scheme_host_port_);
  const auto secs = std::chrono::duration_cast<std::chrono::seconds>(config_.timeout);
  const auto usecs = std::chrono::duration_cast<std::chrono::microseconds>(config_.timeout - secs);
  client.set_connection_timeout(secs.count(), usecs.count());
  client.set_read_timeout(secs.count(), usecs.count());
  client.set_write_timeout(secs.count(), usecs.count());

  httplib::Headers headers;
  if (!config_.api_key.empty()) headers.emplace("Authorization", "Bearer " + config_.api_key);
  const auto body = build_request_body(config_, request, user_prompt).dump();
  auto res = client.Post(path_, headers, body, "application/json");
  if (!res) {
    const auto err = res.error();
    if (err == httplib::Error::ConnectionTimeout || err == httplib::Error::Read ||
        err == httplib::Error::Write)
      raise(ErrorCode::Timeout, scheme_host_port_ + ": " + httplib::to_string(err));
    raise(ErrorCode::BackendUnavailable, scheme_host_port_ + ": " + httplib::to_string(err));
  }
  if (res->status != 200)
    raise(ErrorCode::BackendUnavailable, scheme_host_port_ + " returned HTTP " + std::to_string(res->status));
  return parse_response_body(res->body);
}

}  // namespace fincon
