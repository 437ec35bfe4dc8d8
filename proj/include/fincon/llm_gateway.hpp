#pragma once

#include <atomic>
#include <chrono>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

namespace fincon {

inline constexpr double kTradingTemperature = 0.3;
inline constexpr double kBeliefTemperature = 0.0;
inline constexpr int kDefaultMaxRetries = 2;

/// Phases used in the `<episode>:<date>:<phase>` step key.
namespace phase {
inline constexpr const char* kAnalyze = "analyze";
inline constexpr const char* kDecide = "decide";
inline constexpr const char* kReflect = "reflect";
inline constexpr const char* kConceptualize = "conceptualize";
inline constexpr const char* kBeliefUpdate = "belief_update";
}  // namespace phase

std::string make_step_key(const std::string& episode, const std::string& date_iso, const char* phase);

struct CompletionRequest {
  std::string role_tag;
  std::string step_key;
  std::string system_prompt;
  std::string user_prompt;
  std::string output_schema;
  double temperature = kTradingTemperature;
  int max_retries = kDefaultMaxRetries;
  std::optional<std::uint64_t> seed;
  // Checked after schema validation; a message counts as a schema violation.
  std::function<std::optional<std::string>(const nlohmann::json&)> extra_check;
};

struct ValidatedOutput {
  std::string schema_id;
  nlohmann::json fields;
  std::string raw_text;
  int attempts = 1;
};

/// One attempt as seen by the backend, for audit logs.
struct PromptRecord {
  std::string role_tag;
  std::string step_key;
  int attempt = 0;
  double temperature = 0;
  std::string system_prompt;
  std::string user_prompt;
  std::string response;
};

class LlmBackend {
public:
  virtual ~LlmBackend() = default;
  /// Raw model text for one attempt. `user_prompt` already carries any
  /// corrective suffix.
  virtual std::string generate(const CompletionRequest& request, const std::string& user_prompt) = 0;
  [[nodiscard]] virtual bool is_mock() const { return false; }
};

/// Scripted backend answering by exact (role_tag, step_key) lookup.
class MockBackend final : public LlmBackend {
public:
  static std::shared_ptr<MockBackend> load(const std::filesystem::path& path);
  static std::shared_ptr<MockBackend> parse(std::string_view jsonl);

  void add(std::string role_tag, std::string step_key, std::string response);

  std::string generate(const CompletionRequest& request, const std::string& user_prompt) override;
  [[nodiscard]] bool is_mock() const override { return true; }

  [[nodiscard]] std::size_t size() const { return script_.size(); }
  [[nodiscard]] std::vector<PromptRecord> calls() const;
  [[nodiscard]] std::size_t call_count() const;

private:
  std::map<std::pair<std::string, std::string>, std::string> script_;
  mutable std::mutex mutex_;
  std::vector<PromptRecord> calls_;
};

struct HttpBackendConfig {
  std::string endpoint;  // full URL, e.g. https://host/v1/chat/completions
  std::string api_key;
  std::string model;
  std::chrono::milliseconds timeout{30000};
  std::chrono::milliseconds min_request_interval{0};

  /// FINCON_LLM_ENDPOINT, FINCON_LLM_API_KEY, FINCON_LLM_MODEL.
  static std::optional<HttpBackendConfig> from_env();
};

/// OpenAI-compatible chat-completions client.
class HttpBackend final : public LlmBackend {
public:
  explicit HttpBackend(HttpBackendConfig config);
  std::string generate(const CompletionRequest& request, const std::string& user_prompt) override;

  static nlohmann::json build_request_body(const HttpBackendConfig& config, const CompletionRequest& request,
                                           const std::string& user_prompt);
  static std::string parse_response_body(const std::string& body);

private:
  void throttle();

  HttpBackendConfig config_;
  std::string scheme_host_port_;
  std::string path_;
  std::mutex rate_mutex_;
  std::chrono::steady_clock::time_point next_allowed_{};
};

/// Schema-validating front door for every model call.
class LlmGateway {
public:
  using Observer = std::function<void(const PromptRecord&)>;

  explicit LlmGateway(std::shared_ptr<LlmBackend> backend);

  ValidatedOutput complete(const CompletionRequest& request);

  void set_observer(Observer observer) { observer_ = std::move(observer); }
  [[nodiscard]] const LlmBackend& backend() const { return *backend_; }
  [[nodiscard]] std::size_t call_count() const { return calls_.load(); }

private:
  std::shared_ptr<LlmBackend> backend_;
  Observer observer_;
  std::atomic<std::size_t> calls_{0};
};

}  // namespace fincon
