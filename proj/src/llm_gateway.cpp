#include "fincon/llm_gateway.hpp"

#include <cstdlib>
#include <fstream>
#include <sstream>

#include "fincon/error.hpp"
#include "fincon/schema.hpp"

namespace fincon {

using nlohmann::json;

std::string make_step_key(const std::string& episode, const std::string& date_iso, const char* phase) {
  return episode + ":" + date_iso + ":" + phase;
}

std::shared_ptr<MockBackend> MockBackend::parse(std::string_view jsonl) {
  auto mock = std::make_shared<MockBackend>();
  std::size_t row = 0, start = 0;
  while (start < jsonl.size()) {
    auto end = jsonl.find('\n', start);
    if (end == std::string_view::npos) end = jsonl.size();
    auto line = jsonl.substr(start, end - start);
    start = end + 1;
    while (!line.empty() && (line.back() == '\r' || line.back() == ' ')) line.remove_suffix(1);
    if (line.empty()) continue;
    ++row;
    auto j = json::parse(line, nullptr, false);
    if (j.is_discarded() || !j.is_object()) throw SchemaError(row, "<line>", "not a JSON object");
    for (const char* key : {"role_tag", "step_key", "response"}) {
      if (!j.contains(key) || !j[key].is_string()) throw SchemaError(row, key, "missing or not a string");
    }
    auto role = j["role_tag"].get<std::string>();
    auto step = j["step_key"].get<std::string>();
    if (mock->script_.count({role, step}))
      throw SchemaError(row, "step_key", "duplicate entry for (" + role + ", " + step + ")");
    mock->add(std::move(role), std::move(step), j["response"].get<std::string>());
  }
  return mock;
}

std::shared_ptr<MockBackend> MockBackend::load(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) raise(ErrorCode::FileNotFound, path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse(ss.str());
}

void MockBackend::add(std::string role_tag, std::string step_key, std::string response) {
  std::lock_guard lock(mutex_);
  script_[{std::move(role_tag), std::move(step_key)}] = std::move(response);
}

std::string MockBackend::generate(const CompletionRequest& request, const std::string& user_prompt) {
  std::lock_guard lock(mutex_);
  auto it = script_.find({request.role_tag, request.step_key});
  PromptRecord rec{request.role_tag, request.step_key, 0, request.temperature, request.system_prompt,
                   user_prompt, {}};
  if (it == script_.end()) {
    calls_.push_back(std::move(rec));
    raise(ErrorCode::MissingScriptEntry, "no scripted response for (" + request.role_tag + ", " +
                                             request.step_key + ")");
  }
  rec.response = it->second;
  calls_.push_back(std::move(rec));
  return it->second;
}

std::vector<PromptRecord> MockBackend::calls() const {
  std::lock_guard lock(mutex_);
  return calls_;
}

std::size_t MockBackend::call_count() const {
  std::lock_guard lock(mutex_);
  return calls_.size();
}

std::optional<HttpBackendConfig> HttpBackendConfig::from_env() {
  const char* endpoint = std::getenv("FINCON_LLM_ENDPOINT");
  if (!endpoint || !*endpoint) return std::nullopt;
  HttpBackendConfig c;
  c.endpoint = endpoint;
  if (const char* key = std::getenv("FINCON_LLM_API_KEY")) c.api_key = key;
  if (const char* model = std::getenv("FINCON_LLM_MODEL")) c.model = model;
  return c;
}

LlmGateway::LlmGateway(std::shared_ptr<LlmBackend> backend) : backend_(std::move(backend)) {
  if (!backend_) raise(ErrorCode::ConfigError, "no LLM backend configured");
}

ValidatedOutput LlmGateway::complete(const CompletionRequest& request) {
  if (!(request.temperature >= 0.0 && request.temperature <= 2.0))
    raise(ErrorCode::InvalidArgument, "temperature must lie in [0, 2]");
  if (request.max_retries < 0) raise(ErrorCode::InvalidArgument, "max_retries must be >= 0");
  const auto& schema = find_schema(request.output_schema);

  std::string user_prompt = request.user_prompt;
  std::string last_error;
  for (int attempt = 0; attempt <= request.max_retries; ++attempt) {
    ++calls_;
    std::string raw = backend_->generate(request, user_prompt);
    if (observer_) {
      observer_(PromptRecord{request.role_tag, request.step_key, attempt, request.temperature,
                             request.system_prompt, user_prompt, raw});
    }
    auto parsed = extract_json_object(raw);
    if (!parsed) {
      last_error = "response is not a JSON object";
    } else if (auto err = validate(schema, *parsed)) {
      last_error = *err;
    } else if (auto extra = request.extra_check ? request.extra_check(*parsed) : std::nullopt) {
      last_error = *extra;
    } else {
      return ValidatedOutput{schema.id, std::move(*parsed), std::move(raw), attempt + 1};
    }
    user_prompt = request.user_prompt + "\n\nYour previous response was rejected: " + last_error +
                  ". Reply again with only a JSON object that satisfies the required fields.";
  }
  raise(ErrorCode::SchemaViolationAfterRetries,
        "(" + request.role_tag + ", " + request.step_key + ") after " +
            std::to_string(request.max_retries + 1) + " attempts: " + last_error);
}

}  // namespace fincon
