#include <doctest.h>

#include <chrono>
#include <thread>

#include <arpa/inet.h>
#include <netinet/in.h>
#include <sys/socket.h>
#include <unistd.h>

#include <httplib.h>

#include "fincon/llm_gateway.hpp"
#include "fincon/schema.hpp"
#include "support.hpp"

using namespace fincon;
using nlohmann::json;

namespace {

CompletionRequest manager_request(std::string step = "1:2024-01-03:decide") {
  CompletionRequest r;
  r.role_tag = "manager";
  r.step_key = std::move(step);
  r.system_prompt = "sys";
  r.user_prompt = "decide";
  r.output_schema = std::string(schema_id::kTradingDecision);
  return r;
}

// Answers from a fixed list, one entry per attempt.
class SequenceBackend final : public LlmBackend {
public:
  explicit SequenceBackend(std::vector<std::string> answers) : answers_(std::move(answers)) {}
  std::string generate(const CompletionRequest&, const std::string& user_prompt) override {
    prompts.push_back(user_prompt);
    return answers_.at(std::min(prompts.size() - 1, answers_.size() - 1));
  }
  std::vector<std::string> prompts;

private:
  std::vector<std::string> answers_;
};

class LocalServer {
public:
  LocalServer() {
    port_ = server_.bind_to_any_port("127.0.0.1");
    thread_ = std::thread([this] { server_.listen_after_bind(); });
    server_.wait_until_ready();
  }
  ~LocalServer() {
    server_.stop();
    thread_.join();
  }
  httplib::Server& server() { return server_; }
  std::string url(const std::string& path) const { return "http://127.0.0.1:" + std::to_string(port_) + path; }

private:
  httplib::Server server_;
  int port_ = 0;
  std::thread thread_;
};

}  // namespace

TEST_CASE("schema validation") {
  const auto& s = find_schema(schema_id::kTradingDecision);
  CHECK_FALSE(validate(s, json{{"action", "long"}}));
  CHECK(validate(s, json{{"action", "buy"}}));
  CHECK(validate(s, json::object()));
  CHECK(validate(s, json{{"action", "long"}, {"cited_memory_ids", {1, 2}}}));

  const auto& insight = find_schema(schema_id::kAnalystInsight);
  CHECK_FALSE(validate(insight, json{{"insight", "x"}, {"importance", 0.4}}));
  CHECK(validate(insight, json{{"insight", "x"}, {"importance", 1.4}}));
  CHECK(validate(insight, json{{"insight", "x"}, {"sentiment", "bullish"}}));

  const auto& beliefs = find_schema(schema_id::kBeliefUpdate);
  CHECK_FALSE(validate(beliefs, json{{"beliefs", {{"historical momentum", "a"}, {"other aspects", {"b", "c"}}}}}));
  CHECK(validate(beliefs, json{{"beliefs", {{"gut feeling", "a"}}}}));

  const auto& pf = find_schema(schema_id::kPortfolioDecision);
  CHECK_FALSE(validate(pf, json{{"actions", {{"A", "long"}, {"B", "short"}}}}));
  CHECK(validate(pf, json{{"actions", {{"A", "sell"}}}}));
  CHECK_CODE(find_schema("nope"), ErrorCode::ConfigError);
}

TEST_CASE("extract_json_object tolerates fences and prose") {
  CHECK(extract_json_object(R"({"a":1})")->at("a") == 1);
  CHECK(extract_json_object("```json\n{\"a\": 2}\n```")->at("a") == 2);
  CHECK(extract_json_object("Sure! {\"a\": 3} hope this helps")->at("a") == 3);
  CHECK_FALSE(extract_json_object("no json here"));
  CHECK_FALSE(extract_json_object("[1,2]"));
}

TEST_CASE("mock backend answers by exact key") {
  auto mock = MockBackend::parse(
      R"({"role_tag":"manager","step_key":"1:2024-01-03:decide","response":"{\"action\":\"long\"}"})"
      "\n");
  LlmGateway gw(mock);
  auto out = gw.complete(manager_request());
  CHECK(out.fields.at("action") == "long");
  CHECK(out.attempts == 1);
  CHECK(out.schema_id == "trading_decision");
  CHECK_CODE(gw.complete(manager_request("1:2024-01-04:decide")), ErrorCode::MissingScriptEntry);
  CHECK(mock->call_count() == 2);
}

TEST_CASE("mock script parsing") {
  std::string four;
  for (int i = 0; i < 4; ++i)
    four += R"({"role_tag":"r","step_key":"k)" + std::to_string(i) + R"(","response":"{}"})" + "\n";
  CHECK(MockBackend::parse(four)->size() == 4);
  CHECK_CODE(MockBackend::parse(four + R"({"role_tag":"r","step_key":"k1","response":"x"})"), ErrorCode::SchemaError);
  CHECK_CODE(MockBackend::parse(R"({"role_tag":"r","response":"x"})"), ErrorCode::SchemaError);
  CHECK_CODE(MockBackend::load("/nonexistent/script.jsonl"), ErrorCode::FileNotFound);
}

TEST_CASE("invalid output is retried with a corrective suffix") {
  SUBCASE("script never fixes itself") {
    auto mock = std::make_shared<MockBackend>();
    mock->add("manager", "1:2024-01-03:decide", R"({"action":"buy"})");
    LlmGateway gw(mock);
    auto req = manager_request();
    req.max_retries = 1;
    CHECK_CODE(gw.complete(req), ErrorCode::SchemaViolationAfterRetries);
    const auto calls = mock->calls();
    REQUIRE(calls.size() == 2);
    CHECK(calls[0].user_prompt == "decide");
    CHECK(calls[1].user_prompt.find("rejected") != std::string::npos);
    CHECK(calls[1].user_prompt.find("action") != std::string::npos);
  }
  SUBCASE("second attempt succeeds") {
    auto backend = std::make_shared<SequenceBackend>(std::vector<std::string>{"not json", R"({"action":"short"})"});
    LlmGateway gw(backend);
    auto out = gw.complete(manager_request());
    CHECK(out.fields.at("action") == "short");
    CHECK(out.attempts == 2);
    CHECK(gw.call_count() == 2);
  }
  SUBCASE("extra check counts as a violation") {
    auto backend = std::make_shared<SequenceBackend>(std::vector<std::string>{R"({"action":"long"})"});
    LlmGateway gw(backend);
    auto req = manager_request();
    req.extra_check = [](const json&) -> std::optional<std::string> { return "always wrong"; };
    CHECK_CODE(gw.complete(req), ErrorCode::SchemaViolationAfterRetries);
    CHECK(backend->prompts.size() == 3);
    CHECK(backend->prompts[2].find("always wrong") != std::string::npos);
  }
}

TEST_CASE("gateway rejects bad request parameters") {
  LlmGateway gw(std::make_shared<MockBackend>());
  auto req = manager_request();
  req.temperature = 2.5;
  CHECK_CODE(gw.complete(req), ErrorCode::InvalidArgument);
  req.temperature = 0.3;
  req.output_schema = "unknown";
  CHECK_CODE(gw.complete(req), ErrorCode::ConfigError);
  CHECK_CODE(LlmGateway(nullptr), ErrorCode::ConfigError);
}

TEST_CASE("observer sees every attempt") {
  auto mock = std::make_shared<MockBackend>();
  mock->add("manager", "1:2024-01-03:decide", R"({"action":"neutral"})");
  LlmGateway gw(mock);
  std::vector<PromptRecord> seen;
  gw.set_observer([&](const PromptRecord& r) { seen.push_back(r); });
  gw.complete(manager_request());
  REQUIRE(seen.size() == 1);
  CHECK(seen[0].response == R"({"action":"neutral"})");
  CHECK(seen[0].temperature == doctest::Approx(kTradingTemperature));
}

TEST_CASE("http request and response bodies") {
  HttpBackendConfig cfg;
  cfg.endpoint = "https://example.invalid/v1/chat/completions";
  cfg.model = "m";
  auto req = manager_request();
  req.temperature = 0.0;
  req.seed = 42;
  auto body = HttpBackend::build_request_body(cfg, req, "user text");
  CHECK(body.at("model") == "m");
  CHECK(body.at("temperature") == 0.0);
  CHECK(body.at("seed") == 42);
  CHECK(body.at("messages").size() == 2);
  CHECK(body.at("messages")[1].at("content") == "user text");
  CHECK(HttpBackend::parse_response_body(R"({"choices":[{"message":{"content":"hi"}}]})") == "hi");
  CHECK_CODE(HttpBackend::parse_response_body("{}"), ErrorCode::BackendUnavailable);
  CHECK_CODE(HttpBackend::parse_response_body("<html>"), ErrorCode::BackendUnavailable);
  cfg.endpoint = "ftp://x";
  CHECK_CODE(HttpBackend{cfg}, ErrorCode::ConfigError);
}

TEST_CASE("http backend against a local server") {
  LocalServer local;
  std::string last_auth;
  local.server().Post("/ok", [&](const httplib::Request& req, httplib::Response& res) {
    last_auth = req.get_header_value("Authorization");
    auto in = json::parse(req.body);
    json out = {{"choices", json::array({{{"message", {{"content", R"({"action":"long"})"}}}}})}};
    CHECK(in.at("messages")[0].at("content") == "sys");
    res.set_content(out.dump(), "application/json");
  });
  local.server().Post("/fail", [](const httplib::Request&, httplib::Response& res) { res.status = 503; });
  local.server().Post("/slow", [](const httplib::Request&, httplib::Response& res) {
    std::this_thread::sleep_for(std::chrono::milliseconds(1200));
    res.set_content("{}", "application/json");
  });

  HttpBackendConfig cfg;
  cfg.api_key = "secret";
  cfg.model = "m";
  cfg.timeout = std::chrono::milliseconds(300);

  cfg.endpoint = local.url("/ok");
  LlmGateway ok(std::make_shared<HttpBackend>(cfg));
  CHECK(ok.complete(manager_request()).fields.at("action") == "long");
  CHECK(last_auth == "Bearer secret");

  cfg.endpoint = local.url("/fail");
  LlmGateway failing(std::make_shared<HttpBackend>(cfg));
  CHECK_CODE(failing.complete(manager_request()), ErrorCode::BackendUnavailable);

  cfg.endpoint = local.url("/slow");
  LlmGateway slow(std::make_shared<HttpBackend>(cfg));
  const auto start = std::chrono::steady_clock::now();
  CHECK_CODE(slow.complete(manager_request()), ErrorCode::Timeout);
  CHECK(std::chrono::steady_clock::now() - start < std::chrono::milliseconds(1100));
}

TEST_CASE("unreachable endpoint is reported as unavailable") {
  // Bind then close a socket so nothing is listening on its port.
  int port = 0;
  {
    const int fd = ::socket(AF_INET, SOCK_STREAM, 0);
    REQUIRE(fd >= 0);
    sockaddr_in addr{};
    addr.sin_family = AF_INET;
    addr.sin_addr.s_addr = htonl(INADDR_LOOPBACK);
    REQUIRE(::bind(fd, reinterpret_cast<sockaddr*>(&addr), sizeof addr) == 0);
    socklen_t len = sizeof addr;
    REQUIRE(::getsockname(fd, reinterpret_cast<sockaddr*>(&addr), &len) == 0);
    port = ntohs(addr.sin_port);
    ::close(fd);
  }
  HttpBackendConfig cfg;
  cfg.endpoint = "http://127.0.0.1:" + std::to_string(port) + "/v1/chat/completions";
  cfg.timeout = std::chrono::milliseconds(500);
  LlmGateway gw(std::make_shared<HttpBackend>(cfg));
  const auto code = testing::error_code_of([&] { gw.complete(manager_request()); });
  CHECK(code == ErrorCode::BackendUnavailable);
}

TEST_CASE("step keys") {
  CHECK(make_step_key("3", "2024-01-05", phase::kReflect) == "3:2024-01-05:reflect");
  CHECK(make_step_key("test", "2024-01-05", phase::kDecide) == "test:2024-01-05:decide");
}
