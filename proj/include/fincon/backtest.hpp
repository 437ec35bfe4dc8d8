#pragma once

#include <filesystem>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "fincon/agents.hpp"
#include "fincon/config.hpp"
#include "fincon/data_ingest.hpp"
#include "fincon/llm_gateway.hpp"
#include "fincon/memory.hpp"
#include "fincon/metrics.hpp"
#include "fincon/risk_control.hpp"
#include "fincon/trajectory.hpp"

namespace fincon {

/// Loads every configured price file and document corpus. The first universe
/// ticker defines the trading calendar.
MarketData load_market_data(const RunConfig& config);

struct DataSummary {
  std::size_t tickers = 0;
  std::size_t trading_days = 0;
  std::size_t documents = 0;
  std::size_t unattached_documents = 0;
  std::size_t train_decision_days = 0;
  std::size_t test_decision_days = 0;
};

/// Loads and cross-checks the data against the configured universe and ranges.
DataSummary validate_data(const RunConfig& config);

/// Trading days in [start, end] that have a following trading day.
std::vector<Date> decision_days(const TradingCalendar& calendar, const DateRange& range);

/// Scripted backend when `mock_script` is given; otherwise an HTTP backend
/// from the config, falling back to FINCON_LLM_* variables.
std::shared_ptr<LlmBackend> make_backend(const RunConfig& config, const std::optional<std::filesystem::path>& mock_script);

struct TrainResult {
  PromptSet prompts;
  std::vector<Trajectory> trajectories;
  std::vector<BeliefUpdate> updates;
  std::vector<double> objectives;
  std::vector<double> overlaps;
  std::string stop_reason;
};

struct TestResult {
  Trajectory trajectory;
  MetricsReport metrics;
  std::vector<double> replication_returns;
  std::size_t chosen_replication = 0;
};

/// Drives training episodes with over-episode belief updates and the test
/// pass with within-episode control only. Writes artifacts under `run_dir`.
class Backtester {
public:
  Backtester(RunConfig config, std::shared_ptr<LlmBackend> backend, std::filesystem::path run_dir);
  ~Backtester();

  TrainResult train();
  TestResult test();

  /// One pass over `days`. `tag` names the episode in step keys and files.
  Trajectory run_episode(const std::string& tag, const std::vector<Date>& days, const PromptSet& prompts,
                         std::uint64_t seed);

  [[nodiscard]] const MarketData& data() const { return *data_; }
  [[nodiscard]] MemoryStore& memory() { return *store_; }
  [[nodiscard]] const Router& router() const { return router_; }
  [[nodiscard]] std::size_t belief_update_calls() const;
  [[nodiscard]] std::size_t gateway_calls() const { return gateway_.call_count(); }
  /// Prompts sent during the most recent episode, ordered by step key.
  [[nodiscard]] std::vector<PromptRecord> prompt_log() const;
  [[nodiscard]] PromptSet initial_prompts() const;

private:
  void write_config_used() const;
  void write_prompt_log(const std::string& tag);
  void write_final_prompts(const PromptSet& prompts) const;
  std::vector<AgentProfile> analyst_profiles() const;
  AgentProfile manager_profile() const;

  RunConfig config_;
  std::filesystem::path run_dir_;
  std::unique_ptr<MarketData> data_;
  std::unique_ptr<HashEmbedder> embedder_;
  std::unique_ptr<MemoryStore> store_;
  LlmGateway gateway_;
  Router router_;
  std::unique_ptr<CvrfEngine> cvrf_;
  mutable std::mutex log_mutex_;
  std::vector<PromptRecord> log_;
};

/// Recomputes report.json and metrics.csv from the run directory's
/// trajectory: the test trajectory when present, otherwise the highest
/// training episode.
MetricsReport write_report(const std::filesystem::path& run_dir);

struct SelectionResult {
  std::vector<std::string> selected;
  std::map<std::string, std::size_t> news_counts;
};

/// Picks the portfolio pool from every ticker with a configured price file and
/// writes selection.json.
SelectionResult run_selection(const RunConfig& config, const std::filesystem::path& run_dir);

}  // namespace fincon
