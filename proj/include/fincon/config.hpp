#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "fincon/agents.hpp"
#include "fincon/data_ingest.hpp"
#include "fincon/date.hpp"
#include "fincon/memory.hpp"

namespace fincon {

struct DateRange {
  Date start;
  Date end;
};

struct RunConfig {
  TaskMode task = TaskMode::SingleStock;
  std::vector<std::string> universe;

  std::map<std::string, std::filesystem::path> price_files;
  std::vector<std::filesystem::path> document_files;
  int momentum_window = 20;
  PriceField price_field = PriceField::Close;

  std::optional<DateRange> train;
  std::optional<DateRange> test;

  std::size_t top_k = kDefaultTopK;
  std::size_t embedding_dim = 64;
  double default_importance = kDefaultInitialImportance;
  DecayTable decay;

  double trading_temperature = 0.3;
  double belief_temperature = 0.0;
  int max_retries = 2;
  int timeout_ms = 30000;
  int min_request_interval_ms = 0;
  std::optional<std::string> endpoint;
  std::optional<std::string> model;

  std::vector<AgentRole> analysts;
  bool data_analyst_uses_llm = false;
  double feedback_sigma_multiple = 2.0;
  std::size_t feedback_window = 20;
  std::size_t feedback_min_history = 2;
  double position_size = 1.0;
  std::map<std::string, std::filesystem::path> profile_files;
  std::map<std::string, std::filesystem::path> prompt_files;
  std::string general_config;
  bool parallel_analysts = false;

  double cvar_alpha = 0.01;
  std::size_t risk_min_history = 10;
  std::size_t min_run_length = 2;
  double convergence_overlap = 0.8;
  double convergence_epsilon = 1e-4;
  int max_episodes = 4;

  double shrinkage_lambda = 0.3;
  std::size_t lookback = 60;
  double capital = 10000.0;
  bool integer_shares = false;
  std::size_t min_news = 800;
  std::size_t select_count = 3;
  std::size_t max_iterations = 10000;
  double solver_tolerance = 1e-10;

  double discount = 1.0;
  double risk_free_daily = 0.0;
  bool annualize_sharpe = false;
  bool resume = false;
  int replications = 1;
  std::uint64_t seed = 0;
  std::optional<std::filesystem::path> training_run_dir;

  /// Defaults merged with the file and overrides; relative paths unresolved.
  nlohmann::json merged;
};

/// Every tunable with its default value.
nlohmann::json default_config_json();

/// Applies `a.b.c=value`. The value is parsed as JSON when possible and kept
/// as a string otherwise.
void apply_override(nlohmann::json& config, const std::string& assignment);

/// Builds a RunConfig from merged JSON. Relative paths resolve against `base_dir`.
RunConfig parse_config(const nlohmann::json& merged, const std::filesystem::path& base_dir);

RunConfig load_config(const std::filesystem::path& path, std::span<const std::string> overrides = {});

}  // namespace fincon
