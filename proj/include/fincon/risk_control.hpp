#pragma once

#include <cstddef>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "fincon/agents.hpp"
#include "fincon/llm_gateway.hpp"
#include "fincon/trajectory.hpp"

namespace fincon {

inline constexpr double kDefaultCvarAlpha = 0.01;
inline constexpr std::size_t kDefaultMinRiskHistory = 10;
inline constexpr std::size_t kDefaultMinRunLength = 2;
inline constexpr double kConvergenceOverlap = 0.8;

/// Lower empirical quantile: the smallest sorted value whose cumulative
/// probability k/n reaches alpha.
double value_at_risk(std::span<const double> pnl, double alpha);
/// Mean of every value <= VaR.
double cvar(std::span<const double> pnl, double alpha);

struct RiskState {
  Date date;
  std::optional<double> cvar;
  std::optional<double> prev_cvar;
  bool alert = false;
  std::size_t history_len = 0;
  std::optional<ReflectionTrigger> trigger;
};

/// rho_t < rho_{t-1} or r_t < 0.
bool trigger_rule(double cvar_t, double cvar_prev, double pnl_t) noexcept;

/// Applies the trigger to a state whose cvar fields are already updated for
/// day t. The CVaR branch only arms once history_len >= min_history.
RiskState within_episode_check(const RiskState& state, double pnl_t,
                               std::size_t min_history = kDefaultMinRiskHistory);

/// Accumulates one episode's PnL and produces the daily risk state.
class WithinEpisodeMonitor {
public:
  explicit WithinEpisodeMonitor(double alpha = kDefaultCvarAlpha,
                                std::size_t min_history = kDefaultMinRiskHistory);

  RiskState push(Date date, double pnl);
  [[nodiscard]] const std::vector<double>& history() const { return history_; }
  [[nodiscard]] const std::optional<RiskState>& last() const { return last_; }

private:
  double alpha_;
  std::size_t min_history_;
  std::vector<double> history_;
  std::optional<RiskState> last_;
};

double overlap_percentage(std::span<const Direction> a, std::span<const Direction> b);

/// Maximal stretches of strictly positive or strictly negative PnL.
struct PnlRun {
  std::size_t begin = 0;
  std::size_t end = 0;  // exclusive
  int sign = 0;
};
std::vector<PnlRun> find_sustained_runs(std::span<const double> pnl, std::size_t min_length = kDefaultMinRunLength);

struct ConceptInsight {
  std::string aspect;
  BeliefValue text;
};

/// Edit-aggressiveness instruction for the belief rewrite.
std::string_view learning_rate_instruction(double tau) noexcept;

struct BeliefUpdate {
  std::string prev_episode;
  std::string cur_episode;
  std::string winner;
  double prev_objective = 0;
  double cur_objective = 0;
  std::vector<ConceptInsight> prev_insights;
  std::vector<ConceptInsight> cur_insights;
  std::string meta_prompt;
  double learning_rate = 0;
  std::vector<std::string> target_agents;
  std::map<std::string, BeliefValue> beliefs;

  [[nodiscard]] nlohmann::json to_json() const;
  static BeliefUpdate from_json(const nlohmann::json& j);
};

struct CvrfOptions {
  std::vector<AgentRole> analysts;
  std::size_t min_run_length = kDefaultMinRunLength;
  double belief_temperature = kBeliefTemperature;
  int max_retries = kDefaultMaxRetries;
  std::optional<std::uint64_t> seed;
};

/// Over-episode conceptual reinforcement. Conceptualizations are cached per
/// episode tag so each trajectory is summarized once.
class CvrfEngine {
public:
  CvrfEngine(LlmGateway& gateway, CvrfOptions options);

  std::vector<ConceptInsight> conceptualize(const Trajectory& trajectory);

  /// Compares two complete episodes and rewrites the belief block. When a
  /// router is given, the update travels risk_control -> manager -> targets.
  std::pair<BeliefUpdate, PromptSet> compare_and_update(const Trajectory& prev, const Trajectory& cur,
                                                        std::pair<double, double> objectives,
                                                        const PromptSet& prompts, Router* router = nullptr);

  [[nodiscard]] std::size_t update_calls() const { return update_calls_; }
  /// Last user prompt sent for conceptualization, for inspection.
  [[nodiscard]] const std::optional<std::string>& last_concept_prompt() const { return last_concept_prompt_; }

private:
  LlmGateway& gateway_;
  CvrfOptions options_;
  std::map<std::string, std::vector<ConceptInsight>> cache_;
  std::size_t update_calls_ = 0;
  std::optional<std::string> last_concept_prompt_;
};

struct ConvergenceRule {
  double overlap = kConvergenceOverlap;
  double epsilon = 1e-4;
  int max_episodes = 4;
};

/// `episodes` counts completed episodes; the histories hold one entry per
/// belief update and per episode respectively.
bool convergence_check(std::span<const double> tau_history, std::span<const double> objective_history,
                       int episodes, const ConvergenceRule& rule = {});

}  // namespace fincon
