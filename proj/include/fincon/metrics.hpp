#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

namespace fincon {

/// action * ln(p_next / p_now); action in {+1, 0, -1} or any real weight.
double daily_pnl(double action, double price_now, double price_next);
/// sum_n w_n * ln(p_next_n / p_now_n)
double portfolio_pnl(std::span<const double> weights, std::span<const double> prices_now,
                     std::span<const double> prices_next);

/// 100 * sum r_t.
double cumulative_return(std::span<const double> pnl);
/// (mean(r) - rf) / sample std(r), optionally scaled by sqrt(252).
double sharpe_ratio(std::span<const double> pnl, double risk_free_daily = 0.0, bool annualize = false);
/// 100 * max (peak - value) / peak.
double max_drawdown(std::span<const double> values);
/// capital * exp(cumsum r), starting with the capital itself.
std::vector<double> equity_curve(std::span<const double> pnl, double capital);
/// sum alpha^t r_t, t from 0.
double objective_value(std::span<const double> pnl, double alpha);

struct MetricsOptions {
  double capital = 10000.0;
  double risk_free_daily = 0.0;
  bool annualize_sharpe = false;
  double cvar_alpha = 0.01;
};

struct MetricsReport {
  std::size_t days = 0;
  double cumulative_return = 0;       // percent
  std::optional<double> sharpe_ratio;  // absent when undefined
  std::optional<std::string> sharpe_note;
  double max_drawdown = 0;  // percent
  double var = 0;
  double cvar = 0;
  double cvar_alpha = 0.01;
  double final_equity = 0;

  [[nodiscard]] nlohmann::json to_json() const;
};

MetricsReport compute_metrics(std::span<const double> pnl, const MetricsOptions& options = {});

struct WilcoxonResult {
  std::size_t n = 0;  // pairs with nonzero difference
  double w_plus = 0;
  double w_minus = 0;
  double statistic = 0;        // min(w_plus, w_minus)
  double signed_rank_sum = 0;  // w_plus - w_minus
  double p_value = 1;          // two-sided
  bool exact = false;
};

inline constexpr std::size_t kWilcoxonExactLimit = 25;

/// Paired two-sided signed-rank test on a - b. Zero differences are dropped;
/// tied magnitudes get midranks.
WilcoxonResult wilcoxon_signed_rank(std::span<const double> a, std::span<const double> b);

}  // namespace fincon
