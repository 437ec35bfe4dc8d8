#include "fincon/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "fincon/error.hpp"
#include "fincon/risk_control.hpp"

namespace fincon {

double daily_pnl(double action, double price_now, double price_next) {
  if (!(price_now > 0) || !(price_next > 0)) raise(ErrorCode::NonPositivePrice, "prices must be positive");
  if (action == 0.0) return 0.0;
  return action * std::log(price_next / price_now);
}

double portfolio_pnl(std::span<const double> weights, std::span<const double> prices_now,
                     std::span<const double> prices_next) {
  if (weights.size() != prices_now.size() || weights.size() != prices_next.size())
    raise(ErrorCode::DimensionMismatch, "weights and prices disagree in size");
  double r = 0;
  for (std::size_t i = 0; i < weights.size(); ++i) r += daily_pnl(weights[i], prices_now[i], prices_next[i]);
  return r;
}

double cumulative_return(std::span<const double> pnl) {
  if (pnl.empty()) raise(ErrorCode::EmptyTrajectory, "cumulative return of an empty trajectory");
  return 100.0 * std::accumulate(pnl.begin(), pnl.end(), 0.0);
}

double sharpe_ratio(std::span<const double> pnl, double risk_free_daily, bool annualize) {
  if (pnl.size() < 2) raise(ErrorCode::InsufficientData, "Sharpe ratio needs at least 2 days");
  const double n = static_cast<double>(pnl.size());
  const double mean = std::accumulate(pnl.begin(), pnl.end(), 0.0) / n;
  double ss = 0;
  for (double x : pnl) ss += (x - mean) * (x - mean);
  const double sd = std::sqrt(ss / (n - 1));
  if (!(sd > 1e-15 * std::max(1.0, std::abs(mean)))) raise(ErrorCode::ZeroVolatility, "PnL has zero volatility");
  const double sr = (mean - risk_free_daily) / sd;
  return annualize ? sr * std::sqrt(252.0) : sr;
}

double max_drawdown(std::span<const double> values) {
  if (values.empty()) raise(ErrorCode::EmptySeries, "drawdown of an empty series");
  double peak = 0;
  double worst = 0;
  for (double v : values) {
    if (!(v > 0)) raise(ErrorCode::NonPositiveValue, "value series must be positive");
    peak = std::max(peak, v);
    worst = std::max(worst, (peak - v) / peak);
  }
  return 100.0 * worst;
}

std::vector<double> equity_curve(std::span<const double> pnl, double capital) {
  std::vector<double> out;
  out.reserve(pnl.size() + 1);
  out.push_back(capital);
  double cum = 0;
  for (double r : pnl) {
    cum += r;
    out.push_back(capital * std::exp(cum));
  }
  return out;
}

double objective_value(std::span<const double> pnl, double alpha) {
  if (!(alpha > 0.0 && alpha <= 1.0)) raise(ErrorCode::InvalidArgument, "discount must lie in (0, 1]");
  double sum = 0;
  double factor = 1;
  for (double r : pnl) {
    sum += factor * r;
    factor *= alpha;
  }
  return sum;
}

nlohmann::json MetricsReport::to_json() const {
  nlohmann::json j = {{"days", days},
                      {"cumulative_return_pct", cumulative_return},
                      {"sharpe_ratio", sharpe_ratio ? nlohmann::json(*sharpe_ratio) : nlohmann::json(nullptr)},
                      {"max_drawdown_pct", max_drawdown},
                      {"var", var},
                      {"cvar", cvar},
                      {"cvar_alpha", cvar_alpha},
                      {"final_equity", final_equity}};
  if (sharpe_note) j["sharpe_note"] = *sharpe_note;
  return j;
}

MetricsReport compute_metrics(std::span<const double> pnl, const MetricsOptions& options) {
  MetricsReport m;
  m.days = pnl.size();
  m.cumulative_return = cumulative_return(pnl);
  try {
    m.sharpe_ratio = sharpe_ratio(pnl, options.risk_free_daily, options.annualize_sharpe);
  } catch (const Error& e) {
    m.sharpe_note = std::string(to_string(e.code()));
  }
  const auto equity = equity_curve(pnl, options.capital);
  m.max_drawdown = max_drawdown(equity);
  m.final_equity = equity.back();
  m.cvar_alpha = options.cvar_alpha;
  m.var = value_at_risk(pnl, options.cvar_alpha);
  m.cvar = cvar(pnl, options.cvar_alpha);
  return m;
}

namespace {

// Standard normal upper tail.
double normal_sf(double z) { return 0.5 * std::erfc(z / std::sqrt(2.0)); }

}  // namespace

WilcoxonResult wilcoxon_signed_rank(std::span<const double> a, std::span<const double> b) {
  if (a.size() != b.size()) raise(ErrorCode::LengthMismatch, "paired series differ in length");
  std::vector<double> diffs;
  for (std::size_t i = 0; i < a.size(); ++i)
    if (a[i] - b[i] != 0.0) diffs.push_back(a[i] - b[i]);
  const std::size_t n = diffs.size();
  if (n < 6) raise(ErrorCode::TooFewPairs, std::to_string(n) + " nonzero differences, need at least 6");

  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(), [&](auto x, auto y) { return std::abs(diffs[x]) < std::abs(diffs[y]); });
  // Doubled midranks keep the exact distribution on integers.
  std::vector<long> rank2(n);
  double tie_term = 0;
  for (std::size_t i = 0; i < n;) {
    std::size_t j = i;
    while (j + 1 < n && std::abs(diffs[order[j + 1]]) == std::abs(diffs[order[i]])) ++j;
    const long doubled = static_cast<long>(i + j + 2);  // 2 * mean of ranks i+1..j+1
    for (std::size_t k = i; k <= j; ++k) rank2[order[k]] = doubled;
    const double t = static_cast<double>(j - i + 1);
    tie_term += t * t * t - t;
    i = j + 1;
  }

  WilcoxonResult r;
  r.n = n;
  long plus2 = 0;
  long total2 = 0;
  for (std::size_t i = 0; i < n; ++i) {
    total2 += rank2[i];
    if (diffs[i] > 0) plus2 += rank2[i];
  }
  r.w_plus = plus2 / 2.0;
  r.w_minus = (total2 - plus2) / 2.0;
  r.statistic = std::min(r.w_plus, r.w_minus);
  r.signed_rank_sum = r.w_plus - r.w_minus;

  if (n <= kWilcoxonExactLimit) {
    r.exact = true;
    // counts[s] = number of sign assignments with doubled positive-rank sum s.
    std::vector<double> counts(static_cast<std::size_t>(total2) + 1, 0.0);
    counts[0] = 1;
    long reach = 0;
    for (std::size_t i = 0; i < n; ++i) {
      for (long s = reach; s >= 0; --s)
        if (counts[static_cast<std::size_t>(s)] != 0) counts[static_cast<std::size_t>(s + rank2[i])] += counts[static_cast<std::size_t>(s)];
      reach += rank2[i];
    }
    const long low2 = std::min(plus2, total2 - plus2);
    double tail = 0;
    for (long s = 0; s <= low2; ++s) tail += counts[static_cast<std::size_t>(s)];
    r.p_value = std::min(1.0, 2.0 * tail / std::ldexp(1.0, static_cast<int>(n)));
  } else {
    const double dn = static_cast<double>(n);
    const double mean = dn * (dn + 1) / 4.0;
    const double var = dn * (dn + 1) * (2 * dn + 1) / 24.0 - tie_term / 48.0;
    if (var <= 0) {
      r.p_value = 1.0;
    } else {
      const double z = (r.w_plus - mean) / std::sqrt(var);
      r.p_value = std::min(1.0, 2.0 * normal_sf(std::abs(z)));
    }
  }
  return r;
}

}  // namespace fincon
