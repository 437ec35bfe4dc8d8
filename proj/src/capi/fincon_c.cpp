#include "fincon/fincon.h"

#include <exception>
#include <new>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "fincon/backtest.hpp"
#include "fincon/config.hpp"
#include "fincon/error.hpp"
#include "fincon/metrics.hpp"
#include "fincon/portfolio.hpp"
#include "fincon/risk_control.hpp"

struct fincon_engine {
  std::string config_path;
  std::vector<std::string> overrides;
  std::optional<std::string> mock_script;
  std::optional<std::uint64_t> seed;
  std::string run_dir = "fincon_run";
};

namespace {

thread_local std::string g_message;
thread_local std::string g_code;

fincon_status status_for(fincon::ErrorCode code) {
  using fincon::ErrorCode;
  switch (code) {
    case ErrorCode::ConfigError: return FINCON_ERR_CONFIG;
    case ErrorCode::FileNotFound: return FINCON_ERR_NOT_FOUND;
    case ErrorCode::SchemaError:
    case ErrorCode::NonMonotoneDates:
    case ErrorCode::NonPositivePrice:
    case ErrorCode::InsufficientHistory:
    case ErrorCode::DateOutOfRange:
    case ErrorCode::InsufficientData:
    case ErrorCode::InsufficientCandidates: return FINCON_ERR_DATA;
    case ErrorCode::MissingTrainingArtifacts:
    case ErrorCode::MissingTrajectory: return FINCON_ERR_MISSING_ARTIFACTS;
    case ErrorCode::InvalidArgument:
    case ErrorCode::AlphaOutOfRange:
    case ErrorCode::LengthMismatch:
    case ErrorCode::DimensionMismatch:
    case ErrorCode::EmptyHistory:
    case ErrorCode::EmptySequence:
    case ErrorCode::EmptySeries:
    case ErrorCode::EmptyTrajectory:
    case ErrorCode::TooFewPairs: return FINCON_ERR_INVALID_ARGUMENT;
    case ErrorCode::BackendUnavailable:
    case ErrorCode::SchemaViolationAfterRetries:
    case ErrorCode::Timeout:
    case ErrorCode::MissingScriptEntry: return FINCON_ERR_GATEWAY;
    case ErrorCode::NonPSDMatrix:
    case ErrorCode::SolverNonConvergence:
    case ErrorCode::ZeroVolatility:
    case ErrorCode::NonPositiveValue:
    case ErrorCode::InsufficientSamples: return FINCON_ERR_NUMERIC;
    default: return FINCON_ERR_INTERNAL;
  }
}

template <typename F>
fincon_status guarded(F&& body) {
  try {
    body();
    g_message.clear();
    g_code.clear();
    return FINCON_OK;
  } catch (const fincon::Error& e) {
    g_message = e.what();
    g_code = std::string(fincon::to_string(e.code()));
    return status_for(e.code());
  } catch (const std::bad_alloc&) {
    g_message = "out of memory";
    g_code = "OutOfMemory";
  } catch (const std::exception& e) {
    g_message = e.what();
    g_code = "Internal";
  } catch (...) {
    g_message = "unknown failure";
    g_code = "Internal";
  }
  return FINCON_ERR_INTERNAL;
}

fincon_status null_argument(const char* what) {
  g_message = std::string("null argument: ") + what;
  g_code = "InvalidArgument";
  return FINCON_ERR_INVALID_ARGUMENT;
}

fincon::RunConfig load(const fincon_engine& e) {
  auto config = fincon::load_config(e.config_path, e.overrides);
  if (e.seed) {
    config.seed = *e.seed;
    config.merged["backtest"]["seed"] = *e.seed;
  }
  return config;
}

fincon::Backtester make_backtester(const fincon_engine& e) {
  auto config = load(e);
  std::optional<std::filesystem::path> mock;
  if (e.mock_script) mock = *e.mock_script;
  auto backend = fincon::make_backend(config, mock);
  return fincon::Backtester(std::move(config), std::move(backend), e.run_dir);
}

void fill(fincon_metrics* out, const fincon::MetricsReport& m, std::size_t belief_calls) {
  if (!out) return;
  out->days = m.days;
  out->cumulative_return_pct = m.cumulative_return;
  out->sharpe_defined = m.sharpe_ratio ? 1 : 0;
  out->sharpe_ratio = m.sharpe_ratio.value_or(0.0);
  out->max_drawdown_pct = m.max_drawdown;
  out->var = m.var;
  out->cvar = m.cvar;
  out->belief_update_calls = belief_calls;
}

std::vector<fincon::Direction> directions(const int* d, std::size_t n) {
  std::vector<fincon::Direction> out;
  for (std::size_t i = 0; i < n; ++i) {
    if (d[i] == FINCON_LONG) out.push_back(fincon::Direction::Long);
    else if (d[i] == FINCON_SHORT) out.push_back(fincon::Direction::Short);
    else if (d[i] == FINCON_NEUTRAL) out.push_back(fincon::Direction::Neutral);
    else fincon::raise(fincon::ErrorCode::InvalidArgument, "direction must be -1, 0 or 1");
  }
  return out;
}

}  // namespace

extern "C" {

const char* fincon_last_error(void) { return g_message.c_str(); }
const char* fincon_last_error_code(void) { return g_code.c_str(); }
const char* fincon_version(void) { return "0.1.0"; }

fincon_status fincon_engine_create(const char* config_path, fincon_engine** out) {
  if (!config_path) return null_argument("config_path");
  if (!out) return null_argument("out");
  *out = nullptr;
  return guarded([&] {
    fincon::load_config(config_path);
    auto* e = new fincon_engine;
    e->config_path = config_path;
    *out = e;
  });
}

void fincon_engine_destroy(fincon_engine* engine) { delete engine; }

fincon_status fincon_engine_add_override(fincon_engine* engine, const char* assignment) {
  if (!engine) return null_argument("engine");
  if (!assignment) return null_argument("assignment");
  return guarded([&] {
    std::vector<std::string> all = engine->overrides;
    all.emplace_back(assignment);
    fincon::load_config(engine->config_path, all);
    engine->overrides = std::move(all);
  });
}

fincon_status fincon_engine_set_mock_script(fincon_engine* engine, const char* path) {
  if (!engine) return null_argument("engine");
  if (!path) return null_argument("path");
  engine->mock_script = path;
  return FINCON_OK;
}

fincon_status fincon_engine_set_seed(fincon_engine* engine, uint64_t seed) {
  if (!engine) return null_argument("engine");
  engine->seed = seed;
  return FINCON_OK;
}

fincon_status fincon_engine_set_run_dir(fincon_engine* engine, const char* run_dir) {
  if (!engine) return null_argument("engine");
  if (!run_dir || !*run_dir) return null_argument("run_dir");
  engine->run_dir = run_dir;
  return FINCON_OK;
}

fincon_status fincon_validate_data(fincon_engine* engine) {
  if (!engine) return null_argument("engine");
  return guarded([&] { fincon::validate_data(load(*engine)); });
}

fincon_status fincon_train(fincon_engine* engine, fincon_train_summary* out) {
  if (!engine) return null_argument("engine");
  return guarded([&] {
    auto bt = make_backtester(*engine);
    auto res = bt.train();
    if (out) {
      out->episodes = res.trajectories.size();
      out->belief_updates = res.updates.size();
      out->last_objective = res.objectives.empty() ? 0.0 : res.objectives.back();
      out->last_overlap = res.overlaps.empty() ? 0.0 : res.overlaps.back();
      out->converged = res.stop_reason == "converged" ? 1 : 0;
    }
  });
}

fincon_status fincon_test(fincon_engine* engine, fincon_metrics* out) {
  if (!engine) return null_argument("engine");
  return guarded([&] {
    auto bt = make_backtester(*engine);
    auto res = bt.test();
    fill(out, res.metrics, bt.belief_update_calls());
  });
}

fincon_status fincon_select_stocks(fincon_engine* engine) {
  if (!engine) return null_argument("engine");
  return guarded([&] { fincon::run_selection(load(*engine), engine->run_dir); });
}

fincon_status fincon_report(const char* run_dir, fincon_metrics* out) {
  if (!run_dir) return null_argument("run_dir");
  return guarded([&] { fill(out, fincon::write_report(run_dir), 0); });
}

fincon_status fincon_cvar(const double* pnl, size_t n, double alpha, double* var_out, double* cvar_out) {
  if (!pnl && n > 0) return null_argument("pnl");
  return guarded([&] {
    std::span<const double> s(pnl, n);
    const double v = fincon::value_at_risk(s, alpha);
    const double c = fincon::cvar(s, alpha);
    if (var_out) *var_out = v;
    if (cvar_out) *cvar_out = c;
  });
}

fincon_status fincon_overlap_percentage(const int* a, const int* b, size_t n, double* out) {
  if ((!a || !b) && n > 0) return null_argument("a/b");
  if (!out) return null_argument("out");
  return guarded([&] { *out = fincon::overlap_percentage(directions(a, n), directions(b, n)); });
}

fincon_status fincon_solve_mean_variance(const double* mu, const double* sigma, const int* dirs, size_t n,
                                         double* weights_out, double* objective_out) {
  if (n > 0 && (!mu || !sigma || !dirs || !weights_out)) return null_argument("mu/sigma/directions/weights_out");
  return guarded([&] {
    fincon::MVInputs in;
    in.mu.assign(mu, mu + n);
    in.sigma = fincon::Matrix(n, n);
    in.sigma.data.assign(sigma, sigma + n * n);
    in.directions = directions(dirs, n);
    auto sol = fincon::solve_mean_variance(in);
    for (std::size_t i = 0; i < n; ++i) weights_out[i] = sol.weights[i];
    if (objective_out) *objective_out = sol.objective;
  });
}

fincon_status fincon_cumulative_return(const double* pnl, size_t n, double* out) {
  if (!out) return null_argument("out");
  if (!pnl && n > 0) return null_argument("pnl");
  return guarded([&] { *out = fincon::cumulative_return(std::span<const double>(pnl, n)); });
}

fincon_status fincon_sharpe_ratio(const double* pnl, size_t n, double risk_free_daily, double* out) {
  if (!out) return null_argument("out");
  if (!pnl && n > 0) return null_argument("pnl");
  return guarded([&] { *out = fincon::sharpe_ratio(std::span<const double>(pnl, n), risk_free_daily); });
}

fincon_status fincon_max_drawdown(const double* values, size_t n, double* out) {
  if (!out) return null_argument("out");
  if (!values && n > 0) return null_argument("values");
  return guarded([&] { *out = fincon::max_drawdown(std::span<const double>(values, n)); });
}

fincon_status fincon_wilcoxon(const double* a, const double* b, size_t n, double* statistic, double* p_value) {
  if ((!a || !b) && n > 0) return null_argument("a/b");
  return guarded([&] {
    auto r = fincon::wilcoxon_signed_rank(std::span<const double>(a, n), std::span<const double>(b, n));
    if (statistic) *statistic = r.statistic;
    if (p_value) *p_value = r.p_value;
  });
}

}  // extern "C"
