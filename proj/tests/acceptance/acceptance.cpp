// Acceptance suite: one PASS/FAIL line per criterion, nonzero exit on any FAIL.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "fincon/backtest.hpp"
#include "fincon/error.hpp"
#include "fincon/memory.hpp"
#include "fincon/metrics.hpp"
#include "fincon/portfolio.hpp"
#include "fincon/risk_control.hpp"
#include "oracles.hpp"

using namespace fincon;
using nlohmann::json;
namespace fs = std::filesystem;
using Clock = std::chrono::steady_clock;

namespace {

struct Outcome {
  bool ok = true;
  std::string detail;
  std::vector<std::string> failures;

  void expect(bool cond, const std::string& what) {
    if (cond) return;
    ok = false;
    if (failures.size() < 5) failures.push_back(what);
  }
};

double seconds_since(Clock::time_point start) {
  return std::chrono::duration<double>(Clock::now() - start).count();
}

std::string fmt(double x, int precision = 6) {
  std::ostringstream os;
  os.precision(precision);
  os << x;
  return os.str();
}

std::string fixture(const std::string& name) { return std::string(FINCON_FIXTURE_DIR) + "/" + name; }

std::string read_all(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

struct Scratch {
  fs::path path;
  explicit Scratch(const std::string& label) {
    path = fs::temp_directory_path() / ("fincon-accept-" + label + "-" + std::to_string(Clock::now().time_since_epoch().count()));
    fs::create_directories(path);
  }
  ~Scratch() {
    std::error_code ec;
    fs::remove_all(path, ec);
  }
};

// ---- 1 ------------------------------------------------------------------

Outcome risk_metric_oracle() {
  Outcome o;
  const std::vector<double> worked{-5, -3, -1, 0, 2, 4, 6, 8, 10, 12};
  o.expect(value_at_risk(worked, 0.2) == -3.0, "worked VaR");
  o.expect(cvar(worked, 0.2) == -4.0, "worked CVaR");

  std::mt19937_64 rng(1);
  std::normal_distribution<double> noise(0.0, 0.02);
  std::vector<std::vector<double>> histories;
  std::vector<double> alphas;
  for (int i = 0; i < 1000; ++i) {
    std::vector<double> h(1 + rng() % 500);
    for (auto& x : h) x = rng() % 7 == 0 ? std::round(noise(rng) * 500) / 500 : noise(rng);
    histories.push_back(std::move(h));
    alphas.push_back(i % 4 == 0 ? 0.01 : std::uniform_real_distribution<double>(0.001, 0.999)(rng));
  }
  double worst = 0;
  double library_seconds = 0;
  for (std::size_t i = 0; i < histories.size(); ++i) {
    const auto start = Clock::now();
    const double v = value_at_risk(histories[i], alphas[i]);
    const double c = cvar(histories[i], alphas[i]);
    library_seconds += seconds_since(start);
    const auto want = oracle::tail_risk(histories[i], alphas[i]);
    worst = std::max({worst, std::abs(v - want.var), std::abs(c - want.cvar)});
  }
  o.expect(worst <= 1e-12, "max deviation " + fmt(worst));
  o.expect(library_seconds < 5.0, "runtime " + fmt(library_seconds) + " s");
  o.detail = "1000 histories, max |diff| " + fmt(worst) + ", worked VaR -3 CVaR -4, " + fmt(library_seconds, 3) + " s";
  return o;
}

// ---- 2 ------------------------------------------------------------------

MVInputs random_instance(std::mt19937_64& rng, std::size_t n) {
  std::normal_distribution<double> g(0, 1);
  MVInputs in;
  for (std::size_t i = 0; i < n; ++i) in.mu.push_back(0.5 * g(rng));
  const std::size_t k = 1 + rng() % (n + 1);
  std::vector<double> a(n * k);
  for (auto& x : a) x = g(rng);
  in.sigma = Matrix(n, n);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j) {
      double s = 0;
      for (std::size_t c = 0; c < k; ++c) s += a[i * k + c] * a[j * k + c];
      in.sigma(i, j) = s / static_cast<double>(k);
    }
  if (rng() % 2 == 0)
    for (std::size_t i = 0; i < n; ++i) in.sigma(i, i) += 0.01;
  for (std::size_t i = 0; i < n; ++i) in.directions.push_back(static_cast<Direction>(rng() % 3));
  return in;
}

Outcome mean_variance_solver() {
  Outcome o;
  MVInputs worked{{0.4, 1.2}, Matrix::identity(2), {Direction::Long, Direction::Long}};
  const auto w = solve_mean_variance(worked).weights;
  o.expect(std::abs(w[0] - 0.2) <= 1e-6 && std::abs(w[1] - 0.6) <= 1e-6, "worked case");

  std::mt19937_64 rng(2);
  double worst_pg = 0;
  double solver_seconds = 0;
  int grid_cases = 0;
  for (int trial = 0; trial < 500; ++trial) {
    const auto in = random_instance(rng, 1 + rng() % 6);
    const std::size_t n = in.mu.size();
    const auto start = Clock::now();
    const auto sol = solve_mean_variance(in);
    solver_seconds += seconds_since(start);

    std::vector<std::vector<double>> sigma(n, std::vector<double>(n));
    double sigma_max = 0, mu_max = 0, row_max = 0;
    for (std::size_t i = 0; i < n; ++i) {
      double row = 0;
      for (std::size_t j = 0; j < n; ++j) {
        sigma[i][j] = in.sigma(i, j);
        sigma_max = std::max(sigma_max, std::abs(sigma[i][j]));
        row += std::abs(sigma[i][j]);
      }
      row_max = std::max(row_max, row);
      mu_max = std::max(mu_max, std::abs(in.mu[i]));
    }
    std::vector<oracle::Box> boxes;
    for (auto d : in.directions) boxes.push_back({d == Direction::Short ? -1.0 : 0.0, d == Direction::Long ? 1.0 : 0.0});
    for (std::size_t i = 0; i < n; ++i)
      o.expect(sol.weights[i] >= boxes[i].lo && sol.weights[i] <= boxes[i].hi, "box violated");

    const auto ref = oracle::mv_projected_gradient(in.mu, sigma, boxes);
    worst_pg = std::max(worst_pg, std::abs(sol.objective - oracle::mv_value(ref, in.mu, sigma)));

    if (n <= 2) {
      ++grid_cases;
      const double h = 1e-3;
      const double grid = oracle::mv_grid(in.mu, sigma, boxes, h);
      // Distance to the nearest grid point is at most h/2 per coordinate.
      const double gradient = mu_max + 2 * row_max;
      const double slack = static_cast<double>(n) * (h / 2) * gradient +
                           static_cast<double>(n * n) * (h / 2) * (h / 2) * sigma_max;
      o.expect(sol.objective >= grid - 1e-12, "below grid optimum");
      o.expect(sol.objective - grid <= slack, "grid gap beyond resolution");
    }
  }
  o.expect(worst_pg <= 1e-6, "projected-gradient gap " + fmt(worst_pg));
  o.expect(solver_seconds < 30.0, "runtime " + fmt(solver_seconds) + " s");
  o.detail = "500 instances, max objective gap " + fmt(worst_pg) + "; " + std::to_string(grid_cases) +
             " grid checks; worked (0.2, 0.6); " + fmt(solver_seconds, 3) + " s";
  return o;
}

// ---- 3 ------------------------------------------------------------------

Outcome memory_retrieval() {
  Outcome o;
  std::mt19937_64 rng(3);
  std::vector<Date> calendar;
  for (Date d(2023, 1, 2); calendar.size() < 250; d = d.plus_days(1)) {
    const auto wd = std::chrono::weekday(d.days()).c_encoding();
    if (wd != 0 && wd != 6) calendar.push_back(d);
  }
  double seconds = 0;
  std::size_t queries = 0;
  const double thetas[] = {0.9, 0.95, 0.97, 0.99};
  for (std::size_t size : {10UL, 100UL, 1000UL, 10000UL}) {
    std::vector<oracle::Event> events;
    MemoryStore store(16, TradingCalendar(calendar));
    std::uniform_real_distribution<double> unit(-1, 1);
    std::vector<std::vector<double>> pool(std::max<std::size_t>(4, size / 3));
    for (auto& v : pool) {
      v.resize(16);
      for (auto& x : v) x = unit(rng);
      v[0] += 3;
    }
    for (std::size_t i = 0; i < size; ++i) {
      oracle::Event e;
      e.id = "ev" + std::to_string(i);
      e.owner = rng() % 4 == 0 ? "someone_else" : "agent";
      e.layer = static_cast<int>(rng() % 3);
      e.embedding = pool[rng() % pool.size()];
      e.v = static_cast<double>(rng() % 9) / 8.0;
      e.theta = thetas[rng() % 4];
      e.created = calendar[rng() % calendar.size()];
      e.bonus = rng() % 5 == 0 ? 5.0 * static_cast<double>(1 + rng() % 3) : 0.0;
      MemoryEvent m;
      m.event_id = e.id;
      m.owner = e.owner;
      m.layer = static_cast<MemoryLayer>(e.layer);
      m.content = "c";
      m.embedding = e.embedding;
      m.initial_importance = e.v;
      m.decay_ratio = e.theta;
      m.created_at = e.created;
      m.access_bonus = e.bonus;
      store.insert(std::move(m));
      events.push_back(std::move(e));
    }
    for (int q = 0; q < 5; ++q) {
      MemoryQuery query;
      query.owner = "agent";
      query.embedding.resize(16);
      for (auto& x : query.embedding) x = unit(rng);
      query.embedding[0] += 2;
      query.as_of = calendar[calendar.size() / 2 + rng() % (calendar.size() / 2)];
      query.k = 1 + rng() % 10;
      const int layer = q % 2 == 0 ? -1 : static_cast<int>(rng() % 3);
      if (layer >= 0) query.layer = static_cast<MemoryLayer>(layer);
      const auto start = Clock::now();
      const auto got = store.retrieve_top_k(query);
      seconds += seconds_since(start);
      ++queries;
      const auto want = oracle::retrieve(events, calendar, "agent", query.embedding, query.as_of, query.k, layer);
      o.expect(got.size() == want.size(), "result size at store size " + std::to_string(size));
      for (std::size_t i = 0; i < std::min(got.size(), want.size()); ++i) {
        o.expect(got[i].event.event_id == want[i].id, "id mismatch at store size " + std::to_string(size));
        o.expect(std::abs(got[i].gamma - want[i].gamma) <= 1e-12, "gamma mismatch");
      }
    }
  }

  TradingCalendar cal({Date(2024, 1, 2), Date(2024, 1, 3), Date(2024, 1, 4)});
  MemoryEvent e;
  e.event_id = "x";
  e.owner = "agent";
  e.embedding = {1.0, 0.0};
  e.initial_importance = 0.8;
  e.decay_ratio = 0.9;
  e.created_at = Date(2024, 1, 2);
  const double imp = importance_score(e, Date(2024, 1, 4), cal);
  o.expect(std::abs(imp - 0.648) <= 1e-15, "importance " + fmt(imp, 17));
  MemoryStore small(2, cal);
  small.insert(e);
  small.boost_access("x");
  const double boosted = importance_score(*small.get("x"), Date(2024, 1, 4), cal);
  o.expect(std::abs(boosted - 5.648) <= 1e-12, "boost " + fmt(boosted, 17));
  o.expect(seconds < 10.0, "runtime " + fmt(seconds) + " s");
  o.detail = std::to_string(queries) + " queries on stores up to 10000 events, importance " + fmt(imp, 12) +
             ", boosted " + fmt(boosted, 12) + ", " + fmt(seconds, 3) + " s";
  return o;
}

// ---- 4 ------------------------------------------------------------------

Outcome overlap_figures() {
  Outcome o;
  std::string shown;
  for (auto [agree, pct] : {std::pair{23, 46.939}, std::pair{35, 71.429}, std::pair{40, 81.633}}) {
    std::vector<Direction> a(49, Direction::Long), b(49, Direction::Long);
    for (int i = agree; i < 49; ++i) b[static_cast<std::size_t>(i)] = i % 2 ? Direction::Short : Direction::Neutral;
    const double got = 100.0 * overlap_percentage(a, b);
    o.expect(std::abs(got - pct) <= 1e-3, std::to_string(agree) + "/49 gave " + fmt(got));
    shown += (shown.empty() ? "" : ", ") + std::to_string(agree) + "/49 -> " + fmt(got, 5) + "%";
  }
  o.detail = shown;
  return o;
}

// ---- 5 ------------------------------------------------------------------

Outcome trigger_truth_table() {
  Outcome o;
  int rows = 0;
  const double magnitudes[] = {1e-9, 0.01, 1.0};
  for (double base : {-2.0, 0.0, 1.5})
    for (int dsign : {-1, 0, 1})
      for (int rsign : {-1, 0, 1})
        for (double mag : magnitudes) {
          const double prev = base;
          const double cur = base + dsign * mag;
          const double r = rsign * mag;
          const bool expect = cur < prev || r < 0;
          RiskState s;
          s.cvar = cur;
          s.prev_cvar = prev;
          s.history_len = kDefaultMinRiskHistory;
          const auto out = within_episode_check(s, r);
          o.expect(out.alert == expect, "row dcvar " + std::to_string(dsign) + " r " + std::to_string(rsign));
          o.expect(trigger_rule(cur, prev, r) == expect, "trigger_rule row");
          if (expect)
            o.expect(out.trigger == (cur < prev ? ReflectionTrigger::CvarDrop : ReflectionTrigger::NegativePnl),
                     "trigger kind");
          else
            o.expect(!out.trigger, "spurious trigger");
          ++rows;
        }
  RiskState zero;
  zero.cvar = -1;
  zero.prev_cvar = -1;
  zero.history_len = kDefaultMinRiskHistory;
  o.expect(!within_episode_check(zero, 0.0).alert, "r = 0 boundary");
  o.detail = std::to_string(rows) + " rows including r = 0 and unchanged CVaR";
  return o;
}

// ---- 6 ------------------------------------------------------------------

Outcome metrics_anchors() {
  Outcome o;
  const std::vector<double> pnl{daily_pnl(1, 100, 110), daily_pnl(-1, 110, 99)};
  const double cr = cumulative_return(pnl);
  o.expect(std::abs(cr - 20.067) <= 1e-3, "CR " + fmt(cr));
  const double mdd = max_drawdown(std::vector<double>{100, 120, 90, 130});
  o.expect(mdd == 25.0, "MDD " + fmt(mdd, 17));
  bool zero_vol = false;
  try {
    sharpe_ratio(std::vector<double>(10, 0.004));
  } catch (const Error& e) {
    zero_vol = e.code() == ErrorCode::ZeroVolatility;
  }
  o.expect(zero_vol, "constant returns did not raise ZeroVolatility");
  o.detail = "CR " + fmt(cr, 8) + "%, MDD " + fmt(mdd) + "%, constant returns -> ZeroVolatility";
  return o;
}

// ---- 7 and 8 share one training run -------------------------------------

std::vector<std::pair<std::string, std::string>> tree_contents(const fs::path& root) {
  std::vector<std::pair<std::string, std::string>> out;
  for (const auto& entry : fs::recursive_directory_iterator(root))
    if (entry.is_regular_file()) out.emplace_back(fs::relative(entry.path(), root).string(), read_all(entry.path()));
  std::sort(out.begin(), out.end());
  return out;
}

struct SynRun {
  Scratch a{"train-a"};
  Scratch b{"train-b"};
  double seconds_a = 0;
  TrainResult first;
  std::size_t updates_b = 0;
};

Outcome end_to_end_determinism(SynRun& run) {
  Outcome o;
  const auto config = load_config(fixture("syn_config.json"));
  {
    const auto start = Clock::now();
    Backtester bt(config, make_backend(config, fixture("syn_mock.jsonl")), run.a.path);
    run.first = bt.train();
    run.seconds_a = seconds_since(start);
  }
  {
    Backtester bt(config, make_backend(config, fixture("syn_mock.jsonl")), run.b.path);
    run.updates_b = bt.train().updates.size();
  }
  const auto days = run.first.trajectories.empty() ? 0 : run.first.trajectories.front().records.size();
  o.expect(days == 49, "decision days " + std::to_string(days));
  o.expect(run.first.trajectories.size() == 4, "episodes " + std::to_string(run.first.trajectories.size()));
  o.expect(run.first.updates.size() == 3 && run.updates_b == 3,
           "belief updates " + std::to_string(run.first.updates.size()));
  o.expect(run.seconds_a < 60.0, "runtime " + fmt(run.seconds_a) + " s");
  const auto ta = tree_contents(run.a.path);
  const auto tb = tree_contents(run.b.path);
  o.expect(!ta.empty() && ta == tb, "run directories differ");
  o.detail = "4 episodes x " + std::to_string(days) + " days, " + std::to_string(run.first.updates.size()) +
             " belief updates, " + std::to_string(ta.size()) + " files byte-identical, " + fmt(run.seconds_a, 3) + " s";
  return o;
}

Outcome test_mode_contract(SynRun& run) {
  Outcome o;
  const auto config = load_config(fixture("syn_config.json"));
  const auto expected = json::parse(read_all(fixture("syn_expected.json")));
  Backtester bt(config, make_backend(config, fixture("syn_mock.jsonl")), run.a.path);
  const auto res = bt.test();
  o.expect(bt.belief_update_calls() == 0, "belief update calls " + std::to_string(bt.belief_update_calls()));

  // Independent trace: with alpha 0.01 and fewer than 100 days the CVaR is
  // the running minimum; the drop branch arms from the tenth day.
  const auto& recs = res.trajectory.records;
  std::vector<std::string> oracle_drops;
  double running_min = 0;
  for (std::size_t i = 0; i < recs.size(); ++i) {
    const double before = running_min;
    running_min = i == 0 ? recs[i].pnl : std::min(running_min, recs[i].pnl);
    const bool drop = i + 1 >= kDefaultMinRiskHistory && running_min < before;
    if (drop) oracle_drops.push_back(recs[i].date.iso());
    o.expect(recs[i].alert == (drop || recs[i].pnl < 0), "alert mismatch on " + recs[i].date.iso());
    if (drop) o.expect(recs[i].trigger == ReflectionTrigger::CvarDrop && recs[i].reflection, "no CVaR reflection");
  }
  const auto scripted = expected.at("test_cvar_drop_days").get<std::vector<std::string>>();
  o.expect(oracle_drops == scripted, "CVaR-drop days differ from the fixture");
  std::size_t fired = 0;
  for (const auto& day : scripted)
    for (const auto& r : recs)
      if (r.date.iso() == day && r.alert && r.trigger == ReflectionTrigger::CvarDrop) ++fired;
  o.expect(fired == scripted.size(), "alerts fired on " + std::to_string(fired) + " of " + std::to_string(scripted.size()));
  o.detail = "belief-update calls 0, alert on " + std::to_string(fired) + "/" + std::to_string(scripted.size()) +
             " scripted CVaR-drop days over " + std::to_string(recs.size()) + " test days";
  return o;
}

// ---- 9 ------------------------------------------------------------------

// Decides long or short from the momentum the data analyst reported for the
// decision day; everything else gets a minimal valid answer.
class MomentumRule final : public LlmBackend {
public:
  std::string generate(const CompletionRequest& req, const std::string& user_prompt) override {
    if (req.output_schema == "trading_decision") {
      const auto first = req.step_key.find(':');
      const std::string date = req.step_key.substr(first + 1, 10);
      const std::string anchor = "indicators on " + date + ": ";
      const auto at = user_prompt.find(anchor);
      if (at == std::string::npos) return R"({"action":"neutral","reasoning":"no indicators"})";
      const auto line_end = user_prompt.find('\n', at);
      const std::string line = user_prompt.substr(at, line_end - at);
      const auto m = line.find("momentum=");
      if (m == std::string::npos) return R"({"action":"neutral","reasoning":"no momentum"})";
      const double value = std::stod(line.substr(m + 9));
      return value > 0 ? R"({"action":"long","reasoning":"positive momentum"})"
                       : R"({"action":"short","reasoning":"negative momentum"})";
    }
    if (req.output_schema == "reflection") return R"({"reflection":"noted"})";
    return "{}";
  }
};

Outcome no_look_ahead() {
  Outcome o;
  Scratch scratch("lookahead");
  std::vector<std::string> overrides{"agents.analysts=[\"data_analyst\"]"};
  auto config = load_config(fixture("syn_config.json"), overrides);
  const auto base_data = load_market_data(config);
  const auto days = decision_days(base_data.calendar(), *config.train);
  const int window = config.momentum_window;
  const auto& series = base_data.series("SYN");

  // First decision day whose successor already has a momentum reading.
  std::size_t t = 0;
  for (std::size_t i = 0; i + 1 < days.size(); ++i)
    if (*series.index_of(days[i]) >= static_cast<std::size_t>(window)) {
      t = i + 5;
      break;
    }
  const std::size_t it = *series.index_of(days[t]);
  const double mom_t = momentum(series, days[t], window);
  const double ref_next = series.bars[it + 1 - static_cast<std::size_t>(window)].adj_close;
  const double new_price = mom_t > 0 ? ref_next * 0.5 : ref_next * 1.5;

  // Copy the fixture with bar t+1 rewritten so its momentum flips sign.
  std::ifstream in(config.price_files.at("SYN"));
  std::string line, out;
  std::getline(in, line);
  out += line + "\n";
  const std::string target = days[t + 1].iso();
  const std::string p = fmt(new_price, 10);
  while (std::getline(in, line)) {
    if (line.rfind(target, 0) == 0) line = target + "," + p + "," + p + "," + p + "," + p + "," + p + ",1000";
    out += line + "\n";
  }
  const auto altered_path = scratch.path / "altered.csv";
  std::ofstream(altered_path) << out;
  overrides.push_back("data.prices.SYN=" + altered_path.string());
  auto altered = load_config(fixture("syn_config.json"), overrides);

  const std::vector<Date> run_days(days.begin(), days.begin() + static_cast<long>(t) + 2);
  Backtester base(config, std::make_shared<MomentumRule>(), scratch.path / "base");
  Backtester alt(altered, std::make_shared<MomentumRule>(), scratch.path / "alt");
  const auto tb = base.run_episode("1", run_days, base.initial_prompts(), 0);
  const auto ta = alt.run_episode("1", run_days, alt.initial_prompts(), 0);

  const double mom_next_alt = momentum(alt.data().series("SYN"), days[t + 1], window);
  o.expect((mom_next_alt > 0) != (mom_t > 0), "alteration did not flip the indicator");
  for (std::size_t i = 0; i <= t; ++i)
    o.expect(tb.records[i].directions == ta.records[i].directions, "decision changed on " + days[i].iso());
  o.expect(tb.records[t + 1].directions != ta.records[t + 1].directions, "altered day itself unchanged");
  o.detail = "bar " + target + " rewritten (momentum " + fmt(mom_t, 4) + " -> " + fmt(mom_next_alt, 4) +
             "); decisions through " + days[t].iso() + " unchanged";
  return o;
}

// ---- 10 -----------------------------------------------------------------

Outcome wilcoxon_exact() {
  Outcome o;
  const std::vector<double> a{0.12, 0.05, 0.31, 0.08, 0.22, 0.17}, b(6, 0.0);
  std::vector<double> diffs(a);
  const auto w = wilcoxon_signed_rank(a, b);
  const double enumerated = oracle::wilcoxon_enumerated_p(diffs);
  o.expect(w.exact, "not exact");
  o.expect(std::abs(w.p_value - 0.03125) <= 1e-12, "p " + fmt(w.p_value, 12));
  o.expect(std::abs(enumerated - 0.03125) <= 1e-12, "enumeration " + fmt(enumerated, 12));
  o.detail = "6 positive pairs, p " + fmt(w.p_value, 8) + ", enumeration " + fmt(enumerated, 8);
  return o;
}

}  // namespace

int main() {
  SynRun syn;
  const std::vector<std::pair<std::string, std::function<Outcome()>>> criteria{
      {"risk metric oracle equivalence", risk_metric_oracle},
      {"mean-variance solver", mean_variance_solver},
      {"memory retrieval", memory_retrieval},
      {"overlap learning rate", overlap_figures},
      {"trigger truth table", trigger_truth_table},
      {"metrics anchors", metrics_anchors},
      {"end-to-end determinism", [&] { return end_to_end_determinism(syn); }},
      {"test-mode contract", [&] { return test_mode_contract(syn); }},
      {"no look-ahead", no_look_ahead},
      {"wilcoxon exact case", wilcoxon_exact},
  };
  int failed = 0;
  for (std::size_t i = 0; i < criteria.size(); ++i) {
    Outcome o;
    try {
      o = criteria[i].second();
    } catch (const std::exception& e) {
      o.ok = false;
      o.failures.push_back(std::string("exception: ") + e.what());
    }
    std::printf("%s [%zu] %s: %s\n", o.ok ? "PASS" : "FAIL", i + 1, criteria[i].first.c_str(), o.detail.c_str());
    for (const auto& f : o.failures) std::printf("       - %s\n", f.c_str());
    if (!o.ok) ++failed;
  }
  std::printf("%d/%zu criteria passed\n", static_cast<int>(criteria.size()) - failed, criteria.size());
  return failed == 0 ? 0 : 1;
}
