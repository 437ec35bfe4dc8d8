#include "fincon/backtest.hpp"

#include <algorithm>
#include <fstream>
#include <future>
#include <numeric>
#include <set>
#include <sstream>

#include "fincon/error.hpp"
#include "fincon/portfolio.hpp"
#include "text_util.hpp"

namespace fincon {

namespace fs = std::filesystem;
using detail::format_number;
using nlohmann::json;

namespace {

void write_text(const fs::path& path, const std::string& text) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) raise(ErrorCode::IoError, "cannot write " + path.string());
  out << text;
  if (!out) raise(ErrorCode::IoError, "failed writing " + path.string());
}

std::string read_text(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) raise(ErrorCode::FileNotFound, path.string());
  std::stringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

std::string join(const std::vector<std::string>& items, const std::string& sep) {
  std::string out;
  for (const auto& s : items) out += (out.empty() ? "" : sep) + s;
  return out;
}

std::optional<json> read_json_if_present(const fs::path& path) {
  if (!fs::exists(path)) return std::nullopt;
  auto j = json::parse(read_text(path), nullptr, false);
  if (j.is_discarded()) raise(ErrorCode::SchemaError, path.string() + " is not valid JSON");
  return j;
}

double price_on(const PriceSeries& s, Date d, PriceField field) {
  auto i = s.index_of(d);
  if (!i) raise(ErrorCode::InsufficientData, s.ticker + " has no bar on " + d.iso());
  return s.price(*i, field);
}

fs::path trajectory_path(const fs::path& run_dir, const std::string& tag) {
  return run_dir / ("trajectory_" + tag + ".jsonl");
}

}  // namespace

MarketData load_market_data(const RunConfig& config) {
  std::vector<std::string> order = config.universe;
  for (const auto& [ticker, path] : config.price_files)
    if (std::find(order.begin(), order.end(), ticker) == order.end()) order.push_back(ticker);
  std::vector<PriceSeries> series;
  for (const auto& ticker : order) {
    auto it = config.price_files.find(ticker);
    if (it == config.price_files.end()) raise(ErrorCode::ConfigError, "no price file configured for " + ticker);
    series.push_back(load_price_series(it->second, ticker));
  }
  std::vector<TextDocument> docs;
  for (const auto& path : config.document_files) {
    auto part = load_documents(path);
    docs.insert(docs.end(), std::make_move_iterator(part.begin()), std::make_move_iterator(part.end()));
  }
  std::set<std::string> ids;
  for (const auto& d : docs)
    if (!ids.insert(d.doc_id).second) raise(ErrorCode::SchemaError, "doc_id " + d.doc_id + " appears in two corpora");
  return MarketData(std::move(series), std::move(docs), config.momentum_window);
}

std::vector<Date> decision_days(const TradingCalendar& calendar, const DateRange& range) {
  std::vector<Date> out;
  const auto& dates = calendar.dates();
  for (std::size_t i = 0; i + 1 < dates.size(); ++i)
    if (dates[i] >= range.start && dates[i] <= range.end) out.push_back(dates[i]);
  return out;
}

DataSummary validate_data(const RunConfig& config) {
  const MarketData data = load_market_data(config);
  DataSummary s;
  s.tickers = data.tickers().size();
  s.trading_days = data.calendar().dates().size();
  for (const auto& [date, docs] : data.documents_by_date()) s.documents += docs.size();
  s.unattached_documents = data.unattached_documents().size();
  s.documents += s.unattached_documents;
  for (const auto& t : config.universe) {
    const auto& series = data.series(t);
    for (const auto& d : data.calendar().dates())
      if (!series.index_of(d)) raise(ErrorCode::InsufficientData, t + " has no bar on trading day " + d.iso());
  }
  if (config.train) {
    s.train_decision_days = decision_days(data.calendar(), *config.train).size();
    if (s.train_decision_days == 0) raise(ErrorCode::InsufficientData, "train range contains no decision days");
  }
  if (config.test) {
    s.test_decision_days = decision_days(data.calendar(), *config.test).size();
    if (s.test_decision_days == 0) raise(ErrorCode::InsufficientData, "test range contains no decision days");
  }
  return s;
}

std::shared_ptr<LlmBackend> make_backend(const RunConfig& config, const std::optional<fs::path>& mock_script) {
  if (mock_script) {
    if (config.endpoint)
      raise(ErrorCode::ConfigError, "a mock script cannot be combined with llm.endpoint");
    return MockBackend::load(*mock_script);
  }
  auto env = HttpBackendConfig::from_env();
  HttpBackendConfig http = env.value_or(HttpBackendConfig{});
  if (config.endpoint) http.endpoint = *config.endpoint;
  if (config.model) http.model = *config.model;
  if (http.endpoint.empty())
    raise(ErrorCode::ConfigError, "no LLM backend: set llm.endpoint or FINCON_LLM_ENDPOINT, or pass a mock script");
  http.timeout = std::chrono::milliseconds(config.timeout_ms);
  http.min_request_interval = std::chrono::milliseconds(config.min_request_interval_ms);
  return std::make_shared<HttpBackend>(std::move(http));
}

Backtester::Backtester(RunConfig config, std::shared_ptr<LlmBackend> backend, fs::path run_dir)
    : config_(std::move(config)),
      run_dir_(std::move(run_dir)),
      data_(std::make_unique<MarketData>(load_market_data(config_))),
      embedder_(std::make_unique<HashEmbedder>(config_.embedding_dim)),
      store_(std::make_unique<MemoryStore>(config_.embedding_dim, data_->calendar())),
      gateway_(std::move(backend)),
      router_([this] {
        std::vector<std::string> ids;
        for (auto r : config_.analysts) ids.emplace_back(agent_id(r));
        return ids;
      }()) {
  for (const auto& t : config_.universe)
    if (!data_->has_series(t)) raise(ErrorCode::ConfigError, "no price series for " + t);
  CvrfOptions opts;
  opts.analysts = config_.analysts;
  opts.min_run_length = config_.min_run_length;
  opts.belief_temperature = config_.belief_temperature;
  opts.max_retries = config_.max_retries;
  opts.seed = config_.seed;
  cvrf_ = std::make_unique<CvrfEngine>(gateway_, std::move(opts));
  gateway_.set_observer([this](const PromptRecord& r) {
    std::lock_guard lock(log_mutex_);
    log_.push_back(r);
  });
}

Backtester::~Backtester() = default;

std::size_t Backtester::belief_update_calls() const { return cvrf_->update_calls(); }

std::vector<PromptRecord> Backtester::prompt_log() const {
  std::lock_guard lock(log_mutex_);
  auto out = log_;
  std::stable_sort(out.begin(), out.end(), [](const PromptRecord& a, const PromptRecord& b) {
    return std::tie(a.step_key, a.role_tag, a.attempt) < std::tie(b.step_key, b.role_tag, b.attempt);
  });
  return out;
}

PromptSet Backtester::initial_prompts() const {
  PromptSet p = default_prompt_set(config_.analysts);
  for (const auto& [id, path] : config_.prompt_files) {
    const std::string text = read_text(path);
    if (id == agent_id(AgentRole::Manager)) {
      p.manager_prompt = text;
    } else if (p.analyst_prompts.count(id)) {
      p.analyst_prompts[id] = text;
    } else {
      raise(ErrorCode::ConfigError, "prompt file given for unknown agent '" + id + "'");
    }
  }
  return p;
}

AgentProfile Backtester::manager_profile() const {
  std::string general = config_.general_config;
  if (general.empty())
    general = std::string("Task: ") + (config_.task == TaskMode::SingleStock ? "trade a single stock" : "manage a stock portfolio") +
              " (" + join(config_.universe, ", ") + ") on daily bars, taking one position per trading day.";
  auto p = default_profile(AgentRole::Manager, config_.universe, general);
  if (auto it = config_.profile_files.find(p.agent_id); it != config_.profile_files.end()) p.profile_text = read_text(it->second);
  return p;
}

std::vector<AgentProfile> Backtester::analyst_profiles() const {
  const std::string general = manager_profile().general_config;
  std::vector<AgentProfile> out;
  for (auto role : config_.analysts) {
    auto p = default_profile(role, config_.universe, general);
    if (auto it = config_.profile_files.find(p.agent_id); it != config_.profile_files.end())
      p.profile_text = read_text(it->second);
    out.push_back(std::move(p));
  }
  return out;
}

void Backtester::write_config_used() const { write_text(run_dir_ / "config.used.json", config_.merged.dump(2) + "\n"); }

void Backtester::write_prompt_log(const std::string& tag) {
  std::string text;
  for (const auto& r : prompt_log()) {
    json j = {{"role_tag", r.role_tag},       {"step_key", r.step_key},       {"attempt", r.attempt},
              {"temperature", r.temperature}, {"system_prompt", r.system_prompt}, {"user_prompt", r.user_prompt},
              {"response", r.response}};
    text += j.dump() + "\n";
  }
  write_text(run_dir_ / "prompts" / "log" / ("episode_" + tag + ".jsonl"), text);
}

void Backtester::write_final_prompts(const PromptSet& prompts) const {
  const auto dir = run_dir_ / "prompts" / "final";
  write_text(dir / "prompt_set.json", prompts.to_json().dump(2) + "\n");
  write_text(dir / "manager.txt", prompts.manager_prompt + "\n\n" + prompts.render_belief_block());
  for (const auto& [id, text] : prompts.analyst_prompts) {
    std::string body = text + "\n";
    if (auto it = prompts.analyst_beliefs.find(id); it != prompts.analyst_beliefs.end())
      body += "\nCurrent investment belief for your aspect: " + it->second + "\n";
    write_text(dir / (id + ".txt"), body);
  }
}

Trajectory Backtester::run_episode(const std::string& tag, const std::vector<Date>& days, const PromptSet& prompts,
                                   std::uint64_t seed) {
  router_.clear();
  {
    std::lock_guard lock(log_mutex_);
    log_.clear();
  }
  AgentContext ctx;
  ctx.gateway = &gateway_;
  ctx.store = store_.get();
  ctx.embedder = embedder_.get();
  ctx.episode = tag;
  ctx.top_k = config_.top_k;
  ctx.decay = config_.decay;
  ctx.default_importance = config_.default_importance;
  ctx.trading_temperature = config_.trading_temperature;
  ctx.max_retries = config_.max_retries;
  ctx.data_analyst_uses_llm = config_.data_analyst_uses_llm;
  ctx.seed = seed;

  const auto analysts = analyst_profiles();
  const auto manager = manager_profile();
  std::vector<std::string> analyst_ids;
  for (const auto& a : analysts) analyst_ids.push_back(a.agent_id);
  const std::string manager_id(agent_id(AgentRole::Manager));

  Trajectory traj;
  traj.tag = tag;
  traj.universe = config_.universe;
  WithinEpisodeMonitor monitor(config_.cvar_alpha, config_.risk_min_history);
  const SignificanceRule rule{config_.feedback_sigma_multiple, config_.feedback_window, config_.feedback_min_history};
  std::vector<double> pnl_history;
  std::optional<Date> last_realized;

  try {
    for (const Date t : days) {
      const Observation obs = assemble_observation(*data_, t, config_.universe);

      auto run_analyst = [&](const AgentProfile& profile) {
        std::vector<InsightMessage> out;
        for (const auto& ticker : config_.universe)
          out.push_back(analyst_step(ctx, profile, prompts, slice_for(profile.role, ticker, obs)).message);
        return out;
      };
      std::vector<std::vector<InsightMessage>> per_analyst;
      if (config_.parallel_analysts && analysts.size() > 1) {
        std::vector<std::future<std::vector<InsightMessage>>> futures;
        for (const auto& a : analysts) futures.push_back(std::async(std::launch::async, run_analyst, std::cref(a)));
        for (auto& f : futures) per_analyst.push_back(f.get());
      } else {
        for (const auto& a : analysts) per_analyst.push_back(run_analyst(a));
      }
      std::vector<InsightMessage> insights;
      for (auto& batch : per_analyst)
        for (auto& m : batch) {
          router_.route({m.from, manager_id, MessageKind::Insight, t, m.ticker + ": " + m.distilled_insight});
          insights.push_back(std::move(m));
        }

      RiskStatus risk;
      if (const auto& last = monitor.last()) {
        risk.alert = last->alert;
        risk.cvar = last->cvar;
        risk.reason = last->trigger;
      }
      auto managed = manager_step(ctx, manager, prompts, insights, risk, config_.universe, analyst_ids, config_.task,
                                  config_.position_size, t);
      auto& decision = managed.decision;

      const Date next = *data_->calendar().next(t);
      std::vector<double> now_prices;
      std::vector<double> next_prices;
      for (const auto& ticker : config_.universe) {
        const auto& s = data_->series(ticker);
        now_prices.push_back(price_on(s, t, config_.price_field));
        next_prices.push_back(price_on(s, next, config_.price_field));
      }

      std::vector<double> positions;
      if (config_.task == TaskMode::Portfolio) {
        std::vector<double> weights(config_.universe.size(), 0.0);
        const auto panel = build_return_panel(*data_, config_.universe, t, config_.lookback, config_.price_field);
        if (panel.returns.rows >= 2) {
          auto inputs = shrink_estimates(panel, config_.shrinkage_lambda);
          inputs.directions = directions_in_order(decision, config_.universe);
          weights = solve_mean_variance(inputs, {config_.max_iterations, config_.solver_tolerance}).weights;
        }
        positions = scale_to_positions(weights, config_.capital, now_prices, config_.integer_shares);
        if (config_.integer_shares)
          for (std::size_t i = 0; i < weights.size(); ++i) weights[i] = positions[i] * now_prices[i] / config_.capital;
        decision.weights = weights;
      } else {
        positions = decision.weights;
      }
      router_.route({manager_id, std::string(kRiskControlId), MessageKind::Decision, t,
                     join([&] {
                       std::vector<std::string> parts;
                       for (const auto& [tk, d] : decision.directions) parts.push_back(tk + "=" + std::string(to_string(d)));
                       return parts;
                     }(), ", ")});

      const double r = portfolio_pnl(decision.weights, now_prices, next_prices);
      const RiskState state = monitor.push(t, r);

      DayRecord rec;
      rec.date = t;
      rec.directions = decision.directions;
      rec.weights = decision.weights;
      rec.positions = positions;
      rec.pnl = r;
      rec.cvar = state.cvar;
      rec.alert = state.alert;
      rec.trigger = state.trigger;
      rec.risk_averse = risk.alert;
      rec.reasoning = decision.reasoning;
      for (const auto& m : insights) rec.insights.push_back(m.from + "@" + m.ticker + ": " + m.distilled_insight);
      rec.cited_memory_ids = decision.cited_memory_ids;

      if (state.alert) rec.reflection = reflect(ctx, manager, prompts, decision, r, *state.trigger, next).text;
      send_feedback(ctx, decision, r, rule.is_significant(pnl_history, r), analyst_ids, router_, next);
      pnl_history.push_back(r);
      traj.records.push_back(std::move(rec));
      last_realized = next;
    }
  } catch (const Error&) {
    write_text(run_dir_ / ("trajectory_" + tag + ".FAILED.jsonl"), traj.to_jsonl());
    write_prompt_log(tag);
    throw;
  }

  traj.complete = true;
  traj.objective = objective_value(traj.pnl(), config_.discount);
  if (last_realized && !traj.records.empty()) {
    std::size_t alerts = 0;
    for (const auto& r : traj.records) alerts += r.alert ? 1 : 0;
    const std::string content = "Episode " + tag + " summary: cumulative return " +
                                format_number(cumulative_return(traj.pnl())) + "%, objective " +
                                format_number(traj.objective) + ", " + std::to_string(alerts) + " risk alerts over " +
                                std::to_string(traj.records.size()) + " days.";
    MemoryEvent e;
    e.event_id = manager_id + ":" + tag + ":episode";
    e.owner = manager_id;
    e.layer = MemoryLayer::Episodic;
    e.embedding = embedder_->embed(content);
    e.content = content;
    e.initial_importance = config_.default_importance;
    e.decay_ratio = config_.decay.manager;
    e.created_at = *last_realized;
    if (!store_->contains(e.event_id)) store_->insert(std::move(e));
  }
  write_prompt_log(tag);
  return traj;
}

TrainResult Backtester::train() {
  if (!config_.train) raise(ErrorCode::ConfigError, "train range is not configured");
  const auto days = decision_days(data_->calendar(), *config_.train);
  if (days.empty()) raise(ErrorCode::InsufficientData, "train range contains no decision days");
  write_config_used();

  TrainResult res;
  PromptSet prompts = initial_prompts();
  int first = 1;
  if (config_.resume) {
    int k = 1;
    while (fs::exists(run_dir_ / "checkpoints" / ("episode_" + std::to_string(k)) / "prompts.json") &&
           fs::exists(trajectory_path(run_dir_, std::to_string(k))))
      ++k;
    for (int j = 1; j < k; ++j) {
      auto traj = Trajectory::parse_jsonl(read_text(trajectory_path(run_dir_, std::to_string(j))), std::to_string(j),
                                          config_.universe);
      traj.objective = objective_value(traj.pnl(), config_.discount);
      res.objectives.push_back(traj.objective);
      res.trajectories.push_back(std::move(traj));
      if (j >= 2) {
        auto u = BeliefUpdate::from_json(
            json::parse(read_text(run_dir_ / "beliefs" / ("episode_" + std::to_string(j) + ".json"))));
        res.overlaps.push_back(u.learning_rate);
        res.updates.push_back(std::move(u));
      }
    }
    if (k > 1) {
      const auto ckpt = run_dir_ / "checkpoints" / ("episode_" + std::to_string(k - 1));
      prompts = PromptSet::from_json(json::parse(read_text(ckpt / "prompts.json")));
      *store_ = MemoryStore::parse_snapshot(read_text(ckpt / "memory.jsonl"), config_.embedding_dim, data_->calendar());
      first = k;
    }
  }

  const ConvergenceRule rule{config_.convergence_overlap, config_.convergence_epsilon, config_.max_episodes};
  auto write_episodes = [&] {
    json eps = json::array();
    for (std::size_t i = 0; i < res.trajectories.size(); ++i) {
      const auto pnl = res.trajectories[i].pnl();
      json e = {{"episode", res.trajectories[i].tag},
                {"objective", res.objectives[i]},
                {"cumulative_return_pct", pnl.empty() ? 0.0 : cumulative_return(pnl)},
                {"days", pnl.size()}};
      if (i >= 1 && i - 1 < res.overlaps.size()) e["overlap_with_previous"] = res.overlaps[i - 1];
      eps.push_back(e);
    }
    json doc = {{"episodes", eps}, {"belief_updates", res.updates.size()}, {"stop_reason", res.stop_reason}};
    write_text(run_dir_ / "episodes.json", doc.dump(2) + "\n");
  };

  if (first > 1 && convergence_check(res.overlaps, res.objectives, first - 1, rule)) {
    res.stop_reason = first - 1 >= config_.max_episodes ? "max_episodes" : "converged";
  }
  for (int k = first; k <= config_.max_episodes && res.stop_reason.empty(); ++k) {
    const std::string tag = std::to_string(k);
    const MemoryLayer reset[] = {MemoryLayer::Working, MemoryLayer::Procedural};
    store_->erase_layers(reset);
    auto traj = run_episode(tag, days, prompts, config_.seed);
    write_text(trajectory_path(run_dir_, tag), traj.to_jsonl());
    res.objectives.push_back(traj.objective);
    res.trajectories.push_back(std::move(traj));

    if (res.trajectories.size() >= 2) {
      const auto& prev = res.trajectories[res.trajectories.size() - 2];
      const auto& cur = res.trajectories.back();
      auto [update, next_prompts] =
          cvrf_->compare_and_update(prev, cur, {prev.objective, cur.objective}, prompts, &router_);
      prompts = std::move(next_prompts);
      write_text(run_dir_ / "beliefs" / ("episode_" + tag + ".json"), update.to_json().dump(2) + "\n");
      res.overlaps.push_back(update.learning_rate);
      res.updates.push_back(std::move(update));
    }
    const auto ckpt = run_dir_ / "checkpoints" / ("episode_" + tag);
    write_text(ckpt / "prompts.json", prompts.to_json().dump(2) + "\n");
    write_text(ckpt / "memory.jsonl", store_->snapshot_jsonl());
    if (convergence_check(res.overlaps, res.objectives, k, rule))
      res.stop_reason = k >= config_.max_episodes ? "max_episodes" : "converged";
    write_episodes();
  }
  if (res.stop_reason.empty()) res.stop_reason = "max_episodes";
  write_episodes();

  res.prompts = prompts;
  write_final_prompts(prompts);
  write_text(run_dir_ / "memory" / "snapshot.jsonl", store_->snapshot_jsonl());
  write_report(run_dir_);
  return res;
}

TestResult Backtester::test() {
  if (!config_.test) raise(ErrorCode::ConfigError, "test range is not configured");
  const fs::path source = config_.training_run_dir.value_or(run_dir_);
  const auto prompt_file = source / "prompts" / "final" / "prompt_set.json";
  const auto memory_file = source / "memory" / "snapshot.jsonl";
  for (const auto& p : {prompt_file, memory_file})
    if (!fs::exists(p)) raise(ErrorCode::MissingTrainingArtifacts, "missing " + p.string() + "; run train first");
  const auto days = decision_days(data_->calendar(), *config_.test);
  if (days.empty()) raise(ErrorCode::InsufficientData, "test range contains no decision days");

  const PromptSet prompts = PromptSet::from_json(json::parse(read_text(prompt_file)));
  const MemoryStore inherited =
      MemoryStore::parse_snapshot(read_text(memory_file), config_.embedding_dim, data_->calendar());
  write_config_used();

  TestResult res;
  std::vector<Trajectory> runs;
  std::vector<std::string> snapshots;
  for (int r = 0; r < config_.replications; ++r) {
    *store_ = inherited;
    const std::uint64_t seed = config_.seed + static_cast<std::uint64_t>(r);
    runs.push_back(run_episode("test", days, prompts, seed));
    if (config_.replications > 1)
      fs::rename(run_dir_ / "prompts" / "log" / "episode_test.jsonl",
                 run_dir_ / "prompts" / "log" / ("episode_test_r" + std::to_string(r) + ".jsonl"));
    snapshots.push_back(store_->snapshot_jsonl());
    res.replication_returns.push_back(cumulative_return(runs.back().pnl()));
  }
  std::vector<std::size_t> order(runs.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(),
                   [&](auto a, auto b) { return res.replication_returns[a] < res.replication_returns[b]; });
  res.chosen_replication = order[(order.size() - 1) / 2];
  res.trajectory = runs[res.chosen_replication];

  write_text(trajectory_path(run_dir_, "test"), res.trajectory.to_jsonl());
  write_text(run_dir_ / "memory" / "test_snapshot.jsonl", snapshots[res.chosen_replication]);
  json reps = {{"cumulative_returns_pct", res.replication_returns},
               {"chosen", res.chosen_replication},
               {"base_seed", config_.seed}};
  write_text(run_dir_ / "replications.json", reps.dump(2) + "\n");
  res.metrics = write_report(run_dir_);
  return res;
}

MetricsReport write_report(const fs::path& run_dir) {
  fs::path source = trajectory_path(run_dir, "test");
  std::string tag = "test";
  if (!fs::exists(source)) {
    int best = 0;
    if (fs::exists(run_dir)) {
      for (const auto& entry : fs::directory_iterator(run_dir)) {
        const std::string name = entry.path().filename().string();
        if (name.rfind("trajectory_", 0) != 0 || entry.path().extension() != ".jsonl") continue;
        const std::string middle = name.substr(11, name.size() - 11 - 6);
        if (middle.empty() || !std::all_of(middle.begin(), middle.end(), [](char c) { return c >= '0' && c <= '9'; }))
          continue;
        best = std::max(best, std::stoi(middle));
      }
    }
    if (best == 0) raise(ErrorCode::MissingTrajectory, "no trajectory in " + run_dir.string());
    tag = std::to_string(best);
    source = trajectory_path(run_dir, tag);
  }

  MetricsOptions options;
  double discount = 1.0;
  std::vector<std::string> universe;
  if (auto cfg = read_json_if_present(run_dir / "config.used.json")) {
    const json& c = *cfg;
    options.capital = c.at("portfolio").value("capital", options.capital);
    options.risk_free_daily = c.at("backtest").value("risk_free_daily", 0.0);
    options.annualize_sharpe = c.at("backtest").value("annualize_sharpe", false);
    options.cvar_alpha = c.at("risk").value("cvar_alpha", options.cvar_alpha);
    discount = c.at("backtest").value("discount", 1.0);
    universe = c.value("universe", std::vector<std::string>{});
  }
  const auto traj = Trajectory::parse_jsonl(read_text(source), tag, universe);
  const auto pnl = traj.pnl();
  const auto metrics = compute_metrics(pnl, options);

  json report = {{"source", source.filename().string()},
                 {"episode", tag},
                 {"metrics", metrics.to_json()},
                 {"objective", objective_value(pnl, discount)}};
  write_text(run_dir / "report.json", report.dump(2) + "\n");

  std::string csv = "date,pnl,equity,cvar,alert\n";
  const auto equity = equity_curve(pnl, options.capital);
  for (std::size_t i = 0; i < traj.records.size(); ++i) {
    const auto& r = traj.records[i];
    csv += r.date.iso() + "," + format_number(r.pnl) + "," + format_number(equity[i + 1]) + "," +
           (r.cvar ? format_number(*r.cvar) : std::string()) + "," + (r.alert ? "1" : "0") + "\n";
  }
  write_text(run_dir / "metrics.csv", csv);
  return metrics;
}

SelectionResult run_selection(const RunConfig& config, const fs::path& run_dir) {
  const MarketData data = load_market_data(config);
  std::vector<std::string> tickers;
  for (const auto& [t, p] : config.price_files) tickers.push_back(t);

  SelectionResult res;
  for (const auto& t : tickers) res.news_counts[t] = 0;
  auto count = [&](const TextDocument& d) {
    if (d.kind == DocKind::News && res.news_counts.count(d.ticker)) ++res.news_counts[d.ticker];
  };
  for (const auto& [date, docs] : data.documents_by_date())
    for (const auto& d : docs) count(d);
  for (const auto& d : data.unattached_documents()) count(d);

  const Date as_of = config.train ? config.train->end : data.calendar().dates().back();
  const auto panel = build_return_panel(data, tickers, as_of, data.calendar().dates().size(), config.price_field);
  std::vector<SelectionCandidate> candidates;
  for (std::size_t c = 0; c < tickers.size(); ++c) {
    SelectionCandidate cand{tickers[c], res.news_counts[tickers[c]], {}};
    for (std::size_t r = 0; r < panel.returns.rows; ++r) cand.returns.push_back(panel.returns(r, c));
    candidates.push_back(std::move(cand));
  }
  res.selected = select_stocks(candidates, config.select_count, config.min_news);

  json doc = {{"selected", res.selected},
              {"count", config.select_count},
              {"min_news", config.min_news},
              {"news_counts", res.news_counts},
              {"return_days", panel.returns.rows}};
  write_text(run_dir / "selection.json", doc.dump(2) + "\n");
  return res;
}

}  // namespace fincon
