#include <doctest.h>

#include <cmath>
#include <random>

#include "fincon/risk_control.hpp"
#include "oracles.hpp"
#include "support.hpp"

using namespace fincon;

namespace {

Trajectory make_trajectory(const std::string& tag, const std::vector<double>& pnl,
                           const std::vector<Direction>& dirs = {}) {
  Trajectory t;
  t.tag = tag;
  t.universe = {"ACME"};
  t.complete = true;
  for (std::size_t i = 0; i < pnl.size(); ++i) {
    DayRecord r;
    r.date = Date(2024, 1, 1).plus_days(static_cast<int>(i));
    r.directions["ACME"] = dirs.empty() ? (pnl[i] > 0 ? Direction::Long : Direction::Short) : dirs[i];
    r.pnl = pnl[i];
    r.reasoning = "reason-" + r.date.iso();
    r.insights = {"news_analyst@ACME: note-" + r.date.iso()};
    t.records.push_back(r);
  }
  return t;
}

}  // namespace

TEST_CASE("cvar worked example") {
  const std::vector<double> x{-5, -3, -1, 0, 2, 4, 6, 8, 10, 12};
  CHECK(value_at_risk(x, 0.2) == -3.0);
  CHECK(cvar(x, 0.2) == -4.0);
  const std::vector<double> flat(17, 0.25);
  CHECK(cvar(flat, 0.01) == 0.25);
  CHECK(kDefaultCvarAlpha == 0.01);
  CHECK_CODE(cvar(std::vector<double>{}, 0.1), ErrorCode::EmptyHistory);
  CHECK_CODE(cvar(x, 0.0), ErrorCode::AlphaOutOfRange);
  CHECK_CODE(cvar(x, 1.0), ErrorCode::AlphaOutOfRange);
}

TEST_CASE("cvar matches the sort-and-average oracle") {
  std::mt19937_64 rng(99);
  std::normal_distribution<double> noise(0, 0.02);
  for (int trial = 0; trial < 300; ++trial) {
    const std::size_t n = 1 + rng() % 500;
    std::vector<double> x(n);
    for (auto& v : x) v = (rng() % 5 == 0) ? std::round(noise(rng) * 1000) / 1000 : noise(rng);
    const double alpha = std::uniform_real_distribution<double>(0.001, 0.999)(rng);
    const auto want = oracle::tail_risk(x, alpha);
    CHECK(std::abs(value_at_risk(x, alpha) - want.var) <= 1e-12);
    CHECK(std::abs(cvar(x, alpha) - want.cvar) <= 1e-12);
  }
}

TEST_CASE("cvar shifts with translation") {
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> u(-1, 1);
  for (int trial = 0; trial < 100; ++trial) {
    std::vector<double> x(1 + rng() % 80);
    for (auto& v : x) v = u(rng);
    const double c = u(rng) * 10;
    std::vector<double> y = x;
    for (auto& v : y) v += c;
    CHECK(cvar(y, 0.05) == doctest::Approx(cvar(x, 0.05) + c).epsilon(1e-12));
  }
}

TEST_CASE("trigger rule truth table") {
  for (double dcvar : {-1.0, 0.0, 1.0}) {
    for (double r : {-0.01, 0.0, 0.01}) {
      const bool expect = dcvar < 0 || r < 0;
      CHECK(trigger_rule(-1.0 + dcvar, -1.0, r) == expect);
      RiskState s;
      s.cvar = -1.0 + dcvar;
      s.prev_cvar = -1.0;
      s.history_len = 10;
      const auto out = within_episode_check(s, r);
      CHECK(out.alert == expect);
      if (dcvar < 0) CHECK(out.trigger == ReflectionTrigger::CvarDrop);
      else if (r < 0) CHECK(out.trigger == ReflectionTrigger::NegativePnl);
      else CHECK_FALSE(out.trigger);
    }
  }
}

TEST_CASE("within_episode_check examples") {
  RiskState s;
  s.history_len = 12;
  s.cvar = -4.0;
  s.prev_cvar = -3.5;
  CHECK(within_episode_check(s, 0.02).alert);
  s.cvar = -3.5;
  CHECK(within_episode_check(s, -0.01).alert);
  CHECK_FALSE(within_episode_check(s, 0.0).alert);
}

TEST_CASE("cvar branch arms only after the minimum history") {
  RiskState s;
  s.cvar = -4.0;
  s.prev_cvar = -3.0;
  s.history_len = 9;
  CHECK_FALSE(within_episode_check(s, 0.01).alert);
  s.history_len = 10;
  CHECK(within_episode_check(s, 0.01).alert);
  s.prev_cvar.reset();
  CHECK_FALSE(within_episode_check(s, 0.01).alert);
}

TEST_CASE("monitor follows a hand-simulated trace") {
  // With alpha 0.01 and under 100 days the CVaR is the running minimum.
  const std::vector<double> pnl{0.01, 0.02, -0.01, 0.03, 0.0, 0.01, 0.02, 0.01, 0.01, 0.02,
                                -0.02, 0.01, 0.0, -0.005, 0.01, -0.03};
  WithinEpisodeMonitor mon;
  double running_min = 1e9;
  for (std::size_t i = 0; i < pnl.size(); ++i) {
    const double prev_min = running_min;
    running_min = std::min(running_min, pnl[i]);
    const auto s = mon.push(Date(2024, 1, 1).plus_days(static_cast<int>(i)), pnl[i]);
    CHECK(*s.cvar == running_min);
    const bool drop = i + 1 >= 10 && i > 0 && running_min < prev_min;
    CHECK(s.alert == (drop || pnl[i] < 0));
    if (drop) CHECK(s.trigger == ReflectionTrigger::CvarDrop);
  }
  CHECK(mon.history().size() == pnl.size());
}

TEST_CASE("overlap percentage") {
  using D = Direction;
  std::vector<D> a{D::Long, D::Short, D::Neutral, D::Long};
  CHECK(overlap_percentage(a, a) == 1.0);
  std::vector<D> b{D::Long, D::Long, D::Neutral, D::Short};
  CHECK(overlap_percentage(a, b) == 0.5);
  CHECK_CODE(overlap_percentage(a, std::vector<D>{D::Long}), ErrorCode::LengthMismatch);
  CHECK_CODE(overlap_percentage(std::vector<D>{}, std::vector<D>{}), ErrorCode::EmptySequence);

  for (auto [agree, pct] : {std::pair{23, 46.939}, std::pair{35, 71.429}, std::pair{40, 81.633}}) {
    std::vector<D> x(49, D::Long), y(49, D::Long);
    for (int i = agree; i < 49; ++i) y[static_cast<std::size_t>(i)] = D::Short;
    CHECK(std::abs(100.0 * overlap_percentage(x, y) - pct) <= 1e-3);
  }
}

TEST_CASE("overlap is symmetric and one only for identical sequences") {
  std::mt19937_64 rng(17);
  for (int trial = 0; trial < 500; ++trial) {
    const std::size_t n = 1 + rng() % 30;
    std::vector<Direction> a(n), b(n);
    for (std::size_t i = 0; i < n; ++i) {
      a[i] = static_cast<Direction>(rng() % 3);
      b[i] = (rng() % 4 == 0) ? static_cast<Direction>(rng() % 3) : a[i];
    }
    const double ab = overlap_percentage(a, b);
    CHECK(ab == overlap_percentage(b, a));
    CHECK((ab == 1.0) == (a == b));
  }
}

TEST_CASE("sustained runs") {
  const std::vector<double> pnl{0.01, 0.02, 0.0, -0.01, -0.02, -0.03, 0.01, -0.01, 0.02, 0.03};
  auto runs = find_sustained_runs(pnl);
  REQUIRE(runs.size() == 3);
  CHECK(runs[0].begin == 0);
  CHECK(runs[0].end == 2);
  CHECK(runs[1].sign == -1);
  CHECK(runs[1].end - runs[1].begin == 3);
  CHECK(runs[2].begin == 8);
  CHECK(find_sustained_runs(std::vector<double>(5, 0.0)).empty());
  CHECK(find_sustained_runs(pnl, 3).size() == 1);
}

TEST_CASE("learning-rate bands") {
  CHECK(learning_rate_instruction(0.469) == "substantially rewrite the belief aspects");
  CHECK(learning_rate_instruction(0.5) == "revise targeted aspects");
  CHECK(learning_rate_instruction(0.714) == "revise targeted aspects");
  CHECK(learning_rate_instruction(0.8) == "make minimal refinements only");
}

TEST_CASE("conceptualize") {
  auto mock = std::make_shared<MockBackend>();
  LlmGateway gw(mock);
  CvrfEngine engine(gw, {});

  SUBCASE("flat trajectory needs no model call") {
    auto t = make_trajectory("1", std::vector<double>(6, 0.0), std::vector<Direction>(6, Direction::Neutral));
    CHECK(engine.conceptualize(t).empty());
    CHECK(mock->call_count() == 0);
  }
  SUBCASE("prompt holds exactly the run records") {
    const std::vector<double> pnl{0.0, 0.01, 0.02, 0.03, 0.0, -0.01, 0.02};
    auto t = make_trajectory("1", pnl);
    mock->add("risk_control", "1:" + t.records.back().date.iso() + ":conceptualize",
              R"({"insights":{"historical momentum":"Ride strong trends.","news insights":["a","b"]}})");
    const auto insights = engine.conceptualize(t);
    REQUIRE(insights.size() == 2);
    CHECK(insights[0].aspect == "historical momentum");
    REQUIRE(engine.last_concept_prompt());
    const auto& prompt = *engine.last_concept_prompt();
    // Linear scan for runs of length >= 2 of one strict sign.
    std::vector<bool> in_run(pnl.size(), false);
    for (std::size_t i = 0; i < pnl.size();) {
      std::size_t j = i;
      while (j < pnl.size() && pnl[i] != 0 && (pnl[j] > 0) == (pnl[i] > 0) && pnl[j] != 0) ++j;
      if (j - i >= 2)
        for (std::size_t k = i; k < j; ++k) in_run[k] = true;
      i = std::max(j, i + 1);
    }
    for (std::size_t i = 0; i < pnl.size(); ++i)
      CHECK((prompt.find("reason-" + t.records[i].date.iso()) != std::string::npos) == in_run[i]);
    engine.conceptualize(t);
    CHECK(mock->call_count() == 1);
    CHECK(mock->calls()[0].temperature == 0.0);
  }
  SUBCASE("aspect keys outside the vocabulary are rejected") {
    auto t = make_trajectory("1", {0.01, 0.02});
    mock->add("risk_control", "1:" + t.records.back().date.iso() + ":conceptualize",
              R"({"insights":{"astrology":"no"}})");
    CHECK_CODE(engine.conceptualize(t), ErrorCode::SchemaViolationAfterRetries);
  }
}

TEST_CASE("compare_and_update") {
  auto mock = std::make_shared<MockBackend>();
  LlmGateway gw(mock);
  CvrfOptions opts;
  opts.analysts = {AgentRole::NewsAnalyst, AgentRole::Filing10qAnalyst, AgentRole::Filing10kAnalyst,
                   AgentRole::DataAnalyst};
  CvrfEngine engine(gw, opts);

  using D = Direction;
  auto prev = make_trajectory("1", {0.01, 0.02, -0.01, -0.02}, {D::Long, D::Long, D::Short, D::Short});
  auto cur = make_trajectory("2", {0.01, 0.02, 0.01, 0.02}, {D::Long, D::Long, D::Long, D::Long});
  const std::string last = cur.records.back().date.iso();
  mock->add("risk_control", "1:" + last + ":conceptualize", R"({"insights":{"news insights":"lagging"}})");
  mock->add("risk_control", "2:" + last + ":conceptualize", R"({"insights":{"historical momentum":"trend"}})");
  mock->add("risk_control", "2:" + last + ":belief_update",
            R"({"meta_prompt":"Lean on Historical Momentum; treat Form 10-Q signals with caution."})");
  mock->add("manager", "2:" + last + ":belief_update",
            R"({"beliefs":{"historical momentum":"Follow 20-day momentum.","news insights":"Fade hype.",)"
            R"("Form 10-Q":"Watch inventory.","other aspects":["Size down in drawdowns."]}})");

  PromptSet prompts = default_prompt_set(opts.analysts);
  prompts.belief_block["ECC"] = std::string("stale");
  Router router({"news_analyst", "filing10q_analyst", "filing10k_analyst", "data_analyst"});

  SUBCASE("current episode wins on a higher objective") {
    auto [u, updated] = engine.compare_and_update(prev, cur, {1.0, 2.0}, prompts, &router);
    CHECK(u.winner == "2");
    CHECK(u.learning_rate == 0.5);
    CHECK(engine.update_calls() == 1);
    CHECK(updated.belief_block.size() == 4);
    CHECK_FALSE(updated.belief_block.count("ECC"));
    CHECK(std::get<std::string>(updated.belief_block.at("historical momentum")) == "Follow 20-day momentum.");
    CHECK(u.target_agents == std::vector<std::string>{"manager", "filing10q_analyst", "data_analyst"});
    CHECK(updated.analyst_beliefs.at("data_analyst") == "Follow 20-day momentum.");
    CHECK_FALSE(updated.analyst_beliefs.count("news_analyst"));
    CHECK(router.count_of(MessageKind::BeliefUpdate) == 3);
    const auto delivered = router.delivered();
    CHECK(delivered[0].from == "risk_control");
    CHECK(delivered[0].to == "manager");
    CHECK(delivered[1].from == "manager");
    for (const auto& call : mock->calls()) CHECK(call.temperature == 0.0);
    const auto rewrite = mock->calls().back();
    CHECK(rewrite.user_prompt.find("revise targeted aspects") != std::string::npos);
    auto back = BeliefUpdate::from_json(u.to_json());
    CHECK(back.to_json() == u.to_json());
  }
  SUBCASE("tie goes to the current episode") {
    auto [u, updated] = engine.compare_and_update(prev, cur, {1.5, 1.5}, prompts);
    CHECK(u.winner == "2");
  }
  SUBCASE("previous episode can win") {
    auto [u, updated] = engine.compare_and_update(prev, cur, {3.0, 2.0}, prompts);
    CHECK(u.winner == "1");
    const auto meta_call = mock->calls().at(2);
    CHECK(meta_call.user_prompt.find("Better episode 1") != std::string::npos);
  }
  SUBCASE("incomplete episodes are refused") {
    cur.complete = false;
    CHECK_CODE(engine.compare_and_update(prev, cur, {1.0, 2.0}, prompts), ErrorCode::IncompleteEpisode);
    CHECK(engine.update_calls() == 0);
  }
}

TEST_CASE("convergence check") {
  const std::vector<double> taus{0.469, 0.714, 0.816};
  CHECK(convergence_check(taus, std::vector<double>{1.0, 1.2, 1.3, 1.3}, 4, {0.8, 1e-4, 10}));
  CHECK_FALSE(convergence_check(std::vector<double>{0.5}, std::vector<double>{1.0, 1.0}, 2, {0.8, 1e-4, 10}));
  CHECK_FALSE(convergence_check(taus, std::vector<double>{1.0, 1.2, 1.3, 1.5}, 4, {0.8, 1e-4, 10}));
  CHECK(convergence_check(std::vector<double>{0.1}, std::vector<double>{1.0, 5.0}, 4, {}));
  CHECK(convergence_check({}, {}, 1, {0.8, 1e-4, 1}));
}
