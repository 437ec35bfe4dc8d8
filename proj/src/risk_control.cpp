#include "fincon/risk_control.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>

#include "fincon/error.hpp"
#include "fincon/schema.hpp"
#include "text_util.hpp"

namespace fincon {

using detail::format_number;
using nlohmann::json;

namespace {

void check_alpha(double alpha) {
  if (!(alpha > 0.0 && alpha < 1.0)) raise(ErrorCode::AlphaOutOfRange, "alpha must lie in (0, 1), got " + format_number(alpha));
}

// Smallest k in [1, n] with k/n >= alpha.
std::size_t tail_count(std::size_t n, double alpha) {
  const double dn = static_cast<double>(n);
  auto k = static_cast<std::size_t>(std::ceil(alpha * dn));
  k = std::clamp<std::size_t>(k, 1, n);
  while (k > 1 && static_cast<double>(k - 1) / dn >= alpha) --k;
  while (k < n && static_cast<double>(k) / dn < alpha) ++k;
  return k;
}

std::string lower(std::string_view s) {
  std::string out(s);
  for (auto& c : out) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  return out;
}

std::vector<ConceptInsight> insights_from(const json& j) {
  std::vector<ConceptInsight> out;
  for (auto aspect : kAspectVocabulary) {
    auto it = j.find(std::string(aspect));
    if (it != j.end()) out.push_back({std::string(aspect), belief_from_json(*it)});
  }
  return out;
}

std::string render_insights(const std::vector<ConceptInsight>& insights) {
  if (insights.empty()) return "- (no sustained runs)\n";
  std::string out;
  for (const auto& c : insights) out += "- " + c.aspect + ": " + render_belief(c.text) + "\n";
  return out;
}

json insights_json(const std::vector<ConceptInsight>& insights) {
  json j = json::object();
  for (const auto& c : insights) j[c.aspect] = belief_to_json(c.text);
  return j;
}

std::string render_day(const DayRecord& r) {
  std::string dirs;
  for (const auto& [t, d] : r.directions) dirs += (dirs.empty() ? "" : ", ") + t + "=" + std::string(to_string(d));
  std::string out = "  * " + r.date.iso() + ": " + dirs + "; PnL " + format_number(r.pnl) + "\n";
  if (!r.reasoning.empty()) out += "    reasoning: " + r.reasoning + "\n";
  for (const auto& i : r.insights) out += "    insight: " + i + "\n";
  return out;
}

}  // namespace

double value_at_risk(std::span<const double> pnl, double alpha) {
  check_alpha(alpha);
  if (pnl.empty()) raise(ErrorCode::EmptyHistory, "VaR of an empty history");
  std::vector<double> sorted(pnl.begin(), pnl.end());
  const auto k = tail_count(sorted.size(), alpha);
  std::nth_element(sorted.begin(), sorted.begin() + static_cast<std::ptrdiff_t>(k - 1), sorted.end());
  return sorted[k - 1];
}

double cvar(std::span<const double> pnl, double alpha) {
  const double var = value_at_risk(pnl, alpha);
  double sum = 0;
  std::size_t count = 0;
  for (double x : pnl) {
    if (x <= var) {
      sum += x;
      ++count;
    }
  }
  return sum / static_cast<double>(count);
}

bool trigger_rule(double cvar_t, double cvar_prev, double pnl_t) noexcept {
  return cvar_t < cvar_prev || pnl_t < 0.0;
}

RiskState within_episode_check(const RiskState& state, double pnl_t, std::size_t min_history) {
  RiskState out = state;
  out.alert = false;
  out.trigger.reset();
  const bool armed = state.history_len >= min_history && state.cvar && state.prev_cvar;
  if (armed && *state.cvar < *state.prev_cvar) {
    out.alert = true;
    out.trigger = ReflectionTrigger::CvarDrop;
  } else if (pnl_t < 0.0) {
    out.alert = true;
    out.trigger = ReflectionTrigger::NegativePnl;
  }
  return out;
}

WithinEpisodeMonitor::WithinEpisodeMonitor(double alpha, std::size_t min_history)
    : alpha_(alpha), min_history_(min_history) {
  check_alpha(alpha);
}

RiskState WithinEpisodeMonitor::push(Date date, double pnl) {
  history_.push_back(pnl);
  RiskState s;
  s.date = date;
  s.history_len = history_.size();
  s.cvar = cvar(history_, alpha_);
  if (last_) s.prev_cvar = last_->cvar;
  s = within_episode_check(s, pnl, min_history_);
  last_ = s;
  return s;
}

double overlap_percentage(std::span<const Direction> a, std::span<const Direction> b) {
  if (a.size() != b.size())
    raise(ErrorCode::LengthMismatch, "sequences of length " + std::to_string(a.size()) + " and " + std::to_string(b.size()));
  if (a.empty()) raise(ErrorCode::EmptySequence, "overlap of empty sequences");
  std::size_t same = 0;
  for (std::size_t i = 0; i < a.size(); ++i) same += a[i] == b[i] ? 1 : 0;
  return static_cast<double>(same) / static_cast<double>(a.size());
}

std::vector<PnlRun> find_sustained_runs(std::span<const double> pnl, std::size_t min_length) {
  std::vector<PnlRun> runs;
  std::size_t i = 0;
  while (i < pnl.size()) {
    const int sign = pnl[i] > 0 ? 1 : pnl[i] < 0 ? -1 : 0;
    std::size_t j = i + 1;
    while (j < pnl.size() && (pnl[j] > 0 ? 1 : pnl[j] < 0 ? -1 : 0) == sign) ++j;
    if (sign != 0 && j - i >= std::max<std::size_t>(min_length, 1)) runs.push_back({i, j, sign});
    i = j;
  }
  return runs;
}

std::string_view learning_rate_instruction(double tau) noexcept {
  if (tau < 0.5) return "substantially rewrite the belief aspects";
  if (tau < 0.8) return "revise targeted aspects";
  return "make minimal refinements only";
}

json BeliefUpdate::to_json() const {
  json beliefs_json = json::object();
  for (const auto& [k, v] : beliefs) beliefs_json[k] = belief_to_json(v);
  return {{"episode_pair", {prev_episode, cur_episode}},
          {"winner", winner},
          {"objectives", {prev_objective, cur_objective}},
          {"insights", {{prev_episode, insights_json(prev_insights)}, {cur_episode, insights_json(cur_insights)}}},
          {"meta_prompt", meta_prompt},
          {"learning_rate", learning_rate},
          {"target_agents", target_agents},
          {"beliefs", beliefs_json}};
}

BeliefUpdate BeliefUpdate::from_json(const json& j) {
  BeliefUpdate u;
  try {
    u.prev_episode = j.at("episode_pair").at(0).get<std::string>();
    u.cur_episode = j.at("episode_pair").at(1).get<std::string>();
    u.winner = j.at("winner").get<std::string>();
    u.prev_objective = j.at("objectives").at(0).get<double>();
    u.cur_objective = j.at("objectives").at(1).get<double>();
    u.prev_insights = insights_from(j.at("insights").at(u.prev_episode));
    u.cur_insights = insights_from(j.at("insights").at(u.cur_episode));
    u.meta_prompt = j.at("meta_prompt").get<std::string>();
    u.learning_rate = j.at("learning_rate").get<double>();
    u.target_agents = j.at("target_agents").get<std::vector<std::string>>();
    for (const auto& c : insights_from(j.at("beliefs"))) u.beliefs[c.aspect] = c.text;
  } catch (const json::exception& e) {
    raise(ErrorCode::SchemaError, std::string("belief update: ") + e.what());
  }
  return u;
}

CvrfEngine::CvrfEngine(LlmGateway& gateway, CvrfOptions options) : gateway_(gateway), options_(std::move(options)) {}

std::vector<ConceptInsight> CvrfEngine::conceptualize(const Trajectory& trajectory) {
  if (auto it = cache_.find(trajectory.tag); it != cache_.end()) return it->second;
  if (trajectory.records.empty()) raise(ErrorCode::EmptyTrajectory, "episode " + trajectory.tag + " has no records");

  const auto pnl = trajectory.pnl();
  const auto runs = find_sustained_runs(pnl, options_.min_run_length);
  std::vector<ConceptInsight> insights;
  if (!runs.empty()) {
    std::string user =
        "Summarize conceptualized investment insights from the sustained profitable and losing stretches "
        "below. Key each insight by one of: historical momentum, news insights, Form 10-Q, Form 10-K, ECC, "
        "other aspects.\n";
    for (const auto& run : runs) {
      user += std::string(run.sign > 0 ? "Profitable" : "Losing") + " stretch of " + std::to_string(run.end - run.begin) +
              " days:\n";
      for (std::size_t i = run.begin; i < run.end; ++i) user += render_day(trajectory.records[i]);
    }
    user += describe(find_schema(schema_id::kConceptInsights));
    CompletionRequest req;
    req.role_tag = std::string(kRiskControlId);
    req.step_key = make_step_key(trajectory.tag, trajectory.records.back().date.iso(), phase::kConceptualize);
    req.system_prompt = "You are the risk-control component of a trading team reviewing a finished episode.";
    req.user_prompt = user;
    req.output_schema = std::string(schema_id::kConceptInsights);
    req.temperature = options_.belief_temperature;
    req.max_retries = options_.max_retries;
    req.seed = options_.seed;
    auto out = gateway_.complete(req);
    last_concept_prompt_ = user;
    insights = insights_from(out.fields.at("insights"));
  }
  cache_[trajectory.tag] = insights;
  return insights;
}

std::pair<BeliefUpdate, PromptSet> CvrfEngine::compare_and_update(const Trajectory& prev, const Trajectory& cur,
                                                                  std::pair<double, double> objectives,
                                                                  const PromptSet& prompts, Router* router) {
  if (!prev.complete || !cur.complete)
    raise(ErrorCode::IncompleteEpisode, "episode " + (prev.complete ? cur.tag : prev.tag) + " did not complete");
  if (cur.records.empty()) raise(ErrorCode::EmptyTrajectory, "episode " + cur.tag + " has no records");
  ++update_calls_;

  BeliefUpdate u;
  u.prev_episode = prev.tag;
  u.cur_episode = cur.tag;
  u.prev_objective = objectives.first;
  u.cur_objective = objectives.second;
  const bool prev_wins = objectives.first > objectives.second;
  u.winner = prev_wins ? prev.tag : cur.tag;
  u.prev_insights = conceptualize(prev);
  u.cur_insights = conceptualize(cur);
  u.learning_rate = overlap_percentage(prev.direction_sequence(), cur.direction_sequence());

  const auto& win = prev_wins ? u.prev_insights : u.cur_insights;
  const auto& lose = prev_wins ? u.cur_insights : u.prev_insights;
  const std::string last_date = cur.records.back().date.iso();

  std::string meta_user = "Compare the insights of a better and a worse trading episode and state, as an "
                          "optimization direction, which investment beliefs should change.\nBetter episode " +
                          u.winner + " (objective " + format_number(prev_wins ? u.prev_objective : u.cur_objective) +
                          "):\n" + render_insights(win) + "Worse episode " + (prev_wins ? cur.tag : prev.tag) +
                          " (objective " + format_number(prev_wins ? u.cur_objective : u.prev_objective) + "):\n" +
                          render_insights(lose) + describe(find_schema(schema_id::kMetaPrompt));
  CompletionRequest meta;
  meta.role_tag = std::string(kRiskControlId);
  meta.step_key = make_step_key(cur.tag, last_date, phase::kBeliefUpdate);
  meta.system_prompt = "You are the risk-control component of a trading team comparing two episodes.";
  meta.user_prompt = meta_user;
  meta.output_schema = std::string(schema_id::kMetaPrompt);
  meta.temperature = options_.belief_temperature;
  meta.max_retries = options_.max_retries;
  meta.seed = options_.seed;
  u.meta_prompt = gateway_.complete(meta).fields.at("meta_prompt").get<std::string>();

  std::string rewrite_user = "Rewrite the investment beliefs following the optimization direction below.\n" +
                             prompts.render_belief_block() + "Optimization direction: " + u.meta_prompt +
                             "\nOverlap of trading actions between the two episodes: " +
                             format_number(100.0 * u.learning_rate) + "%. Instruction: " +
                             std::string(learning_rate_instruction(u.learning_rate)) + ".\n" +
                             describe(find_schema(schema_id::kBeliefUpdate));
  CompletionRequest rewrite;
  rewrite.role_tag = std::string(agent_id(AgentRole::Manager));
  rewrite.step_key = meta.step_key;
  rewrite.system_prompt = "You maintain the investment beliefs of the trading manager.";
  rewrite.user_prompt = rewrite_user;
  rewrite.output_schema = std::string(schema_id::kBeliefUpdate);
  rewrite.temperature = options_.belief_temperature;
  rewrite.max_retries = options_.max_retries;
  rewrite.seed = options_.seed;
  for (const auto& c : insights_from(gateway_.complete(rewrite).fields.at("beliefs"))) u.beliefs[c.aspect] = c.text;

  PromptSet updated = prompts;
  updated.belief_block = u.beliefs;
  u.target_agents.emplace_back(agent_id(AgentRole::Manager));
  const std::string meta_lower = lower(u.meta_prompt);
  for (auto role : options_.analysts) {
    auto aspect = aspect_for(role);
    if (!aspect || meta_lower.find(lower(*aspect)) == std::string::npos) continue;
    const std::string id(agent_id(role));
    u.target_agents.push_back(id);
    if (auto it = u.beliefs.find(std::string(*aspect)); it != u.beliefs.end())
      updated.analyst_beliefs[id] = render_belief(it->second);
  }

  if (router) {
    const Date date = cur.records.back().date;
    const std::string payload = u.to_json().dump();
    router->route({std::string(kRiskControlId), u.target_agents.front(), MessageKind::BeliefUpdate, date, payload});
    for (std::size_t i = 1; i < u.target_agents.size(); ++i)
      router->route({u.target_agents.front(), u.target_agents[i], MessageKind::BeliefUpdate, date, payload});
  }
  return {u, updated};
}

bool convergence_check(std::span<const double> tau_history, std::span<const double> objective_history, int episodes,
                       const ConvergenceRule& rule) {
  if (episodes >= rule.max_episodes) return true;
  if (tau_history.empty() || objective_history.size() < 2) return false;
  const double improvement = objective_history.back() - objective_history[objective_history.size() - 2];
  return tau_history.back() >= rule.overlap && improvement < rule.epsilon;
}

}  // namespace fincon
