#include "fincon/agents.hpp"

#include <algorithm>
#include <cmath>
#include <set>

#include "fincon/error.hpp"
#include "fincon/schema.hpp"
#include "text_util.hpp"

namespace fincon {

using detail::format_number;
using nlohmann::json;

namespace {

constexpr AgentRole kAllRoles[] = {AgentRole::Manager,          AgentRole::NewsAnalyst,
                                   AgentRole::Filing10kAnalyst, AgentRole::Filing10qAnalyst,
                                   AgentRole::EccAnalyst,       AgentRole::DataAnalyst,
                                   AgentRole::SelectionAnalyst};

double decay_for(AgentRole role, const DecayTable& table) {
  switch (role) {
    case AgentRole::NewsAnalyst: return table.news;
    case AgentRole::Filing10kAnalyst: return table.form10k;
    case AgentRole::Filing10qAnalyst: return table.form10q;
    case AgentRole::EccAnalyst: return table.ecc_transcript;
    case AgentRole::DataAnalyst:
    case AgentRole::SelectionAnalyst: return table.market_data;
    case AgentRole::Manager: return table.manager;
  }
  return table.manager;
}

std::string join_ids(const std::vector<std::string>& ids) {
  std::string out;
  for (const auto& id : ids) {
    if (!out.empty()) out += ", ";
    out += id;
  }
  return out;
}

std::vector<ScoredEvent> retrieve(AgentContext& ctx, const std::string& owner, const std::string& text,
                                  Date as_of) {
  MemoryQuery q;
  q.owner = owner;
  q.query_text = text;
  q.embedding = ctx.embedder->embed(text);
  q.as_of = as_of;
  q.k = ctx.top_k;
  q.layer = MemoryLayer::Procedural;
  return ctx.store->retrieve_top_k(q);
}

void append_memories(std::string& prompt, const std::vector<ScoredEvent>& memories) {
  prompt += "Retrieved memories:\n";
  if (memories.empty()) prompt += "- (none)\n";
  for (const auto& m : memories) prompt += "- [" + m.event.event_id + "] " + m.event.content + "\n";
}

MemoryEvent make_event(AgentContext& ctx, std::string id, std::string owner, std::string content,
                       double importance, double decay, Date created_at) {
  MemoryEvent e;
  e.event_id = std::move(id);
  e.owner = std::move(owner);
  e.layer = MemoryLayer::Procedural;
  e.embedding = ctx.embedder->embed(content);
  e.content = std::move(content);
  e.initial_importance = importance;
  e.decay_ratio = decay;
  e.created_at = created_at;
  return e;
}

std::string render_indicators(const std::map<std::string, double>& indicators) {
  std::string out;
  for (const auto& [k, v] : indicators) {
    if (!out.empty()) out += ", ";
    out += k + "=" + format_number(v);
  }
  return out;
}

}  // namespace

std::string_view agent_id(AgentRole role) noexcept {
  switch (role) {
    case AgentRole::Manager: return "manager";
    case AgentRole::NewsAnalyst: return "news_analyst";
    case AgentRole::Filing10kAnalyst: return "filing10k_analyst";
    case AgentRole::Filing10qAnalyst: return "filing10q_analyst";
    case AgentRole::EccAnalyst: return "ecc_analyst";
    case AgentRole::DataAnalyst: return "data_analyst";
    case AgentRole::SelectionAnalyst: return "selection_analyst";
  }
  return "manager";
}

std::optional<AgentRole> parse_agent_role(std::string_view id) noexcept {
  for (auto r : kAllRoles)
    if (agent_id(r) == id) return r;
  return std::nullopt;
}

bool is_analyst(AgentRole role) noexcept { return role != AgentRole::Manager; }

std::vector<DocKind> owned_kinds(AgentRole role) {
  switch (role) {
    case AgentRole::NewsAnalyst: return {DocKind::News, DocKind::AnalystReport};
    case AgentRole::Filing10kAnalyst: return {DocKind::Form10K};
    case AgentRole::Filing10qAnalyst: return {DocKind::Form10Q};
    case AgentRole::EccAnalyst: return {DocKind::EccTranscript};
    default: return {};
  }
}

std::optional<std::string_view> aspect_for(AgentRole role) noexcept {
  switch (role) {
    case AgentRole::NewsAnalyst: return "news insights";
    case AgentRole::Filing10kAnalyst: return "Form 10-K";
    case AgentRole::Filing10qAnalyst: return "Form 10-Q";
    case AgentRole::EccAnalyst: return "ECC";
    case AgentRole::DataAnalyst: return "historical momentum";
    default: return std::nullopt;
  }
}

std::string_view to_string(Direction d) noexcept {
  switch (d) {
    case Direction::Long: return "long";
    case Direction::Short: return "short";
    case Direction::Neutral: return "neutral";
  }
  return "neutral";
}

std::optional<Direction> parse_direction(std::string_view text) noexcept {
  for (auto d : {Direction::Long, Direction::Short, Direction::Neutral})
    if (to_string(d) == text) return d;
  return std::nullopt;
}

int sign_of(Direction d) noexcept { return d == Direction::Long ? 1 : d == Direction::Short ? -1 : 0; }

std::string_view to_string(Sentiment s) noexcept {
  switch (s) {
    case Sentiment::Positive: return "positive";
    case Sentiment::Negative: return "negative";
    case Sentiment::Neutral: return "neutral";
  }
  return "neutral";
}

std::optional<Sentiment> parse_sentiment(std::string_view text) noexcept {
  for (auto s : {Sentiment::Positive, Sentiment::Negative, Sentiment::Neutral})
    if (to_string(s) == text) return s;
  return std::nullopt;
}

std::string_view to_string(ReflectionTrigger t) noexcept {
  switch (t) {
    case ReflectionTrigger::CvarDrop: return "cvar_drop";
    case ReflectionTrigger::NegativePnl: return "negative_pnl";
    case ReflectionTrigger::Episodic: return "episodic";
  }
  return "episodic";
}

std::optional<ReflectionTrigger> parse_reflection_trigger(std::string_view text) noexcept {
  for (auto t : {ReflectionTrigger::CvarDrop, ReflectionTrigger::NegativePnl, ReflectionTrigger::Episodic})
    if (to_string(t) == text) return t;
  return std::nullopt;
}

std::string_view to_string(MessageKind kind) noexcept {
  switch (kind) {
    case MessageKind::Insight: return "insight";
    case MessageKind::Decision: return "decision";
    case MessageKind::Feedback: return "feedback";
    case MessageKind::BeliefUpdate: return "belief_update";
  }
  return "insight";
}

AgentProfile default_profile(AgentRole role, std::span<const std::string> tickers,
                             const std::string& general_config) {
  std::string symbols;
  for (const auto& t : tickers) {
    if (!symbols.empty()) symbols += ", ";
    symbols += t;
  }
  AgentProfile p;
  p.agent_id = std::string(agent_id(role));
  p.role = role;
  p.general_config = general_config;
  if (role == AgentRole::Manager) {
    p.profile_text =
        "Role assignment: You are an experienced trading manager in an investment firm.\n"
        "Role description: Your responsibilities are to consolidate investment insights from analysts "
        "and make trading actions on " + symbols + ".";
    return p;
  }
  std::string source;
  switch (role) {
    case AgentRole::NewsAnalyst: source = "daily financial news and analyst reports"; break;
    case AgentRole::Filing10kAnalyst: source = "annual Form 10-K filings"; break;
    case AgentRole::Filing10qAnalyst: source = "quarterly Form 10-Q filings"; break;
    case AgentRole::EccAnalyst: source = "earnings conference call transcripts"; break;
    case AgentRole::DataAnalyst: source = "market price data and derived indicators"; break;
    case AgentRole::SelectionAnalyst: source = "cross-asset return statistics for stock selection"; break;
    default: break;
  }
  p.profile_text = "Role assignment: You are the investment analyst for " + source +
                   ".\nRole duty description: Your responsibilities are to distill investment insights "
                   "and other indicators like financial sentiment for " + symbols + ".";
  return p;
}

std::string render_belief(const BeliefValue& value) {
  if (const auto* s = std::get_if<std::string>(&value)) return *s;
  const auto& list = std::get<std::vector<std::string>>(value);
  return "[" + join_ids(list) + "]";
}

json belief_to_json(const BeliefValue& value) {
  if (const auto* s = std::get_if<std::string>(&value)) return *s;
  return std::get<std::vector<std::string>>(value);
}

BeliefValue belief_from_json(const json& j) {
  if (j.is_string()) return j.get<std::string>();
  return j.get<std::vector<std::string>>();
}

json PromptSet::to_json() const {
  json beliefs = json::object();
  for (const auto& [k, v] : belief_block) beliefs[k] = belief_to_json(v);
  return {{"analyst_prompts", analyst_prompts},
          {"manager_prompt", manager_prompt},
          {"belief_block", beliefs},
          {"analyst_beliefs", analyst_beliefs}};
}

PromptSet PromptSet::from_json(const json& j) {
  PromptSet p;
  p.analyst_prompts = j.at("analyst_prompts").get<std::map<std::string, std::string>>();
  p.manager_prompt = j.at("manager_prompt").get<std::string>();
  for (const auto& [k, v] : j.at("belief_block").items()) {
    if (!is_aspect_key(k)) raise(ErrorCode::SchemaError, "belief block key '" + k + "' is not an aspect");
    p.belief_block[k] = belief_from_json(v);
  }
  if (j.contains("analyst_beliefs"))
    p.analyst_beliefs = j.at("analyst_beliefs").get<std::map<std::string, std::string>>();
  return p;
}

std::string PromptSet::render_belief_block() const {
  if (belief_block.empty()) return "Investment beliefs: (none yet)\n";
  std::string out = "Investment beliefs:\n";
  for (auto aspect : kAspectVocabulary) {
    auto it = belief_block.find(std::string(aspect));
    if (it != belief_block.end()) out += "- " + it->first + ": " + render_belief(it->second) + "\n";
  }
  return out;
}

PromptSet default_prompt_set(std::span<const AgentRole> analysts) {
  PromptSet p;
  p.manager_prompt =
      "Consolidate the analysts' distilled insights, the risk status and your investment beliefs into "
      "one trading action per asset. Explain your reasoning and credit each analyst's contribution.";
  for (auto r : analysts) {
    p.analyst_prompts[std::string(agent_id(r))] =
        "Distill the key investment insight and financial sentiment from today's information. Be concise "
        "and cite the memory ids you relied on.";
  }
  return p;
}

std::vector<Direction> directions_in_order(const TradingDecision& decision,
                                           std::span<const std::string> universe) {
  std::vector<Direction> out;
  out.reserve(universe.size());
  for (const auto& t : universe) {
    auto it = decision.directions.find(t);
    out.push_back(it == decision.directions.end() ? Direction::Neutral : it->second);
  }
  return out;
}

Router::Router(std::vector<std::string> analyst_ids) : analysts_(std::move(analyst_ids)) {}

bool Router::is_analyst(std::string_view id) const {
  return std::find(analysts_.begin(), analysts_.end(), id) != analysts_.end();
}

bool Router::is_legal(std::string_view from, std::string_view to) const {
  const std::string_view manager = agent_id(AgentRole::Manager);
  if (is_analyst(from)) return to == manager;
  if (from == manager) return is_analyst(to) || to == kRiskControlId;
  if (from == kRiskControlId) return to == manager;
  return false;
}

void Router::route(Envelope message) {
  if (!is_legal(message.from, message.to))
    raise(ErrorCode::IllegalRoute, message.from + " -> " + message.to + " (" +
                                       std::string(to_string(message.kind)) + ")");
  std::lock_guard lock(mutex_);
  delivered_.push_back(std::move(message));
}

std::vector<Envelope> Router::delivered() const {
  std::lock_guard lock(mutex_);
  return delivered_;
}

std::size_t Router::count_on(Date date) const {
  std::lock_guard lock(mutex_);
  return static_cast<std::size_t>(
      std::count_if(delivered_.begin(), delivered_.end(), [&](const Envelope& e) { return e.date == date; }));
}

std::size_t Router::count_of(MessageKind kind) const {
  std::lock_guard lock(mutex_);
  return static_cast<std::size_t>(
      std::count_if(delivered_.begin(), delivered_.end(), [&](const Envelope& e) { return e.kind == kind; }));
}

std::size_t Router::total() const {
  std::lock_guard lock(mutex_);
  return delivered_.size();
}

void Router::clear() {
  std::lock_guard lock(mutex_);
  delivered_.clear();
}

AnalystInput slice_for(AgentRole role, const std::string& ticker, const Observation& observation,
                       const std::map<std::string, double>& extra_indicators) {
  AnalystInput in;
  in.date = observation.date;
  in.ticker = ticker;
  auto it = observation.tickers.find(ticker);
  if (it == observation.tickers.end()) raise(ErrorCode::InvalidArgument, ticker + " not in observation");
  const auto kinds = owned_kinds(role);
  if (kinds.empty()) {
    in.bar = it->second.bar;
    in.indicators = it->second.indicators;
    for (const auto& [k, v] : extra_indicators) in.indicators[k] = v;
    return in;
  }
  for (auto kind : kinds) {
    auto d = it->second.documents.find(kind);
    if (d != it->second.documents.end()) in.documents.insert(in.documents.end(), d->second.begin(), d->second.end());
  }
  std::sort(in.documents.begin(), in.documents.end(), [](const TextDocument& a, const TextDocument& b) {
    return std::tie(a.published, a.doc_id) < std::tie(b.published, b.doc_id);
  });
  return in;
}

AnalystResult analyst_step(AgentContext& ctx, const AgentProfile& profile, const PromptSet& prompts,
                           const AnalystInput& input) {
  const auto kinds = owned_kinds(profile.role);
  for (const auto& d : input.documents) {
    if (std::find(kinds.begin(), kinds.end(), d.kind) == kinds.end())
      raise(ErrorCode::InvalidArgument, profile.agent_id + " received a " + std::string(to_string(d.kind)) +
                                            " document outside its modality");
  }

  AnalystResult result;
  auto& msg = result.message;
  msg.from = profile.agent_id;
  msg.date = input.date;
  msg.ticker = input.ticker;
  msg.indicators = input.indicators;

  const bool textual = !kinds.empty();
  const bool empty = textual ? input.documents.empty() : (!input.bar && input.indicators.empty());
  if (empty) {
    msg.distilled_insight = "no signal";
    msg.no_signal = true;
    return result;
  }

  const std::string event_id =
      profile.agent_id + ":" + ctx.episode + ":" + input.date.iso() + ":" + input.ticker + ":insight";
  const double decay = decay_for(profile.role, ctx.decay);

  if (!textual && !ctx.data_analyst_uses_llm) {
    // Indicator-only analysts report computed values without a model call.
    msg.distilled_insight = input.ticker + " indicators on " + input.date.iso() + ": " +
                            render_indicators(input.indicators);
    if (auto m = input.indicators.find("momentum"); m != input.indicators.end())
      msg.sentiment = m->second > 0 ? Sentiment::Positive : m->second < 0 ? Sentiment::Negative : Sentiment::Neutral;
    auto retrieved = retrieve(ctx, profile.agent_id, msg.distilled_insight, input.date);
    for (const auto& r : retrieved) msg.cited_memory_ids.push_back(r.event.event_id);
    ctx.store->insert(make_event(ctx, event_id, profile.agent_id, msg.distilled_insight,
                                 ctx.default_importance, decay, input.date));
    msg.memory_event_id = event_id;
    return result;
  }

  std::string observed;
  for (const auto& d : input.documents)
    observed += "- [" + d.doc_id + "] (" + std::string(to_string(d.kind)) + ", published " + d.published.iso() +
                "): " + d.body + "\n";
  if (!input.indicators.empty()) {
    observed += "Indicators:\n";
    for (const auto& [k, v] : input.indicators) observed += "- " + k + ": " + format_number(v) + "\n";
  }

  const auto retrieved = retrieve(
      ctx, profile.agent_id, profile.general_config + "\n" + profile.profile_text + "\n" + input.ticker + "\n" + observed,
      input.date);

  std::string user;
  if (auto it = prompts.analyst_prompts.find(profile.agent_id); it != prompts.analyst_prompts.end())
    user += it->second + "\n";
  if (auto it = prompts.analyst_beliefs.find(profile.agent_id); it != prompts.analyst_beliefs.end())
    user += "Current investment belief for your aspect: " + it->second + "\n";
  user += "Trading date: " + input.date.iso() + "\nTicker: " + input.ticker + "\nObservations:\n" + observed;
  append_memories(user, retrieved);
  user += describe(find_schema(schema_id::kAnalystInsight));

  CompletionRequest req;
  req.role_tag = profile.agent_id + "@" + input.ticker;
  req.step_key = make_step_key(ctx.episode, input.date.iso(), phase::kAnalyze);
  req.system_prompt = profile.general_config + "\n\n" + profile.profile_text;
  req.user_prompt = user;
  req.output_schema = std::string(schema_id::kAnalystInsight);
  req.temperature = ctx.trading_temperature;
  req.max_retries = ctx.max_retries;
  req.seed = ctx.seed;
  auto out = ctx.gateway->complete(req);
  result.user_prompt = user;

  msg.distilled_insight = out.fields.at("insight").get<std::string>();
  if (out.fields.contains("sentiment"))
    msg.sentiment = *parse_sentiment(out.fields["sentiment"].get<std::string>());

  std::set<std::string> retrieved_ids;
  for (const auto& r : retrieved) retrieved_ids.insert(r.event.event_id);
  if (out.fields.contains("cited_memory_ids")) {
    for (const auto& id : out.fields["cited_memory_ids"]) {
      auto s = id.get<std::string>();
      if (retrieved_ids.count(s) &&
          std::find(msg.cited_memory_ids.begin(), msg.cited_memory_ids.end(), s) == msg.cited_memory_ids.end())
        msg.cited_memory_ids.push_back(s);
    }
  } else {
    msg.cited_memory_ids.assign(retrieved_ids.begin(), retrieved_ids.end());
  }

  const double importance =
      out.fields.contains("importance") ? out.fields["importance"].get<double>() : ctx.default_importance;
  ctx.store->insert(make_event(ctx, event_id, profile.agent_id,
                               input.date.iso() + " " + input.ticker + " [" + std::string(to_string(msg.sentiment)) +
                                   "] " + msg.distilled_insight,
                               importance, decay, input.date));
  msg.memory_event_id = event_id;
  return result;
}

ManagerResult manager_step(AgentContext& ctx, const AgentProfile& profile, const PromptSet& prompts,
                           std::span<const InsightMessage> insights, const RiskStatus& risk,
                           std::span<const std::string> universe, std::span<const std::string> analyst_ids,
                           TaskMode mode, double position_size, Date date) {
  if (mode == TaskMode::SingleStock && universe.size() != 1)
    raise(ErrorCode::ConfigError, "single-stock mode needs exactly one ticker");
  for (const auto& a : analyst_ids) {
    for (const auto& t : universe) {
      const bool found = std::any_of(insights.begin(), insights.end(), [&](const InsightMessage& m) {
        return m.from == a && m.ticker == t && m.date == date;
      });
      if (!found) raise(ErrorCode::MissingAnalystReport, a + " has not reported on " + t + " for " + date.iso());
    }
  }

  std::string insight_text;
  std::vector<std::string> known_ids;
  auto remember = [&](const std::string& id) {
    if (std::find(known_ids.begin(), known_ids.end(), id) == known_ids.end()) known_ids.push_back(id);
  };
  for (const auto& m : insights) {
    insight_text += "- [" + m.from + " | " + m.ticker + " | " + std::string(to_string(m.sentiment)) + "] " +
                    m.distilled_insight;
    if (!m.cited_memory_ids.empty()) insight_text += " (memories: " + join_ids(m.cited_memory_ids) + ")";
    insight_text += "\n";
    if (m.memory_event_id) remember(*m.memory_event_id);
    for (const auto& id : m.cited_memory_ids) remember(id);
  }

  const auto retrieved = retrieve(ctx, profile.agent_id,
                                  profile.general_config + "\n" + profile.profile_text + "\n" + insight_text, date);
  for (const auto& r : retrieved) remember(r.event.event_id);

  std::string universe_text;
  for (const auto& t : universe) universe_text += (universe_text.empty() ? "" : ", ") + t;

  std::string user = prompts.manager_prompt + "\n" + prompts.render_belief_block();
  if (risk.alert) user += std::string(kRiskAverseClause) + "\n";
  if (risk.cvar) user += "Risk status: CVaR of daily PnL to date = " + format_number(*risk.cvar) + "\n";
  user += "Trading date: " + date.iso() + "\nUniverse: " + universe_text + "\nAnalyst insights:\n" + insight_text;
  append_memories(user, retrieved);
  const auto schema =
      mode == TaskMode::SingleStock ? schema_id::kTradingDecision : schema_id::kPortfolioDecision;
  user += describe(find_schema(schema));

  CompletionRequest req;
  req.role_tag = profile.agent_id;
  req.step_key = make_step_key(ctx.episode, date.iso(), phase::kDecide);
  req.system_prompt = profile.general_config + "\n\n" + profile.profile_text;
  req.user_prompt = user;
  req.output_schema = std::string(schema);
  req.temperature = ctx.trading_temperature;
  req.max_retries = ctx.max_retries;
  req.seed = ctx.seed;
  if (mode == TaskMode::Portfolio) {
    std::vector<std::string> expected(universe.begin(), universe.end());
    req.extra_check = [expected](const json& j) -> std::optional<std::string> {
      const auto& actions = j.at("actions");
      for (const auto& t : expected)
        if (!actions.contains(t)) return "field 'actions' lacks ticker " + t;
      if (actions.size() != expected.size()) return "field 'actions' names tickers outside the universe";
      return std::nullopt;
    };
  }
  auto out = ctx.gateway->complete(req);

  ManagerResult result;
  result.user_prompt = user;
  auto& d = result.decision;
  d.date = date;
  if (mode == TaskMode::SingleStock) {
    const auto dir = *parse_direction(out.fields.at("action").get<std::string>());
    d.directions[universe.front()] = dir;
    d.weights = {sign_of(dir) * position_size};
  } else {
    for (const auto& t : universe) d.directions[t] = *parse_direction(out.fields.at("actions").at(t).get<std::string>());
  }
  if (out.fields.contains("reasoning")) d.reasoning = out.fields["reasoning"].get<std::string>();
  if (out.fields.contains("contributions"))
    d.contribution_notes = out.fields["contributions"].get<std::map<std::string, std::string>>();

  if (out.fields.contains("cited_memory_ids")) {
    for (const auto& id : out.fields["cited_memory_ids"]) {
      auto s = id.get<std::string>();
      if (std::find(known_ids.begin(), known_ids.end(), s) != known_ids.end() &&
          std::find(d.cited_memory_ids.begin(), d.cited_memory_ids.end(), s) == d.cited_memory_ids.end())
        d.cited_memory_ids.push_back(s);
    }
  } else {
    d.cited_memory_ids = known_ids;
  }
  std::erase_if(d.cited_memory_ids, [&](const std::string& id) { return !ctx.store->contains(id); });

  std::string content = date.iso() + " decision:";
  for (const auto& [t, dir] : d.directions) content += " " + t + "=" + std::string(to_string(dir));
  if (!d.reasoning.empty()) content += ". Reasoning: " + d.reasoning;
  for (const auto& [who, note] : d.contribution_notes) content += " | " + who + ": " + note;
  ctx.store->insert(make_event(ctx, profile.agent_id + ":" + ctx.episode + ":" + date.iso() + ":decision",
                               profile.agent_id, content, ctx.default_importance, ctx.decay.manager, date));
  return result;
}

Reflection reflect(AgentContext& ctx, const AgentProfile& profile, const PromptSet& prompts,
                   const TradingDecision& decision, double pnl, ReflectionTrigger trigger, Date realized_on) {
  std::string dirs;
  for (const auto& [t, dir] : decision.directions) dirs += (dirs.empty() ? "" : ", ") + t + "=" + std::string(to_string(dir));
  std::string user = prompts.manager_prompt + "\n" + prompts.render_belief_block() +
                     "Self-reflection request.\nTrading date: " + decision.date.iso() + "\nDecision: " + dirs +
                     "\nRealized PnL: " + format_number(pnl) + "\nTrigger: " + std::string(to_string(trigger)) +
                     "\nYour reasoning at the time: " + (decision.reasoning.empty() ? "(none)" : decision.reasoning) +
                     "\nReflect on what drove this outcome and what to watch for next.\n" +
                     describe(find_schema(schema_id::kReflection));
  CompletionRequest req;
  req.role_tag = profile.agent_id;
  req.step_key = make_step_key(ctx.episode, decision.date.iso(), phase::kReflect);
  req.system_prompt = profile.general_config + "\n\n" + profile.profile_text;
  req.user_prompt = user;
  req.output_schema = std::string(schema_id::kReflection);
  req.temperature = ctx.trading_temperature;
  req.max_retries = ctx.max_retries;
  req.seed = ctx.seed;
  auto out = ctx.gateway->complete(req);

  Reflection r{decision.date, out.fields.at("reflection").get<std::string>(), trigger};
  ctx.store->insert(make_event(ctx, profile.agent_id + ":" + ctx.episode + ":" + decision.date.iso() + ":reflection",
                               profile.agent_id,
                               decision.date.iso() + " reflection (" + std::string(to_string(trigger)) + "): " + r.text,
                               ctx.default_importance, ctx.decay.manager, realized_on));
  return r;
}

bool SignificanceRule::is_significant(std::span<const double> prior_pnl, double pnl) const {
  const std::size_t n = std::min(window, prior_pnl.size());
  if (n < std::max<std::size_t>(min_history, 2) || pnl == 0) return false;
  const auto recent = prior_pnl.subspan(prior_pnl.size() - n);
  double mean = 0;
  for (double x : recent) mean += x;
  mean /= static_cast<double>(n);
  double ss = 0;
  for (double x : recent) ss += (x - mean) * (x - mean);
  const double sd = std::sqrt(ss / static_cast<double>(n - 1));
  return std::abs(pnl) >= multiple * sd;
}

std::vector<Envelope> send_feedback(AgentContext& ctx, const TradingDecision& decision, double pnl,
                                    bool significant, std::span<const std::string> analyst_ids,
                                    Router& router, Date realized_on) {
  std::vector<Envelope> sent;
  if (!significant) return sent;

  std::set<std::string> boosted;
  for (const auto& id : decision.cited_memory_ids)
    if (boosted.insert(id).second) ctx.store->boost_access(id);

  std::string dirs;
  for (const auto& [t, dir] : decision.directions) dirs += (dirs.empty() ? "" : ", ") + t + "=" + std::string(to_string(dir));
  const std::string outcome = pnl > 0 ? "significant gain" : "significant loss";
  for (const auto& analyst : analyst_ids) {
    auto note = decision.contribution_notes.find(analyst);
    Envelope e;
    e.from = std::string(agent_id(AgentRole::Manager));
    e.to = analyst;
    e.kind = MessageKind::Feedback;
    e.date = decision.date;
    e.payload = "Feedback for " + decision.date.iso() + ": " + outcome + " (PnL " + format_number(pnl) +
                ") on decision " + dirs + ". Your contribution: " +
                (note == decision.contribution_notes.end() ? std::string("not assessed") : note->second) + ".";
    router.route(e);
    const auto role = parse_agent_role(analyst);
    ctx.store->insert(make_event(ctx, analyst + ":" + ctx.episode + ":" + decision.date.iso() + ":feedback", analyst,
                                 e.payload, ctx.default_importance,
                                 decay_for(role.value_or(AgentRole::NewsAnalyst), ctx.decay), realized_on));
    sent.push_back(std::move(e));
  }
  return sent;
}

}  // namespace fincon
