#pragma once

#include <cstdint>
#include <map>
#include <mutex>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include <json.hpp>

#include "fincon/data_ingest.hpp"
#include "fincon/date.hpp"
#include "fincon/llm_gateway.hpp"
#include "fincon/memory.hpp"

namespace fincon {

enum class AgentRole : std::uint8_t {
  Manager,
  NewsAnalyst,
  Filing10kAnalyst,
  Filing10qAnalyst,
  EccAnalyst,
  DataAnalyst,
  SelectionAnalyst,
};

inline constexpr std::string_view kRiskControlId = "risk_control";

std::string_view agent_id(AgentRole role) noexcept;
std::optional<AgentRole> parse_agent_role(std::string_view id) noexcept;
bool is_analyst(AgentRole role) noexcept;

/// Document kinds an analyst reads. Data and selection analysts read prices only.
std::vector<DocKind> owned_kinds(AgentRole role);

/// Belief aspect an analyst is responsible for, if any.
std::optional<std::string_view> aspect_for(AgentRole role) noexcept;

enum class Direction : std::uint8_t { Long, Short, Neutral };
std::string_view to_string(Direction d) noexcept;
std::optional<Direction> parse_direction(std::string_view text) noexcept;
int sign_of(Direction d) noexcept;

enum class Sentiment : std::uint8_t { Positive, Negative, Neutral };
std::string_view to_string(Sentiment s) noexcept;
std::optional<Sentiment> parse_sentiment(std::string_view text) noexcept;

enum class ReflectionTrigger : std::uint8_t { CvarDrop, NegativePnl, Episodic };
std::string_view to_string(ReflectionTrigger t) noexcept;
std::optional<ReflectionTrigger> parse_reflection_trigger(std::string_view text) noexcept;

struct AgentProfile {
  std::string agent_id;
  AgentRole role = AgentRole::Manager;
  std::string profile_text;    // role assignment + duty description
  std::string general_config;  // task intro, targets, sectors, performance overview
};

AgentProfile default_profile(AgentRole role, std::span<const std::string> tickers,
                             const std::string& general_config);

using BeliefValue = std::variant<std::string, std::vector<std::string>>;
std::string render_belief(const BeliefValue& value);
nlohmann::json belief_to_json(const BeliefValue& value);
BeliefValue belief_from_json(const nlohmann::json& j);

/// Textual policy parameters: one prompt per analyst, the manager prompt, and
/// the per-aspect investment beliefs.
struct PromptSet {
  std::map<std::string, std::string> analyst_prompts;
  std::string manager_prompt;
  std::map<std::string, BeliefValue> belief_block;
  std::map<std::string, std::string> analyst_beliefs;  // propagated to targeted analysts

  [[nodiscard]] nlohmann::json to_json() const;
  static PromptSet from_json(const nlohmann::json& j);
  [[nodiscard]] std::string render_belief_block() const;
};

PromptSet default_prompt_set(std::span<const AgentRole> analysts);

struct InsightMessage {
  std::string from;
  Date date;
  std::string ticker;
  std::string distilled_insight;
  Sentiment sentiment = Sentiment::Neutral;
  std::map<std::string, double> indicators;
  std::vector<std::string> cited_memory_ids;
  std::optional<std::string> memory_event_id;  // the stored distilled insight
  bool no_signal = false;
};

struct TradingDecision {
  Date date;
  std::map<std::string, Direction> directions;
  std::vector<double> weights;  // universe order; single-stock: signed unit position
  std::string reasoning;
  std::map<std::string, std::string> contribution_notes;
  std::vector<std::string> cited_memory_ids;
};

/// Directions in universe order; tickers without a direction are neutral.
std::vector<Direction> directions_in_order(const TradingDecision& decision,
                                           std::span<const std::string> universe);

struct Reflection {
  Date date;
  std::string text;
  ReflectionTrigger trigger = ReflectionTrigger::NegativePnl;
};

enum class MessageKind : std::uint8_t { Insight, Decision, Feedback, BeliefUpdate };
std::string_view to_string(MessageKind kind) noexcept;

struct Envelope {
  std::string from;
  std::string to;
  MessageKind kind = MessageKind::Insight;
  Date date;
  std::string payload;
};

/// Two-level tree: analysts <-> manager <-> risk_control. Anything else is
/// rejected with IllegalRoute.
class Router {
public:
  explicit Router(std::vector<std::string> analyst_ids);

  [[nodiscard]] bool is_legal(std::string_view from, std::string_view to) const;
  void route(Envelope message);

  [[nodiscard]] std::vector<Envelope> delivered() const;
  [[nodiscard]] std::size_t count_on(Date date) const;
  [[nodiscard]] std::size_t count_of(MessageKind kind) const;
  [[nodiscard]] std::size_t total() const;
  void clear();

private:
  [[nodiscard]] bool is_analyst(std::string_view id) const;

  std::vector<std::string> analysts_;
  mutable std::mutex mutex_;
  std::vector<Envelope> delivered_;
};

/// Shared services for one episode.
struct AgentContext {
  LlmGateway* gateway = nullptr;
  MemoryStore* store = nullptr;
  const Embedder* embedder = nullptr;
  std::string episode;  // "1", "2", ... or "test"
  std::size_t top_k = kDefaultTopK;
  DecayTable decay;
  double default_importance = kDefaultInitialImportance;
  double trading_temperature = kTradingTemperature;
  int max_retries = kDefaultMaxRetries;
  bool data_analyst_uses_llm = false;
  std::optional<std::uint64_t> seed;
};

/// One analyst's view of one ticker on one day.
struct AnalystInput {
  Date date;
  std::string ticker;
  std::vector<TextDocument> documents;
  std::optional<PriceBar> bar;
  std::map<std::string, double> indicators;
};

AnalystInput slice_for(AgentRole role, const std::string& ticker, const Observation& observation,
                       const std::map<std::string, double>& extra_indicators = {});

struct AnalystResult {
  InsightMessage message;
  std::optional<std::string> user_prompt;  // set when the gateway was called
};

AnalystResult analyst_step(AgentContext& ctx, const AgentProfile& profile, const PromptSet& prompts,
                           const AnalystInput& input);

struct RiskStatus {
  bool alert = false;
  std::optional<double> cvar;
  std::optional<ReflectionTrigger> reason;
};

inline constexpr std::string_view kRiskAverseClause =
    "RISK ALERT: the risk-control component has flagged elevated market risk. Adopt a risk-averse "
    "attitude for today's trading actions, regardless of the prior risk status.";

enum class TaskMode : std::uint8_t { SingleStock, Portfolio };

struct ManagerResult {
  TradingDecision decision;
  std::string user_prompt;
};

ManagerResult manager_step(AgentContext& ctx, const AgentProfile& profile, const PromptSet& prompts,
                           std::span<const InsightMessage> insights, const RiskStatus& risk,
                           std::span<const std::string> universe, std::span<const std::string> analyst_ids,
                           TaskMode mode, double position_size, Date date);

/// Manager self-reflection after a risk trigger. Stored in the manager's
/// procedural memory dated `realized_on`.
Reflection reflect(AgentContext& ctx, const AgentProfile& profile, const PromptSet& prompts,
                   const TradingDecision& decision, double pnl, ReflectionTrigger trigger, Date realized_on);

/// |r| >= multiple * rolling sample std of the preceding `window` PnLs.
struct SignificanceRule {
  double multiple = 2.0;
  std::size_t window = 20;
  std::size_t min_history = 2;

  [[nodiscard]] bool is_significant(std::span<const double> prior_pnl, double pnl) const;
};

/// On significant days boosts every cited memory (+5 each) and sends one
/// feedback message to each analyst, stored in its procedural memory.
std::vector<Envelope> send_feedback(AgentContext& ctx, const TradingDecision& decision, double pnl,
                                    bool significant, std::span<const std::string> analyst_ids,
                                    Router& router, Date realized_on);

}  // namespace fincon
