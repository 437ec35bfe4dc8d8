#pragma once

#include <array>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

namespace fincon {

/// Keys allowed in belief blocks and conceptualized insights.
inline constexpr std::array<std::string_view, 6> kAspectVocabulary = {
    "historical momentum", "news insights", "Form 10-Q", "Form 10-K", "ECC", "other aspects"};

bool is_aspect_key(std::string_view key) noexcept;

enum class FieldType {
  String,
  Number,
  Enum,         // string drawn from `allowed`
  StringArray,
  EnumMap,      // object whose values are drawn from `allowed`
  StringMap,    // object of string values
  AspectMap,    // object keyed by kAspectVocabulary; values string or array of strings
};

struct FieldSpec {
  std::string name;
  FieldType type = FieldType::String;
  bool required = true;
  std::vector<std::string> allowed;
  std::optional<double> min;
  std::optional<double> max;
};

struct OutputSchema {
  std::string id;
  std::vector<FieldSpec> fields;
};

namespace schema_id {
inline constexpr std::string_view kAnalystInsight = "analyst_insight";
inline constexpr std::string_view kTradingDecision = "trading_decision";
inline constexpr std::string_view kPortfolioDecision = "portfolio_decision";
inline constexpr std::string_view kReflection = "reflection";
inline constexpr std::string_view kConceptInsights = "concept_insights";
inline constexpr std::string_view kMetaPrompt = "meta_prompt";
inline constexpr std::string_view kBeliefUpdate = "belief_update";
}  // namespace schema_id

/// Registered schema by id; throws ConfigError for unknown ids.
const OutputSchema& find_schema(std::string_view id);

/// Empty on success, otherwise a one-line description of the first violation.
std::optional<std::string> validate(const OutputSchema& schema, const nlohmann::json& value);

/// Human-readable description of the expected JSON shape, for prompts.
std::string describe(const OutputSchema& schema);

/// Pulls a JSON object out of raw model text (bare, fenced, or embedded).
std::optional<nlohmann::json> extract_json_object(std::string_view raw);

}  // namespace fincon
