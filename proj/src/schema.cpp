#include "fincon/schema.hpp"

#include <algorithm>
#include <cmath>
#include <map>

#include "fincon/error.hpp"

namespace fincon {

using nlohmann::json;

bool is_aspect_key(std::string_view key) noexcept {
  return std::find(kAspectVocabulary.begin(), kAspectVocabulary.end(), key) != kAspectVocabulary.end();
}

namespace {

const std::vector<std::string> kDirections = {"long", "short", "neutral"};
const std::vector<std::string> kSentiments = {"positive", "negative", "neutral"};

std::map<std::string, OutputSchema, std::less<>> build_registry() {
  std::map<std::string, OutputSchema, std::less<>> r;
  auto add = [&](OutputSchema s) { r.emplace(s.id, std::move(s)); };
  add({std::string(schema_id::kAnalystInsight),
       {{"insight", FieldType::String, true, {}, {}, {}},
        {"sentiment", FieldType::Enum, false, kSentiments, {}, {}},
        {"importance", FieldType::Number, false, {}, 0.0, 1.0},
        {"cited_memory_ids", FieldType::StringArray, false, {}, {}, {}},
        {"reasoning", FieldType::String, false, {}, {}, {}}}});
  add({std::string(schema_id::kTradingDecision),
       {{"action", FieldType::Enum, true, kDirections, {}, {}},
        {"reasoning", FieldType::String, false, {}, {}, {}},
        {"contributions", FieldType::StringMap, false, {}, {}, {}},
        {"cited_memory_ids", FieldType::StringArray, false, {}, {}, {}}}});
  add({std::string(schema_id::kPortfolioDecision),
       {{"actions", FieldType::EnumMap, true, kDirections, {}, {}},
        {"reasoning", FieldType::String, false, {}, {}, {}},
        {"contributions", FieldType::StringMap, false, {}, {}, {}},
        {"cited_memory_ids", FieldType::StringArray, false, {}, {}, {}}}});
  add({std::string(schema_id::kReflection),
       {{"reflection", FieldType::String, true, {}, {}, {}}}});
  add({std::string(schema_id::kConceptInsights),
       {{"insights", FieldType::AspectMap, true, {}, {}, {}},
        {"reasoning", FieldType::String, false, {}, {}, {}}}});
  add({std::string(schema_id::kMetaPrompt),
       {{"meta_prompt", FieldType::String, true, {}, {}, {}},
        {"reasoning", FieldType::String, false, {}, {}, {}}}});
  add({std::string(schema_id::kBeliefUpdate),
       {{"beliefs", FieldType::AspectMap, true, {}, {}, {}},
        {"reasoning", FieldType::String, false, {}, {}, {}}}});
  return r;
}

const auto& registry() {
  static const auto r = build_registry();
  return r;
}

std::string join(const std::vector<std::string>& xs) {
  std::string out;
  for (const auto& x : xs) {
    if (!out.empty()) out += "|";
    out += x;
  }
  return out;
}

std::optional<std::string> check_field(const FieldSpec& f, const json& v) {
  const auto bad = [&](const std::string& what) { return "field '" + f.name + "' " + what; };
  switch (f.type) {
    case FieldType::String:
      if (!v.is_string()) return bad("must be a string");
      return std::nullopt;
    case FieldType::Number: {
      if (!v.is_number()) return bad("must be a number");
      const double x = v.get<double>();
      if (!std::isfinite(x)) return bad("must be finite");
      if (f.min && x < *f.min) return bad("is below " + std::to_string(*f.min));
      if (f.max && x > *f.max) return bad("is above " + std::to_string(*f.max));
      return std::nullopt;
    }
    case FieldType::Enum:
      if (!v.is_string()) return bad("must be a string");
      if (std::find(f.allowed.begin(), f.allowed.end(), v.get<std::string>()) == f.allowed.end())
        return bad("has value \"" + v.get<std::string>() + "\"; allowed values are " + join(f.allowed));
      return std::nullopt;
    case FieldType::StringArray:
      if (!v.is_array()) return bad("must be an array of strings");
      for (const auto& e : v)
        if (!e.is_string()) return bad("must contain only strings");
      return std::nullopt;
    case FieldType::EnumMap:
      if (!v.is_object() || v.empty()) return bad("must be a non-empty object");
      for (const auto& [k, e] : v.items()) {
        if (!e.is_string() ||
            std::find(f.allowed.begin(), f.allowed.end(), e.get<std::string>()) == f.allowed.end())
          return bad("entry '" + k + "' must be one of " + join(f.allowed));
      }
      return std::nullopt;
    case FieldType::StringMap:
      if (!v.is_object()) return bad("must be an object");
      for (const auto& [k, e] : v.items())
        if (!e.is_string()) return bad("entry '" + k + "' must be a string");
      return std::nullopt;
    case FieldType::AspectMap:
      if (!v.is_object()) return bad("must be an object");
      for (const auto& [k, e] : v.items()) {
        if (!is_aspect_key(k)) return bad("has unknown aspect key '" + k + "'");
        if (e.is_string()) continue;
        if (!e.is_array()) return bad("entry '" + k + "' must be a string or array of strings");
        for (const auto& s : e)
          if (!s.is_string()) return bad("entry '" + k + "' must contain only strings");
      }
      return std::nullopt;
  }
  return std::nullopt;
}

}  // namespace

const OutputSchema& find_schema(std::string_view id) {
  auto it = registry().find(id);
  if (it == registry().end()) raise(ErrorCode::ConfigError, "unknown output schema " + std::string(id));
  return it->second;
}

std::optional<std::string> validate(const OutputSchema& schema, const json& value) {
  if (!value.is_object()) return "response must be a JSON object";
  for (const auto& f : schema.fields) {
    auto it = value.find(f.name);
    if (it == value.end() || it->is_null()) {
      if (f.required) return "missing required field '" + f.name + "'";
      continue;
    }
    if (auto err = check_field(f, *it)) return err;
  }
  return std::nullopt;
}

std::string describe(const OutputSchema& schema) {
  std::string out = "Respond with a single JSON object with these fields:\n";
  for (const auto& f : schema.fields) {
    out += "- \"" + f.name + "\"";
    switch (f.type) {
      case FieldType::String: out += ": string"; break;
      case FieldType::Number: out += ": number"; break;
      case FieldType::Enum: out += ": one of " + join(f.allowed); break;
      case FieldType::StringArray: out += ": array of strings"; break;
      case FieldType::EnumMap: out += ": object mapping ticker to one of " + join(f.allowed); break;
      case FieldType::StringMap: out += ": object of strings"; break;
      case FieldType::AspectMap: {
        out += ": object keyed by any of ";
        std::string keys;
        for (auto k : kAspectVocabulary) {
          if (!keys.empty()) keys += ", ";
          keys += "'" + std::string(k) + "'";
        }
        out += keys;
        break;
      }
    }
    out += f.required ? " (required)\n" : " (optional)\n";
  }
  return out;
}

std::optional<json> extract_json_object(std::string_view raw) {
  auto try_parse = [](std::string_view s) -> std::optional<json> {
    auto j = json::parse(s, nullptr, false);
    if (j.is_discarded() || !j.is_object()) return std::nullopt;
    return j;
  };
  if (auto j = try_parse(raw)) return j;
  const auto first = raw.find('{');
  const auto last = raw.rfind('}');
  if (first == std::string_view::npos || last == std::string_view::npos || last < first) return std::nullopt;
  return try_parse(raw.substr(first, last - first + 1));
}

}  // namespace fincon
