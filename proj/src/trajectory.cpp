#include "fincon/trajectory.hpp"

#include "fincon/error.hpp"

namespace fincon {

using nlohmann::json;

json DayRecord::to_json() const {
  json dirs = json::object();
  for (const auto& [t, d] : directions) dirs[t] = std::string(to_string(d));
  json j = {{"date", date.iso()},
            {"directions", dirs},
            {"weights", weights},
            {"positions", positions},
            {"pnl", pnl},
            {"cvar", cvar ? json(*cvar) : json(nullptr)},
            {"alert", alert},
            {"trigger", trigger ? json(std::string(to_string(*trigger))) : json(nullptr)},
            {"reflection", reflection ? json(*reflection) : json(nullptr)},
            {"risk_averse", risk_averse},
            {"reasoning", reasoning},
            {"insights", insights},
            {"cited_memory_ids", cited_memory_ids}};
  return j;
}

DayRecord DayRecord::from_json(const json& j) {
  DayRecord r;
  auto d = Date::parse(j.at("date").get<std::string>());
  if (!d) raise(ErrorCode::SchemaError, "bad trajectory date");
  r.date = *d;
  for (const auto& [t, v] : j.at("directions").items()) {
    auto dir = parse_direction(v.get<std::string>());
    if (!dir) raise(ErrorCode::SchemaError, "bad direction for " + t);
    r.directions[t] = *dir;
  }
  r.weights = j.at("weights").get<std::vector<double>>();
  r.positions = j.value("positions", std::vector<double>{});
  r.pnl = j.at("pnl").get<double>();
  if (j.contains("cvar") && !j["cvar"].is_null()) r.cvar = j["cvar"].get<double>();
  r.alert = j.value("alert", false);
  if (j.contains("trigger") && !j["trigger"].is_null())
    r.trigger = parse_reflection_trigger(j["trigger"].get<std::string>());
  if (j.contains("reflection") && !j["reflection"].is_null()) r.reflection = j["reflection"].get<std::string>();
  r.risk_averse = j.value("risk_averse", false);
  r.reasoning = j.value("reasoning", std::string());
  r.insights = j.value("insights", std::vector<std::string>{});
  r.cited_memory_ids = j.value("cited_memory_ids", std::vector<std::string>{});
  return r;
}

std::vector<double> Trajectory::pnl() const {
  std::vector<double> out;
  out.reserve(records.size());
  for (const auto& r : records) out.push_back(r.pnl);
  return out;
}

std::vector<Direction> Trajectory::direction_sequence() const {
  std::vector<Direction> out;
  for (const auto& r : records) {
    for (const auto& t : universe) {
      auto it = r.directions.find(t);
      out.push_back(it == r.directions.end() ? Direction::Neutral : it->second);
    }
  }
  return out;
}

std::string Trajectory::to_jsonl() const {
  std::string out;
  for (const auto& r : records) out += r.to_json().dump() + "\n";
  return out;
}

Trajectory Trajectory::parse_jsonl(std::string_view text, std::string tag, std::vector<std::string> universe) {
  Trajectory t;
  t.tag = std::move(tag);
  t.universe = std::move(universe);
  std::size_t row = 0;
  std::size_t pos = 0;
  while (pos < text.size()) {
    auto nl = text.find('\n', pos);
    auto line = text.substr(pos, nl == std::string_view::npos ? std::string_view::npos : nl - pos);
    pos = nl == std::string_view::npos ? text.size() : nl + 1;
    ++row;
    if (line.find_first_not_of(" \t\r") == std::string_view::npos) continue;
    try {
      t.records.push_back(DayRecord::from_json(json::parse(line)));
    } catch (const json::exception& e) {
      throw SchemaError(row, "record", e.what());
    }
  }
  t.complete = true;
  return t;
}

}  // namespace fincon
