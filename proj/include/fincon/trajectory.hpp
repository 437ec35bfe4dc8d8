#pragma once

#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "fincon/agents.hpp"
#include "fincon/date.hpp"

namespace fincon {

/// One trading day of an episode. The decision is taken at the close of
/// `date` and realized on the next trading day.
struct DayRecord {
  Date date;
  std::map<std::string, Direction> directions;
  std::vector<double> weights;    // universe order
  std::vector<double> positions;  // target share counts, universe order
  double pnl = 0;
  std::optional<double> cvar;
  bool alert = false;
  std::optional<ReflectionTrigger> trigger;
  std::optional<std::string> reflection;
  bool risk_averse = false;  // manager prompt carried the risk clause
  std::string reasoning;
  std::vector<std::string> insights;  // "<agent>@<ticker>: <text>"
  std::vector<std::string> cited_memory_ids;

  [[nodiscard]] nlohmann::json to_json() const;
  static DayRecord from_json(const nlohmann::json& j);
};

struct Trajectory {
  std::string tag;  // "1", "2", ... or "test"
  std::vector<std::string> universe;
  std::vector<DayRecord> records;
  bool complete = false;
  double objective = 0;

  [[nodiscard]] std::vector<double> pnl() const;
  /// Direction labels flattened per (date, ticker) in universe order.
  [[nodiscard]] std::vector<Direction> direction_sequence() const;
  [[nodiscard]] std::string to_jsonl() const;
  static Trajectory parse_jsonl(std::string_view text, std::string tag, std::vector<std::string> universe);
};

}  // namespace fincon
