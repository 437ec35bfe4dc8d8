#include "fincon/date.hpp"

#include <algorithm>
#include <cstdio>

namespace fincon {

namespace chr = std::chrono;

Date::Date(int year, unsigned month, unsigned day)
    : days_(chr::sys_days(chr::year{year} / chr::month{month} / chr::day{day})) {}

std::optional<Date> Date::parse(std::string_view text) {
  if (text.size() != 10 || text[4] != '-' || text[7] != '-') return std::nullopt;
  auto digits = [&](std::size_t pos, std::size_t len, int& out) {
    out = 0;
    for (std::size_t i = pos; i < pos + len; ++i) {
      if (text[i] < '0' || text[i] > '9') return false;
      out = out * 10 + (text[i] - '0');
    }
    return true;
  };
  int y = 0, m = 0, d = 0;
  if (!digits(0, 4, y) || !digits(5, 2, m) || !digits(8, 2, d)) return std::nullopt;
  const chr::year_month_day ymd{chr::year{y}, chr::month{static_cast<unsigned>(m)},
                                chr::day{static_cast<unsigned>(d)}};
  if (!ymd.ok()) return std::nullopt;
  return Date(chr::sys_days(ymd));
}

std::string Date::iso() const {
  const chr::year_month_day ymd{days_};
  char buf[16];
  std::snprintf(buf, sizeof buf, "%04d-%02u-%02u", static_cast<int>(ymd.year()),
                static_cast<unsigned>(ymd.month()), static_cast<unsigned>(ymd.day()));
  return buf;
}

TradingCalendar::TradingCalendar(std::vector<Date> dates) : dates_(std::move(dates)) {
  std::sort(dates_.begin(), dates_.end());
  dates_.erase(std::unique(dates_.begin(), dates_.end()), dates_.end());
}

bool TradingCalendar::contains(Date d) const {
  return std::binary_search(dates_.begin(), dates_.end(), d);
}

long TradingCalendar::trading_days_between(Date from, Date to) const {
  if (dates_.empty()) return from.days_until(to);
  const auto count_le = [&](Date d) {
    return static_cast<long>(std::upper_bound(dates_.begin(), dates_.end(), d) - dates_.begin());
  };
  return count_le(to) - count_le(from);
}

std::optional<Date> TradingCalendar::on_or_after(Date d) const {
  auto it = std::lower_bound(dates_.begin(), dates_.end(), d);
  if (it == dates_.end()) return std::nullopt;
  return *it;
}

std::optional<Date> TradingCalendar::next(Date d) const {
  auto it = std::upper_bound(dates_.begin(), dates_.end(), d);
  if (it == dates_.end()) return std::nullopt;
  return *it;
}

}  // namespace fincon
