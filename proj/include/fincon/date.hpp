#pragma once

#include <chrono>
#include <compare>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace fincon {

/// Calendar date with day resolution. Serialized as ISO-8601 `YYYY-MM-DD`.
class Date {
public:
  constexpr Date() = default;
  constexpr explicit Date(std::chrono::sys_days days) : days_(days) {}
  Date(int year, unsigned month, unsigned day);

  /// Strict `YYYY-MM-DD` parse; nullopt on anything else.
  static std::optional<Date> parse(std::string_view text);

  [[nodiscard]] std::string iso() const;
  [[nodiscard]] constexpr std::chrono::sys_days days() const { return days_; }
  [[nodiscard]] Date plus_days(int n) const { return Date(days_ + std::chrono::days(n)); }
  [[nodiscard]] long days_until(Date later) const { return (later.days_ - days_).count(); }

  friend constexpr auto operator<=>(const Date&, const Date&) = default;

private:
  std::chrono::sys_days days_{};
};

/// Sorted set of trading dates used to count elapsed trading days.
class TradingCalendar {
public:
  TradingCalendar() = default;
  explicit TradingCalendar(std::vector<Date> dates);

  [[nodiscard]] bool empty() const { return dates_.empty(); }
  [[nodiscard]] const std::vector<Date>& dates() const { return dates_; }
  [[nodiscard]] bool contains(Date d) const;

  // Trading days in (from, to]. Falls back to calendar days when empty.
  [[nodiscard]] long trading_days_between(Date from, Date to) const;

  // First trading date >= d, if any.
  [[nodiscard]] std::optional<Date> on_or_after(Date d) const;
  [[nodiscard]] std::optional<Date> next(Date d) const;

private:
  std::vector<Date> dates_;
};

}  // namespace fincon
