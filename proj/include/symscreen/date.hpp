// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 The symscreen Authors

#pragma once

#include <chrono>
#include <compare>
#include <string>
#include <string_view>

namespace symscreen {

/// Calendar date with day resolution, serialized as ISO-8601 (YYYY-MM-DD).
class Date {
 public:
  constexpr Date() = default;
  constexpr explicit Date(std::chrono::sys_days days) : days_(days) {}
  Date(int year, unsigned month, unsigned day);

  /// Throws ValidationError on anything but a valid YYYY-MM-DD.
  static Date parse(std::string_view iso);

  [[nodiscard]] std::string to_string() const;
  [[nodiscard]] constexpr std::chrono::sys_days days() const { return days_; }
  [[nodiscard]] std::chrono::year_month_day ymd() const { return std::chrono::year_month_day{days_}; }

  [[nodiscard]] Date plus_days(long n) const { return Date{days_ + std::chrono::days{n}}; }
  /// Calendar month arithmetic; the day is clamped to the target month's length.
  [[nodiscard]] Date minus_months(int months) const;

  friend constexpr auto operator<=>(const Date&, const Date&) = default;

 private:
  std::chrono::sys_days days_{};
};

/// Signed difference a - b in days.
long days_between(const Date& a, const Date& b);

/// Whole years elapsed from `birth` to `on`.
int age_in_years(const Date& birth, const Date& on);

}  // namespace symscreen
