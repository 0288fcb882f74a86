// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 The symscreen Authors

#include "symscreen/date.hpp"

#include <cstdio>

#include "symscreen/error.hpp"

namespace symscreen {

using namespace std::chrono;

Date::Date(int year, unsigned month, unsigned day) {
  const year_month_day ymd{std::chrono::year{year}, std::chrono::month{month}, std::chrono::day{day}};
  if (!ymd.ok()) {
    throw ValidationError("invalid calendar date");
  }
  days_ = sys_days{ymd};
}

Date Date::parse(std::string_view iso) {
  auto digits = [&](std::size_t pos, std::size_t n) {
    int v = 0;
    for (std::size_t i = pos; i < pos + n; ++i) {
      if (iso[i] < '0' || iso[i] > '9') {
        throw ValidationError("invalid ISO date '" + std::string(iso) + "'");
      }
      v = v * 10 + (iso[i] - '0');
    }
    return v;
  };
  if (iso.size() != 10 || iso[4] != '-' || iso[7] != '-') {
    throw ValidationError("invalid ISO date '" + std::string(iso) + "'");
  }
  const int y = digits(0, 4);
  const int m = digits(5, 2);
  const int d = digits(8, 2);
  const year_month_day ymd{std::chrono::year{y}, std::chrono::month{static_cast<unsigned>(m)},
                           std::chrono::day{static_cast<unsigned>(d)}};
  if (!ymd.ok()) {
    throw ValidationError("invalid ISO date '" + std::string(iso) + "'");
  }
  return Date{sys_days{ymd}};
}

std::string Date::to_string() const {
  const auto d = ymd();
  char buf[16];
  std::snprintf(buf, sizeof buf, "%04d-%02u-%02u", static_cast<int>(d.year()), static_cast<unsigned>(d.month()),
                static_cast<unsigned>(d.day()));
  return buf;
}

Date Date::minus_months(int months) const {
  const auto d = ymd();
  const year_month ym = year_month{d.year(), d.month()} - std::chrono::months{months};
  const auto last = year_month_day_last{ym.year(), month_day_last{ym.month()}}.day();
  const auto day = d.day() > last ? last : d.day();
  return Date{sys_days{ym / day}};
}

long days_between(const Date& a, const Date& b) { return (a.days() - b.days()).count(); }

int age_in_years(const Date& birth, const Date& on) {
  const auto b = birth.ymd();
  const auto o = on.ymd();
  int age = static_cast<int>(o.year()) - static_cast<int>(b.year());
  if (month_day{o.month(), o.day()} < month_day{b.month(), b.day()}) {
    --age;
  }
  return age;
}

}  // namespace symscreen
