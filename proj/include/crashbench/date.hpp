// Copyright 2026 The Crashbench Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      https://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#ifndef CRASHBENCH_DATE_HPP_
#define CRASHBENCH_DATE_HPP_

#include <chrono>
#include <compare>
#include <string>
#include <string_view>

namespace crashbench {

// A UTC calendar date. Intra-day ordering is intentionally not modeled.
class Date {
 public:
  Date() = default;
  Date(int year, unsigned month, unsigned day);
  explicit Date(std::chrono::sys_days days) : days_(days) {}

  // Accepts YYYY-MM-DD, or a full ISO-8601 timestamp with an optional
  // Z / +HH:MM / -HH:MM suffix; timestamps are shifted to UTC before the
  // time of day is dropped. Throws MalformedDate.
  static Date parse(std::string_view text);

  std::string iso() const;  // YYYY-MM-DD

  int year() const;
  unsigned month() const;
  unsigned day() const;

  // Months since year 0; used for inclusive month-span arithmetic.
  long month_index() const { return year() * 12L + (month() - 1); }

  std::chrono::sys_days sys_days() const { return days_; }

  friend long days_between(const Date& from, const Date& to) {
    return (to.days_ - from.days_).count();
  }

  friend auto operator<=>(const Date&, const Date&) = default;
  friend bool operator==(const Date&, const Date&) = default;

 private:
  std::chrono::sys_days days_{};
};

}  // namespace crashbench

#endif  // CRASHBENCH_DATE_HPP_
