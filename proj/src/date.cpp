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

#include "crashbench/date.hpp"

#include <cctype>
#include <cstdio>
#include <string>

#include "crashbench/error.hpp"

namespace crashbench {
namespace {

bool read_digits(std::string_view text, std::size_t& pos, std::size_t count,
                 int& out) {
  if (pos + count > text.size()) return false;
  int value = 0;
  for (std::size_t i = 0; i < count; ++i) {
    const char c = text[pos + i];
    if (!std::isdigit(static_cast<unsigned char>(c))) return false;
    value = value * 10 + (c - '0');
  }
  pos += count;
  out = value;
  return true;
}

bool expect(std::string_view text, std::size_t& pos, char c) {
  if (pos >= text.size() || text[pos] != c) return false;
  ++pos;
  return true;
}

}  // namespace

Date::Date(int year, unsigned month, unsigned day) {
  const std::chrono::year_month_day ymd{std::chrono::year{year},
                                        std::chrono::month{month},
                                        std::chrono::day{day}};
  if (!ymd.ok()) {
    throw MalformedDate(std::to_string(year) + "-" + std::to_string(month) +
                        "-" + std::to_string(day));
  }
  days_ = std::chrono::sys_days{ymd};
}

Date Date::parse(std::string_view text) {
  const std::string original{text};
  std::size_t pos = 0;
  int y = 0, m = 0, d = 0;
  if (!read_digits(text, pos, 4, y) || !expect(text, pos, '-') ||
      !read_digits(text, pos, 2, m) || !expect(text, pos, '-') ||
      !read_digits(text, pos, 2, d)) {
    throw MalformedDate(original);
  }
  const std::chrono::year_month_day ymd{std::chrono::year{y},
                                        std::chrono::month{unsigned(m)},
                                        std::chrono::day{unsigned(d)}};
  if (!ymd.ok()) throw MalformedDate(original);
  std::chrono::sys_days days{ymd};
  if (pos == text.size()) return Date(days);

  if (text[pos] != 'T' && text[pos] != ' ') throw MalformedDate(original);
  ++pos;
  int hh = 0, mm = 0, ss = 0;
  if (!read_digits(text, pos, 2, hh) || !expect(text, pos, ':') ||
      !read_digits(text, pos, 2, mm)) {
    throw MalformedDate(original);
  }
  if (pos < text.size() && text[pos] == ':') {
    ++pos;
    if (!read_digits(text, pos, 2, ss)) throw MalformedDate(original);
    if (pos < text.size() && text[pos] == '.') {
      ++pos;
      const std::size_t start = pos;
      while (pos < text.size() &&
             std::isdigit(static_cast<unsigned char>(text[pos]))) {
        ++pos;
      }
      if (pos == start) throw MalformedDate(original);
    }
  }
  if (hh > 23 || mm > 59 || ss > 60) throw MalformedDate(original);

  long offset_minutes = 0;
  if (pos < text.size()) {
    const char sign = text[pos];
    if (sign == 'Z' || sign == 'z') {
      ++pos;
    } else if (sign == '+' || sign == '-') {
      ++pos;
      int oh = 0, om = 0;
      if (!read_digits(text, pos, 2, oh)) throw MalformedDate(original);
      if (pos < text.size() && text[pos] == ':') ++pos;
      if (!read_digits(text, pos, 2, om)) throw MalformedDate(original);
      if (oh > 23 || om > 59) throw MalformedDate(original);
      offset_minutes = (oh * 60L + om) * (sign == '+' ? 1 : -1);
    } else {
      throw MalformedDate(original);
    }
  }
  if (pos != text.size()) throw MalformedDate(original);

  const long local_minutes = hh * 60L + mm;
  const long utc_minutes = local_minutes - offset_minutes;
  long shift = 0;
  if (utc_minutes < 0) shift = -1;
  if (utc_minutes >= 24 * 60) shift = 1;
  return Date(days + std::chrono::days{shift});
}

std::string Date::iso() const {
  char buf[16];
  std::snprintf(buf, sizeof buf, "%04d-%02u-%02u", year(), month(), day());
  return buf;
}

int Date::year() const {
  return int(std::chrono::year_month_day{days_}.year());
}

unsigned Date::month() const {
  return unsigned(std::chrono::year_month_day{days_}.month());
}

unsigned Date::day() const {
  return unsigned(std::chrono::year_month_day{days_}.day());
}

}  // namespace crashbench
