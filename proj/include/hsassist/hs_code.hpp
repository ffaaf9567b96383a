// Copyright 2026 The hs-assist Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#pragma once

#include <algorithm>
#include <compare>
#include <functional>
#include <optional>
#include <string>
#include <string_view>

#include "hsassist/errors.hpp"

namespace hsassist {

enum class HsLevel { chapter = 2, heading = 4, subheading = 6 };

/// A Harmonized System code truncated to chapter (2), heading (4) or
/// subheading (6) digits. Codes nest by prefix.
class HsCode {
 public:
  HsCode() = default;

  /// Parses a 2/4/6 digit code; returns nullopt for anything else.
  static std::optional<HsCode> try_parse(std::string_view digits) {
    if (digits.size() != 2 && digits.size() != 4 && digits.size() != 6) return std::nullopt;
    if (!std::all_of(digits.begin(), digits.end(), [](char c) { return c >= '0' && c <= '9'; }))
      return std::nullopt;
    return HsCode(std::string(digits));
  }

  static HsCode parse(std::string_view digits) {
    auto code = try_parse(digits);
    if (!code) throw ValidationError("invalid HS code '" + std::string(digits) + "'");
    return *code;
  }

  static HsCode parse(std::string_view digits, HsLevel expected) {
    HsCode code = parse(digits);
    if (code.level() != expected)
      throw ValidationError("HS code '" + std::string(digits) + "' has " +
                            std::to_string(digits.size()) + " digits, expected " +
                            std::to_string(static_cast<int>(expected)));
    return code;
  }

  const std::string& digits() const noexcept { return digits_; }
  HsLevel level() const noexcept { return static_cast<HsLevel>(digits_.size()); }

  /// Truncates to a coarser level. Requesting a finer level than the code
  /// carries is an error.
  HsCode truncate(HsLevel level) const {
    auto n = static_cast<std::size_t>(level);
    if (n > digits_.size()) throw ValidationError("cannot refine HS code '" + digits_ + "'");
    return HsCode(digits_.substr(0, n));
  }

  HsCode chapter() const { return truncate(HsLevel::chapter); }
  HsCode heading() const { return truncate(HsLevel::heading); }

  bool is_prefix_of(const HsCode& other) const noexcept {
    return other.digits_.size() >= digits_.size() &&
           other.digits_.compare(0, digits_.size(), digits_) == 0;
  }

  friend bool operator==(const HsCode&, const HsCode&) = default;
  friend auto operator<=>(const HsCode&, const HsCode&) = default;

 private:
  explicit HsCode(std::string digits) : digits_(std::move(digits)) {}

  std::string digits_;
};

}  // namespace hsassist

template <>
struct std::hash<hsassist::HsCode> {
  std::size_t operator()(const hsassist::HsCode& code) const noexcept {
    return std::hash<std::string>{}(code.digits());
  }
};
