// protrack/location.hpp

// Copyright 2026 The protrack Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//  http://www.apache.org/licenses/LICENSE-2.0
//
// THIS CODE IS PROVIDED *AS IS* BASIS, WITHOUT WARRANTIES OR CONDITIONS OF ANY
// KIND, EITHER EXPRESS OR IMPLIED, INCLUDING WITHOUT LIMITATION ANY IMPLIED
// WARRANTIES OR CONDITIONS OF TITLE, FITNESS FOR A PARTICULAR PURPOSE,
// MERCHANTABLITY OR NON-INFRINGEMENT.
// See the Apache 2 License for the specific language governing permissions and
// limitations under the License.

#pragma once

#include <cctype>
#include <string>
#include <string_view>
#include <utility>

namespace protrack {

// Lowercase, collapse whitespace runs to one space, strip leading and
// trailing whitespace/punctuation. Idempotent.
inline std::string normalize_location_text(std::string_view text) {
  std::string collapsed;
  collapsed.reserve(text.size());
  bool pending_space = false;
  for (char raw : text) {
    auto c = static_cast<unsigned char>(raw);
    if (std::isspace(c)) {
      pending_space = !collapsed.empty();
      continue;
    }
    if (pending_space) collapsed.push_back(' ');
    pending_space = false;
    collapsed.push_back(static_cast<char>(std::tolower(c)));
  }
  auto strippable = [](char ch) {
    auto c = static_cast<unsigned char>(ch);
    return std::isspace(c) || std::ispunct(c);
  };
  std::size_t begin = 0;
  std::size_t end = collapsed.size();
  while (begin < end && strippable(collapsed[begin])) ++begin;
  while (end > begin && strippable(collapsed[end - 1])) --end;
  return collapsed.substr(begin, end - begin);
}

// One location slot: a text span, unknown ("?") or nonexistent ("-").
class LocationValue {
 public:
  enum class Kind { kSpan, kUnknown, kNonexistent };

  LocationValue() : kind_(Kind::kUnknown) {}

  static LocationValue span(std::string text) {
    return LocationValue(Kind::kSpan, std::move(text));
  }
  static LocationValue unknown() { return LocationValue(Kind::kUnknown, {}); }
  static LocationValue nonexistent() {
    return LocationValue(Kind::kNonexistent, {});
  }

  // Grid encoding: "-" nonexistent, "?" unknown, anything else verbatim.
  static LocationValue from_grid(std::string_view encoded) {
    if (encoded == "-") return nonexistent();
    if (encoded == "?") return unknown();
    return span(std::string(encoded));
  }

  // Model answer space: "none" nonexistent, "unknown" unknown, else a span.
  // Matching of the two keywords ignores case and surrounding whitespace.
  static LocationValue from_prediction(std::string_view answer) {
    const std::string key = normalize_location_text(answer);
    if (key == "none") return nonexistent();
    if (key == "unknown") return unknown();
    return span(std::string(answer));
  }

  Kind kind() const { return kind_; }
  bool is_span() const { return kind_ == Kind::kSpan; }
  bool is_unknown() const { return kind_ == Kind::kUnknown; }
  bool is_nonexistent() const { return kind_ == Kind::kNonexistent; }
  const std::string& text() const { return text_; }

  std::string to_grid() const {
    switch (kind_) {
      case Kind::kNonexistent:
        return "-";
      case Kind::kUnknown:
        return "?";
      case Kind::kSpan:
        break;
    }
    return text_;
  }

  // Answer-space rendering used as the extractive QA target.
  std::string to_answer() const {
    switch (kind_) {
      case Kind::kNonexistent:
        return "none";
      case Kind::kUnknown:
        return "unknown";
      case Kind::kSpan:
        break;
    }
    return text_;
  }

  // Comparison key. "?" matches only "?", "-" only "-", spans compare by
  // normalized text.
  std::string key() const {
    switch (kind_) {
      case Kind::kNonexistent:
        return "-";
      case Kind::kUnknown:
        return "?";
      case Kind::kSpan:
        break;
    }
    return "=" + normalize_location_text(text_);
  }

  bool same_place(const LocationValue& other) const {
    if (kind_ != other.kind_) return false;
    if (kind_ != Kind::kSpan) return true;
    return normalize_location_text(text_) ==
           normalize_location_text(other.text_);
  }

  // Exact field equality (kind and verbatim text).
  friend bool operator==(const LocationValue& a, const LocationValue& b) {
    return a.kind_ == b.kind_ && a.text_ == b.text_;
  }

 private:
  LocationValue(Kind kind, std::string text)
      : kind_(kind), text_(std::move(text)) {}

  Kind kind_;
  std::string text_;
};

}  // namespace protrack
