#pragma once

#include <cctype>
#include <charconv>
#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

#include "rangejudge/error.hpp"

namespace rangejudge {

// Inclusive integer Likert window [min, max].
class ScoreRange {
 public:
  ScoreRange(int min, int max) : min_(min), max_(max) {
    if (max <= min) {
      throw ConfigError("score range requires max > min, got " + std::to_string(min) + "-" +
                        std::to_string(max));
    }
  }

  int min() const { return min_; }
  int max() const { return max_; }
  int width() const { return max_ - min_ + 1; }
  bool contains(int v) const { return v >= min_ && v <= max_; }
  std::string str() const { return std::to_string(min_) + "-" + std::to_string(max_); }

  friend bool operator==(const ScoreRange&, const ScoreRange&) = default;

 private:
  int min_;
  int max_;
};

// Parses "MIN-MAX", e.g. "2-6". Negative bounds are not supported.
inline ScoreRange parse_range(std::string_view text) {
  const auto dash = text.find('-');
  if (dash == std::string_view::npos || dash == 0) {
    throw ConfigError("range must look like MIN-MAX, got '" + std::string(text) + "'");
  }
  auto to_int = [&](std::string_view part) {
    int v = 0;
    auto [ptr, ec] = std::from_chars(part.data(), part.data() + part.size(), v);
    if (ec != std::errc{} || ptr != part.data() + part.size()) {
      throw ConfigError("range must look like MIN-MAX, got '" + std::string(text) + "'");
    }
    return v;
  };
  return ScoreRange(to_int(text.substr(0, dash)), to_int(text.substr(dash + 1)));
}

enum class Provenance { parsed, clamped_high, clamped_low, fallback_min };

inline const char* to_string(Provenance p) {
  switch (p) {
    case Provenance::parsed: return "parsed";
    case Provenance::clamped_high: return "clamped_high";
    case Provenance::clamped_low: return "clamped_low";
    case Provenance::fallback_min: return "fallback_min";
  }
  return "?";
}

struct JudgeScore {
  int value;
  Provenance provenance;
};

// Decimal label for every integer in the range, ascending.
inline std::vector<std::string> candidate_labels(const ScoreRange& range) {
  std::vector<std::string> labels;
  labels.reserve(static_cast<std::size_t>(range.width()));
  for (int v = range.min(); v <= range.max(); ++v) labels.push_back(std::to_string(v));
  return labels;
}

// Total: every string maps to an in-range score. The first run of ASCII
// digits (with an optional directly preceding '-') is the judge's answer;
// no digits at all falls back to the lowest score, above-range clamps to the
// highest, below-range clamps to the lowest.
inline JudgeScore parse_score(std::string_view text, const ScoreRange& range) {
  std::size_t i = 0;
  while (i < text.size() && !std::isdigit(static_cast<unsigned char>(text[i]))) ++i;
  if (i == text.size()) return {range.min(), Provenance::fallback_min};

  const bool negative = i > 0 && text[i - 1] == '-';
  std::size_t end = i;
  while (end < text.size() && std::isdigit(static_cast<unsigned char>(text[end]))) ++end;

  // Saturate long digit runs instead of overflowing.
  std::int64_t magnitude = 0;
  for (std::size_t k = i; k < end; ++k) {
    magnitude = magnitude * 10 + (text[k] - '0');
    if (magnitude > (std::int64_t{1} << 40)) break;
  }
  const std::int64_t parsed = negative ? -magnitude : magnitude;

  if (parsed > range.max()) return {range.max(), Provenance::clamped_high};
  if (parsed < range.min()) return {range.min(), Provenance::clamped_low};
  return {static_cast<int>(parsed), Provenance::parsed};
}

}  // namespace rangejudge
