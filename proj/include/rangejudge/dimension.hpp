#pragma once

#include <array>
#include <string>
#include <string_view>

#include "rangejudge/error.hpp"

namespace rangejudge {

enum class Dimension { coherence, relevance, consistency };

inline constexpr std::array<Dimension, 3> kAllDimensions = {
    Dimension::coherence, Dimension::relevance, Dimension::consistency};

inline std::string_view to_string(Dimension d) {
  switch (d) {
    case Dimension::coherence: return "coherence";
    case Dimension::relevance: return "relevance";
    case Dimension::consistency: return "consistency";
  }
  return "?";
}

inline Dimension parse_dimension(std::string_view name) {
  for (auto d : kAllDimensions) {
    if (to_string(d) == name) return d;
  }
  throw ConfigError("unknown dimension '" + std::string(name) +
                    "' (expected coherence, relevance or consistency)");
}

}  // namespace rangejudge
