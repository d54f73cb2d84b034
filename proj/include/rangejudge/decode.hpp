#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <span>
#include <string>
#include <vector>

#include "rangejudge/error.hpp"
#include "rangejudge/providers.hpp"
#include "rangejudge/ranges.hpp"

namespace rangejudge {

struct ContrastiveConfig {
  double lambda = 1.0;
  double temperature = 1.0;

  friend bool operator==(const ContrastiveConfig&, const ContrastiveConfig&) = default;
};

inline void validate(const ContrastiveConfig& cfg) {
  if (!std::isfinite(cfg.lambda) || cfg.lambda < 0.0) {
    throw ConfigError("contrastive lambda must be finite and >= 0");
  }
  if (!(cfg.temperature > 0.0) || !std::isfinite(cfg.temperature)) {
    throw ConfigError("contrastive temperature must be > 0");
  }
}

struct AdjustedScores {
  std::vector<std::string> labels;
  std::vector<double> values;
};

// log softmax(e / t) over the candidate set, max-subtracted. Inputs may be raw
// logits or log-probabilities: they differ by a constant, which cancels here.
inline std::vector<double> temperature_log_probs(std::span<const double> logits, double t) {
  if (!(t > 0.0)) throw ConfigError("temperature must be > 0");
  if (logits.empty()) return {};
  std::vector<double> scaled(logits.size());
  double m = -std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < logits.size(); ++i) {
    if (!std::isfinite(logits[i])) throw ProviderError("non-finite logit");
    scaled[i] = logits[i] / t;
    m = std::max(m, scaled[i]);
  }
  double sum = 0.0;
  for (double z : scaled) sum += std::exp(z - m);
  const double log_norm = m + std::log(sum);
  for (double& z : scaled) z -= log_norm;
  return scaled;
}

inline std::vector<double> temperature_log_probs(const TokenLogits& logits, double t) {
  return temperature_log_probs(std::span<const double>(logits.logits), t);
}

// values[i] = log p_main(i) - lambda * log p_asst(i), with the main model at
// temperature 1 and the assistant at cfg.temperature, both renormalized over
// the candidate labels.
inline AdjustedScores contrastive_adjust(const TokenLogits& main, const TokenLogits& asst,
                                         const ContrastiveConfig& cfg) {
  validate(cfg);
  if (main.labels != asst.labels) {
    throw ProviderError("main and assistant label sets differ");
  }
  const auto lp_main = temperature_log_probs(main, 1.0);
  const auto lp_asst = temperature_log_probs(asst, cfg.temperature);
  AdjustedScores out;
  out.labels = main.labels;
  out.values.resize(lp_main.size());
  for (std::size_t i = 0; i < lp_main.size(); ++i) {
    out.values[i] = lp_main[i] - cfg.lambda * lp_asst[i];
  }
  return out;
}

// Index of the maximum; ties go to the lowest index.
inline std::size_t argmax_lowest(std::span<const double> values) {
  std::size_t best = 0;
  for (std::size_t i = 1; i < values.size(); ++i) {
    if (values[i] > values[best]) best = i;
  }
  return best;
}

inline JudgeScore select_score(const AdjustedScores& adj, const ScoreRange& range) {
  if (adj.labels != candidate_labels(range) || adj.values.size() != adj.labels.size()) {
    throw DataError("adjusted scores do not match the labels of range " + range.str());
  }
  const auto best = argmax_lowest(adj.values);
  return {range.min() + static_cast<int>(best), Provenance::parsed};
}

enum class GreedyMode { text, restricted };

inline JudgeScore judge_greedy(Provider& provider, std::string_view prompt,
                               const ScoreRange& range, GreedyMode mode) {
  if (mode == GreedyMode::text) return parse_score(provider.complete(prompt), range);
  const auto labels = candidate_labels(range);
  const auto logits = first_token_logits(provider, prompt, labels);
  return select_score({labels, temperature_log_probs(logits, 1.0)}, range);
}

inline JudgeScore judge_contrastive(Provider& main, Provider& asst, std::string_view prompt,
                                    const ScoreRange& range, const ContrastiveConfig& cfg) {
  const auto labels = candidate_labels(range);
  const auto m = first_token_logits(main, prompt, labels);
  const auto a = first_token_logits(asst, prompt, labels);
  return select_score(contrastive_adjust(m, a, cfg), range);
}

}  // namespace rangejudge
