#pragma once

#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "rangejudge/error.hpp"
#include "rangejudge/providers.hpp"
#include "rangejudge/ranges.hpp"

namespace rangejudge {

// A correlation coefficient. `degenerate` marks a constant input, for which
// the value is reported as 0.
struct Coefficient {
  double value = 0.0;
  bool degenerate = false;
};

inline constexpr const char* kKendallVariant = "tau-b";

namespace detail {

inline void check_pair(std::span<const double> xs, std::span<const double> ys) {
  if (xs.size() != ys.size()) throw std::invalid_argument("correlation: length mismatch");
  if (xs.size() < 2) throw std::invalid_argument("correlation: need at least 2 items");
}

inline double clamp_unit(double r) { return std::clamp(r, -1.0, 1.0); }

}  // namespace detail

// Sample Pearson coefficient. Values are first shifted by the first element,
// which is exact for integer-valued data, so adding a constant to either
// vector leaves the result bit-identical.
inline Coefficient pearson(std::span<const double> xs, std::span<const double> ys) {
  detail::check_pair(xs, ys);
  const std::size_t n = xs.size();
  std::vector<double> dx(n), dy(n);
  for (std::size_t i = 0; i < n; ++i) {
    dx[i] = xs[i] - xs[0];
    dy[i] = ys[i] - ys[0];
  }
  const double mx = std::accumulate(dx.begin(), dx.end(), 0.0) / static_cast<double>(n);
  const double my = std::accumulate(dy.begin(), dy.end(), 0.0) / static_cast<double>(n);
  double sxx = 0, syy = 0, sxy = 0;
  for (std::size_t i = 0; i < n; ++i) {
    const double a = dx[i] - mx, b = dy[i] - my;
    sxx += a * a;
    syy += b * b;
    sxy += a * b;
  }
  const bool constant_x = std::all_of(dx.begin(), dx.end(), [](double v) { return v == 0.0; });
  const bool constant_y = std::all_of(dy.begin(), dy.end(), [](double v) { return v == 0.0; });
  if (constant_x || constant_y || sxx == 0.0 || syy == 0.0) return {0.0, true};
  return {detail::clamp_unit(sxy / std::sqrt(sxx * syy)), false};
}

// 1-based fractional ranks; tied values share the mean of their positions.
inline std::vector<double> average_ranks(std::span<const double> xs) {
  std::vector<std::size_t> idx(xs.size());
  std::iota(idx.begin(), idx.end(), 0);
  std::stable_sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) { return xs[a] < xs[b]; });
  std::vector<double> ranks(xs.size());
  std::size_t i = 0;
  while (i < idx.size()) {
    std::size_t j = i + 1;
    while (j < idx.size() && xs[idx[j]] == xs[idx[i]]) ++j;
    const double rank = (static_cast<double>(i + 1) + static_cast<double>(j)) / 2.0;
    for (std::size_t k = i; k < j; ++k) ranks[idx[k]] = rank;
    i = j;
  }
  return ranks;
}

inline Coefficient spearman(std::span<const double> xs, std::span<const double> ys) {
  detail::check_pair(xs, ys);
  const auto rx = average_ranks(xs);
  const auto ry = average_ranks(ys);
  return pearson(rx, ry);
}

// Kendall tau-b by pair enumeration:
//   (C - D) / sqrt((n0 - n1) * (n0 - n2))
// with n1, n2 the pairs tied in x and in y respectively.
inline Coefficient kendall(std::span<const double> xs, std::span<const double> ys) {
  detail::check_pair(xs, ys);
  const std::size_t n = xs.size();
  long long concordant = 0, discordant = 0, tied_x = 0, tied_y = 0;
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = i + 1; j < n; ++j) {
      const bool tx = xs[i] == xs[j];
      const bool ty = ys[i] == ys[j];
      if (tx) ++tied_x;
      if (ty) ++tied_y;
      if (tx || ty) continue;
      if ((xs[i] < xs[j]) == (ys[i] < ys[j])) {
        ++concordant;
      } else {
        ++discordant;
      }
    }
  }
  const long long n0 = static_cast<long long>(n * (n - 1) / 2);
  if (tied_x == n0 || tied_y == n0) return {0.0, true};
  const double denom = std::sqrt(static_cast<double>(n0 - tied_x) * static_cast<double>(n0 - tied_y));
  return {detail::clamp_unit(static_cast<double>(concordant - discordant) / denom), false};
}

struct ProvenanceTally {
  std::size_t parsed = 0;
  std::size_t clamped_high = 0;
  std::size_t clamped_low = 0;
  std::size_t fallback_min = 0;

  void add(Provenance p) {
    switch (p) {
      case Provenance::parsed: ++parsed; break;
      case Provenance::clamped_high: ++clamped_high; break;
      case Provenance::clamped_low: ++clamped_low; break;
      case Provenance::fallback_min: ++fallback_min; break;
    }
  }
};

struct CorrelationReport {
  Coefficient pearson;
  Coefficient spearman;
  Coefficient kendall;
  std::size_t n = 0;
  std::size_t failed = 0;
  ProvenanceTally provenance;

  std::size_t attempted() const { return n + failed; }
  bool degenerate() const {
    return pearson.degenerate || spearman.degenerate || kendall.degenerate;
  }
};

// Correlates predictions with human scores over the items that were judged;
// nullopt predictions are failed items, excluded and counted.
inline CorrelationReport correlation_report(std::span<const std::optional<JudgeScore>> pred,
                                            std::span<const double> human) {
  if (pred.size() != human.size()) {
    throw std::invalid_argument("correlation_report: predictions and human scores misaligned");
  }
  CorrelationReport report;
  std::vector<double> xs, ys;
  xs.reserve(pred.size());
  ys.reserve(pred.size());
  for (std::size_t i = 0; i < pred.size(); ++i) {
    if (!pred[i]) {
      ++report.failed;
      continue;
    }
    xs.push_back(pred[i]->value);
    ys.push_back(human[i]);
    report.provenance.add(pred[i]->provenance);
  }
  report.n = xs.size();
  if (report.n < 2) {
    throw DataError("correlation needs at least 2 judged items, have " + std::to_string(report.n));
  }
  report.pearson = pearson(xs, ys);
  report.spearman = spearman(xs, ys);
  report.kendall = kendall(xs, ys);
  return report;
}

struct ScoreDistribution {
  ScoreRange range;
  std::map<int, std::size_t> counts;  // every value in range, zeros included
  std::size_t total = 0;
};

inline ScoreDistribution score_histogram(std::span<const JudgeScore> scores,
                                         const ScoreRange& range) {
  ScoreDistribution dist{range, {}, 0};
  for (int v = range.min(); v <= range.max(); ++v) dist.counts[v] = 0;
  for (const auto& s : scores) {
    if (!range.contains(s.value)) {
      throw DataError("score " + std::to_string(s.value) + " outside range " + range.str());
    }
    ++dist.counts[s.value];
    ++dist.total;
  }
  return dist;
}

struct LogitSnapshot {
  std::vector<std::string> labels;
  std::vector<double> mean_logit;
  std::vector<std::vector<double>> per_item;  // filled only on request
};

inline LogitSnapshot logit_snapshot(std::span<const TokenLogits> items, bool keep_items = false) {
  if (items.empty()) throw DataError("logit snapshot needs at least one item");
  LogitSnapshot snap;
  snap.labels = items.front().labels;
  snap.mean_logit.assign(snap.labels.size(), 0.0);
  for (const auto& item : items) {
    if (item.labels != snap.labels || item.logits.size() != snap.labels.size()) {
      throw DataError("logit snapshot: items have different label sets");
    }
    for (std::size_t i = 0; i < item.logits.size(); ++i) snap.mean_logit[i] += item.logits[i];
    if (keep_items) snap.per_item.push_back(item.logits);
  }
  for (double& m : snap.mean_logit) m /= static_cast<double>(items.size());
  return snap;
}

}  // namespace rangejudge
