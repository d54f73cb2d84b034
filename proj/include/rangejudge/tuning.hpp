#pragma once

#include <optional>
#include <sstream>
#include <string>
#include <variant>
#include <vector>

#include "rangejudge/corpus.hpp"
#include "rangejudge/decode.hpp"
#include "rangejudge/parallel.hpp"
#include "rangejudge/prompts.hpp"
#include "rangejudge/stats.hpp"

namespace rangejudge {

struct Grid {
  std::vector<double> lambdas;
  std::vector<double> temperatures;

  // lambda in {0.01, 0.1, 0.5, 1.0} x t in {0.5, 1, 2, 3, 4, 5}.
  static Grid defaults() { return {{0.01, 0.1, 0.5, 1.0}, {0.5, 1.0, 2.0, 3.0, 4.0, 5.0}}; }

  std::size_t size() const { return lambdas.size() * temperatures.size(); }

  // Row-major: lambda ascending in the outer loop, then t.
  std::vector<ContrastiveConfig> points() const {
    std::vector<ContrastiveConfig> out;
    out.reserve(size());
    for (double l : lambdas) {
      for (double t : temperatures) out.push_back({l, t});
    }
    return out;
  }
};

inline void validate(const Grid& grid) {
  if (grid.lambdas.empty() || grid.temperatures.empty()) {
    throw ConfigError("grid needs at least one lambda and one temperature");
  }
  for (auto p : grid.points()) validate(p);
}

// "default" or "L1,L2,...:T1,T2,...".
inline Grid parse_grid(const std::string& text) {
  if (text == "default") return Grid::defaults();
  const auto colon = text.find(':');
  if (colon == std::string::npos) {
    throw ConfigError("grid must be 'default' or 'LAMBDAS:TEMPS', got '" + text + "'");
  }
  auto parse_list = [&](const std::string& part) {
    std::vector<double> out;
    std::stringstream ss(part);
    std::string tok;
    while (std::getline(ss, tok, ',')) {
      try {
        std::size_t used = 0;
        out.push_back(std::stod(tok, &used));
        if (used != tok.size()) throw std::invalid_argument(tok);
      } catch (const std::exception&) {
        throw ConfigError("bad grid value '" + tok + "'");
      }
    }
    return out;
  };
  Grid g{parse_list(text.substr(0, colon)), parse_list(text.substr(colon + 1))};
  validate(g);
  return g;
}

enum class SelectionMetric { pearson, spearman, kendall };

inline const char* to_string(SelectionMetric m) {
  switch (m) {
    case SelectionMetric::pearson: return "pearson";
    case SelectionMetric::spearman: return "spearman";
    case SelectionMetric::kendall: return "kendall";
  }
  return "?";
}

inline SelectionMetric parse_metric(std::string_view name) {
  if (name == "pearson") return SelectionMetric::pearson;
  if (name == "spearman") return SelectionMetric::spearman;
  if (name == "kendall") return SelectionMetric::kendall;
  throw ConfigError("unknown selection metric '" + std::string(name) + "'");
}

inline double metric_value(const CorrelationReport& r, SelectionMetric m) {
  switch (m) {
    case SelectionMetric::pearson: return r.pearson.value;
    case SelectionMetric::spearman: return r.spearman.value;
    case SelectionMetric::kendall: return r.kendall.value;
  }
  return 0.0;
}

// Main and assistant first-token logits for one item, or the reason the item
// could not be judged.
struct LogitPair {
  std::optional<TokenLogits> main;
  std::optional<TokenLogits> asst;
  std::string error;

  bool ok() const { return main && asst; }
};

struct GridEntry {
  ContrastiveConfig config;
  CorrelationReport report;
};

struct ExcludedPoint {
  ContrastiveConfig config;
  std::string diagnostic;
};

struct GridResult {
  ContrastiveConfig best;
  double best_value = 0.0;
  SelectionMetric metric = SelectionMetric::spearman;
  std::vector<GridEntry> table;  // row-major order
  std::vector<ExcludedPoint> excluded;
};

// Scores every grid point from already-fetched logits. Pure: no provider calls.
inline GridResult evaluate_grid(std::span<const LogitPair> items, std::span<const double> human,
                                const ScoreRange& range, const Grid& grid,
                                SelectionMetric metric) {
  validate(grid);
  GridResult result;
  result.metric = metric;
  for (const auto& point : grid.points()) {
    std::vector<std::optional<JudgeScore>> preds(items.size());
    for (std::size_t i = 0; i < items.size(); ++i) {
      if (!items[i].ok()) continue;
      preds[i] = select_score(contrastive_adjust(*items[i].main, *items[i].asst, point), range);
    }
    try {
      result.table.push_back({point, correlation_report(preds, human)});
    } catch (const DataError& e) {
      result.excluded.push_back({point, e.what()});
    }
  }
  if (result.table.empty()) {
    throw DataError("grid search: every grid point was excluded (no judged dev items)");
  }
  // Strict improvement only, so ties keep the earliest row-major point.
  const GridEntry* best = &result.table.front();
  for (const auto& e : result.table) {
    if (metric_value(e.report, metric) > metric_value(best->report, metric)) best = &e;
  }
  result.best = best->config;
  result.best_value = metric_value(best->report, metric);
  return result;
}

// Fetches main and assistant logits for each prompt exactly once.
inline std::vector<LogitPair> fetch_logit_pairs(Provider& main, Provider& asst,
                                                const std::vector<std::string>& prompts,
                                                const std::vector<std::string>& labels,
                                                std::size_t jobs) {
  return parallel_map(prompts.size(), jobs, [&](std::size_t i) {
    LogitPair pair;
    try {
      pair.main = first_token_logits(main, prompts[i], labels);
      pair.asst = first_token_logits(asst, prompts[i], labels);
    } catch (const ProviderError& e) {
      pair.error = e.what();
      pair.main.reset();
      pair.asst.reset();
    }
    return pair;
  });
}

// Exhaustive (lambda, t) search on a dev corpus for one (dimension, range).
inline GridResult grid_search(const Corpus& dev, Dimension dim, const ScoreRange& range,
                              Provider& main, Provider& asst, const Grid& grid,
                              SelectionMetric metric = SelectionMetric::spearman,
                              const PromptLibrary& prompts = {}, std::size_t jobs = 1) {
  if (dev.summaries.empty()) throw DataError("grid search needs a non-empty dev split");
  validate(grid);
  std::unordered_map<std::string, const Document*> docs;
  for (const auto& d : dev.documents) docs[d.doc_id] = &d;

  std::vector<std::string> texts;
  std::vector<double> human;
  for (const auto& s : dev.summaries) {
    texts.push_back(prompts.render(dim, range, docs.at(s.doc_id)->text, s.summary_text));
    human.push_back(aggregate_human_score(s, dim));
  }
  const auto pairs = fetch_logit_pairs(main, asst, texts, candidate_labels(range), jobs);
  return evaluate_grid(pairs, human, range, grid, metric);
}

}  // namespace rangejudge
