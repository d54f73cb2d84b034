#include <gtest/gtest.h>

#include <unordered_map>

#include "rangejudge/experiment.hpp"
#include "rangejudge/synthetic_corpus.hpp"
#include "rangejudge/tuning.hpp"
#include "test_support.hpp"

using namespace rangejudge;
using testing_support::synthetic_provider;

namespace {

// Quality lookup for every (range, summary) prompt of one dimension.
QualitySource quality_for(const Corpus& corpus, Dimension dim,
                          const std::vector<ScoreRange>& ranges) {
  auto table = std::make_shared<std::unordered_map<std::string, SyntheticItem>>();
  for (const auto& r : ranges) {
    for (const auto& s : corpus.summaries) {
      const auto& doc = find_document(corpus, s.doc_id);
      (*table)[render_prompt(dim, r, doc.text, s.summary_text)] =
          SyntheticItem{quality_from_human(aggregate_human_score(s, dim)), candidate_labels(r)};
    }
  }
  return [table](std::string_view p) -> std::optional<SyntheticItem> {
    auto it = table->find(std::string(p));
    if (it == table->end()) return std::nullopt;
    return it->second;
  };
}

struct Family {
  Corpus dev;
  QualitySource quality;
};

Family noiseless_family() {
  const auto corpus = make_synthetic_corpus({.seed = 5});
  auto split = split_corpus(corpus, {0.1, kDefaultSplitSeed});
  const std::vector<ScoreRange> ranges = {{0, 4}, {1, 5}, {2, 6}, {3, 7}};
  return {split.dev, quality_for(split.dev, Dimension::coherence, ranges)};
}

TokenLogits tl(std::vector<double> v) { return {candidate_labels({1, 5}), std::move(v), "p"}; }

}  // namespace

TEST(Grid, DefaultHasTwentyFourRowMajorPoints) {
  const auto g = Grid::defaults();
  EXPECT_EQ(g.lambdas, (std::vector<double>{0.01, 0.1, 0.5, 1.0}));
  EXPECT_EQ(g.temperatures, (std::vector<double>{0.5, 1.0, 2.0, 3.0, 4.0, 5.0}));
  const auto pts = g.points();
  ASSERT_EQ(pts.size(), 24u);
  EXPECT_EQ(pts.front(), (ContrastiveConfig{0.01, 0.5}));
  EXPECT_EQ(pts[1], (ContrastiveConfig{0.01, 1.0}));
  EXPECT_EQ(pts[6], (ContrastiveConfig{0.1, 0.5}));
  EXPECT_EQ(pts.back(), (ContrastiveConfig{1.0, 5.0}));
}

TEST(Grid, Parse) {
  EXPECT_EQ(parse_grid("default").size(), 24u);
  const auto g = parse_grid("0.5,1:1,2,3");
  EXPECT_EQ(g.lambdas, (std::vector<double>{0.5, 1.0}));
  EXPECT_EQ(g.temperatures, (std::vector<double>{1.0, 2.0, 3.0}));
  for (const char* bad : {"", "1,2", "1:0", "a:1", "1:", ":1", "-1:1", "1:2x"}) {
    EXPECT_THROW(parse_grid(bad), ConfigError) << bad;
  }
  EXPECT_EQ(parse_metric("kendall"), SelectionMetric::kendall);
  EXPECT_THROW(parse_metric("accuracy"), ConfigError);
}

// The assistant enters only through lambda * log softmax(a / t), which is
// (lambda / t) * a plus a per-item constant, so every point with lambda / t = 1
// cancels the shared bias. In the default grid (0.5, 0.5) precedes (1, 1) in
// row-major order and wins the tie.
TEST(GridSearch, NoiselessFamilyCancelsAtUnitRatio) {
  const auto fam = noiseless_family();
  for (const ScoreRange r : {ScoreRange(0, 4), ScoreRange(1, 5), ScoreRange(2, 6), ScoreRange(3, 7)}) {
    SyntheticProvider main(synthetic_provider("main", 1.0, 1.0, 0.0, 1), fam.quality);
    SyntheticProvider asst(synthetic_provider("asst", 0.0, 1.0, 0.0, 2), fam.quality);
    const auto res = grid_search(fam.dev, Dimension::coherence, r, main, asst, Grid::defaults());
    EXPECT_EQ(res.table.size(), 24u);
    EXPECT_EQ(res.metric, SelectionMetric::spearman);
    EXPECT_DOUBLE_EQ(res.best_value, 1.0) << r.str();
    EXPECT_EQ(res.best, (ContrastiveConfig{0.5, 0.5})) << r.str();
    for (const auto& e : res.table) {
      const double ratio = e.config.lambda / e.config.temperature;
      if (ratio == 1.0) {
        EXPECT_DOUBLE_EQ(e.report.spearman.value, 1.0);
      }
      // Points before the first unit-ratio point leave residual bias.
      if (ratio < 0.25) {
        EXPECT_LT(e.report.spearman.value, 1.0) << r.str();
      }
    }
  }
}

TEST(GridSearch, NoiselessFamilySelectsOneOneWhenItIsTheOnlyUnitRatio) {
  const auto fam = noiseless_family();
  SyntheticProvider main(synthetic_provider("main", 1.0, 1.0, 0.0, 1), fam.quality);
  SyntheticProvider asst(synthetic_provider("asst", 0.0, 1.0, 0.0, 2), fam.quality);
  const Grid grid{{0.01, 0.1, 1.0}, {0.5, 1.0, 2.0, 3.0, 4.0, 5.0}};
  const auto res = grid_search(fam.dev, Dimension::coherence, {2, 6}, main, asst, grid);
  EXPECT_EQ(res.best, (ContrastiveConfig{1.0, 1.0}));
  EXPECT_DOUBLE_EQ(res.best_value, 1.0);
}

TEST(GridSearch, BackendCallsIndependentOfGridSize) {
  const auto fam = noiseless_family();
  const std::size_t dev_items = fam.dev.summaries.size();
  ASSERT_EQ(dev_items, 160u);
  for (const auto& grid : {Grid::defaults(), Grid{{1.0}, {1.0}}, parse_grid("0,0.2,0.4,0.6,0.8,1:1,2")}) {
    SyntheticProvider main(synthetic_provider("main", 1.0, 1.0, 0.0, 1), fam.quality);
    SyntheticProvider asst(synthetic_provider("asst", 0.0, 1.0, 0.0, 2), fam.quality);
    grid_search(fam.dev, Dimension::coherence, {2, 6}, main, asst, grid, SelectionMetric::spearman,
                {}, 3);
    EXPECT_EQ(main.backend_calls() + asst.backend_calls(), 2 * dev_items);
    EXPECT_EQ(main.backend_calls(), dev_items);
  }
}

TEST(GridSearch, SingletonGrid) {
  const auto fam = noiseless_family();
  SyntheticProvider main(synthetic_provider("main", 1.0, 1.0, 0.3, 1), fam.quality);
  SyntheticProvider asst(synthetic_provider("asst", 0.0, 1.0, 0.0, 2), fam.quality);
  const auto res = grid_search(fam.dev, Dimension::coherence, {1, 5}, main, asst, {{0.1}, {3.0}});
  EXPECT_EQ(res.best, (ContrastiveConfig{0.1, 3.0}));
  ASSERT_EQ(res.table.size(), 1u);
}

TEST(GridSearch, Deterministic) {
  const auto fam = noiseless_family();
  auto once = [&] {
    SyntheticProvider main(synthetic_provider("main", 1.0, 1.0, 0.5, 1), fam.quality);
    SyntheticProvider asst(synthetic_provider("asst", 0.1, 0.5, 0.1, 2), fam.quality);
    return grid_search(fam.dev, Dimension::coherence, {2, 6}, main, asst, Grid::defaults(),
                       SelectionMetric::kendall, {}, 4);
  };
  const auto a = once(), b = once();
  EXPECT_EQ(a.best, b.best);
  ASSERT_EQ(a.table.size(), b.table.size());
  for (std::size_t i = 0; i < a.table.size(); ++i) {
    EXPECT_EQ(a.table[i].report.kendall.value, b.table[i].report.kendall.value);
  }
  EXPECT_EQ(a.metric, SelectionMetric::kendall);
}

TEST(EvaluateGrid, TiesKeepFirstRowMajorPoint) {
  // Main is so confident that every grid point makes the same choices.
  std::vector<LogitPair> items;
  std::vector<double> human;
  for (int i = 0; i < 5; ++i) {
    std::vector<double> m(5, -100.0);
    m[i] = 100.0;
    items.push_back({tl(m), tl({0, 0, 0, 0, 0.5}), ""});
    human.push_back(1.0 + i);
  }
  const auto res = evaluate_grid(items, human, {1, 5}, Grid::defaults(), SelectionMetric::spearman);
  EXPECT_EQ(res.best, (ContrastiveConfig{0.01, 0.5}));
  EXPECT_DOUBLE_EQ(res.best_value, 1.0);
}

TEST(EvaluateGrid, PicksStrictlyBetterLaterPoint) {
  // Shared-bias items: only lambda / t = 1 cancels the bias exactly.
  std::vector<LogitPair> items;
  std::vector<double> human;
  const std::vector<double> bias = {0, 0, 0, 4, 0};
  for (int i = 0; i < 5; ++i) {
    std::vector<double> m(5);
    for (int k = 0; k < 5; ++k) m[k] = -(k - i) * (k - i) + bias[k];
    items.push_back({tl(m), tl(bias), ""});
    human.push_back(1.0 + i);
  }
  const auto grid = parse_grid("0.01,0.1,1:2,1");
  const auto res = evaluate_grid(items, human, {1, 5}, grid, SelectionMetric::spearman);
  EXPECT_EQ(res.best, (ContrastiveConfig{1.0, 1.0}));
  EXPECT_DOUBLE_EQ(res.best_value, 1.0);
  ASSERT_EQ(res.table.size(), 6u);
  for (std::size_t i = 0; i + 1 < res.table.size(); ++i) {
    EXPECT_LT(res.table[i].report.spearman.value, 1.0);
  }
}

TEST(EvaluateGrid, ExhaustiveAndFailedItemsExcluded) {
  std::vector<LogitPair> items = {{tl({0, 1, 2, 3, 4}), tl({0, 0, 0, 0, 0}), ""},
                                  {std::nullopt, std::nullopt, "boom"},
                                  {tl({4, 3, 2, 1, 0}), tl({0, 0, 0, 0, 0}), ""}};
  const std::vector<double> human = {5, 3, 1};
  const auto grid = parse_grid("0,1:1,2,3");
  const auto res = evaluate_grid(items, human, {1, 5}, grid, SelectionMetric::pearson);
  EXPECT_EQ(res.table.size() + res.excluded.size(), grid.size());
  for (const auto& e : res.table) {
    EXPECT_EQ(e.report.n, 2u);
    EXPECT_EQ(e.report.failed, 1u);
  }

  std::vector<LogitPair> all_failed(3, LogitPair{std::nullopt, std::nullopt, "down"});
  EXPECT_THROW(evaluate_grid(all_failed, human, {1, 5}, grid, SelectionMetric::spearman),
               DataError);
  SyntheticProvider a(synthetic_provider("a", 1, 1, 0, 0), nullptr);
  SyntheticProvider b(synthetic_provider("b", 1, 1, 0, 0), nullptr);
  EXPECT_THROW(grid_search(Corpus{}, Dimension::coherence, {1, 5}, a, b, grid), DataError);
}
