#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "rangejudge/decode.hpp"
#include "test_support.hpp"

using namespace rangejudge;

namespace {

TokenLogits tl(std::vector<double> logits, const ScoreRange& r = {0, 4}) {
  auto labels = candidate_labels(r);
  labels.resize(logits.size());
  return {labels, std::move(logits), "p", LogitKind::raw_logits};
}

std::vector<double> uniform(std::mt19937_64& rng, std::size_t n, double lo, double hi) {
  std::vector<double> v(n);
  for (auto& x : v) x = std::uniform_real_distribution<double>(lo, hi)(rng);
  return v;
}

// Returns fixed logits for every prompt and counts nothing.
class FixedProvider : public Provider {
 public:
  FixedProvider(std::string id, std::vector<double> logits, std::string text = "")
      : Provider(make_config(std::move(id))), logits_(std::move(logits)), text_(std::move(text)) {}

  TokenLogits first_token_logits(std::string_view,
                                 const std::vector<std::string>& labels) override {
    return {labels, logits_, id(), LogitKind::log_probs};
  }
  std::string complete(std::string_view) override { return text_; }

 private:
  static ProviderConfig make_config(std::string id) {
    ProviderConfig c;
    c.provider_id = std::move(id);
    return c;
  }
  std::vector<double> logits_;
  std::string text_;
};

}  // namespace

TEST(TemperatureLogProbs, UniformInput) {
  for (double t : {0.1, 1.0, 7.0}) {
    for (double v : temperature_log_probs(std::vector<double>(5, 0.0), t)) {
      EXPECT_DOUBLE_EQ(v, std::log(1.0 / 5.0));
    }
  }
}

TEST(TemperatureLogProbs, DirectFormula) {
  // log softmax([1, 2]) = [1 - log(e + e^2), 2 - log(e + e^2)].
  const double z = std::log(std::exp(1.0) + std::exp(2.0));
  const auto lp = temperature_log_probs(std::vector<double>{1.0, 2.0}, 1.0);
  EXPECT_NEAR(lp[0], 1.0 - z, 1e-15);
  EXPECT_NEAR(lp[1], 2.0 - z, 1e-15);
  EXPECT_NEAR(lp[0], -1.3132616875182226, 1e-15);
  EXPECT_NEAR(lp[1], -0.3132616875182226, 1e-15);
}

TEST(TemperatureLogProbs, HighTemperatureLimit) {
  const auto lp = temperature_log_probs(std::vector<double>{1.0, 2.0}, 1e9);
  EXPECT_NEAR(lp[0], std::log(0.5), 1e-6);
  EXPECT_NEAR(lp[1], std::log(0.5), 1e-6);
}

TEST(TemperatureLogProbs, NormalizesAndScales) {
  std::mt19937_64 rng(1);
  for (int i = 0; i < 200; ++i) {
    const auto e = uniform(rng, 5, -20, 20);
    const double t = std::uniform_real_distribution<double>(0.2, 5.0)(rng);
    const auto lp = temperature_log_probs(e, t);
    double sum = 0;
    for (double v : lp) sum += std::exp(v);
    EXPECT_NEAR(sum, 1.0, 1e-12);
    // Differences scale by 1/t.
    EXPECT_NEAR(lp[1] - lp[0], (e[1] - e[0]) / t, 1e-9);
  }
}

TEST(TemperatureLogProbs, RejectsBadInputs) {
  EXPECT_THROW(temperature_log_probs(std::vector<double>{1.0}, 0.0), ConfigError);
  EXPECT_THROW(temperature_log_probs(std::vector<double>{1.0}, -1.0), ConfigError);
  EXPECT_THROW(temperature_log_probs(std::vector<double>{INFINITY}, 1.0), ProviderError);
  EXPECT_THROW(validate(ContrastiveConfig{1.0, 0.0}), ConfigError);
  EXPECT_THROW(validate(ContrastiveConfig{-0.1, 1.0}), ConfigError);
  EXPECT_THROW(validate(ContrastiveConfig{NAN, 1.0}), ConfigError);
}

TEST(TemperatureLogProbs, StableAtLargeMagnitude) {
  const auto lp = temperature_log_probs(std::vector<double>{1e4, -1e4, 9999.0, 0.0, -5e3}, 1.0);
  for (double v : lp) EXPECT_FALSE(std::isnan(v));
  EXPECT_NEAR(lp[0], -std::log1p(std::exp(-1.0)), 1e-12);
  const auto adj = contrastive_adjust(tl({1e4, -1e4, 9999.0, 0.0, -5e3}),
                                      tl({-1e4, 1e4, 0.0, 3.0, 1e4}), {1.0, 0.5});
  for (double v : adj.values) EXPECT_TRUE(std::isfinite(v));
}

TEST(ContrastiveAdjust, LambdaZeroIsMainLogProbs) {
  std::mt19937_64 rng(2);
  for (int i = 0; i < 100; ++i) {
    const auto m = tl(uniform(rng, 5, -10, 10));
    const auto a = tl(uniform(rng, 5, -10, 10));
    const auto adj = contrastive_adjust(m, a, {0.0, 2.0});
    EXPECT_EQ(adj.values, temperature_log_probs(m, 1.0));
  }
}

TEST(ContrastiveAdjust, SharedBiasCancels) {
  std::mt19937_64 rng(3);
  for (int i = 0; i < 500; ++i) {
    const auto s = uniform(rng, 5, -5, 5);
    const auto b = uniform(rng, 5, -10, 10);
    std::vector<double> sb(5);
    for (int k = 0; k < 5; ++k) sb[k] = s[k] + b[k];
    const auto adj = contrastive_adjust(tl(sb), tl(b), {1.0, 1.0});
    EXPECT_EQ(argmax_lowest(adj.values), argmax_lowest(s));
    // Values equal s up to one constant.
    for (int k = 1; k < 5; ++k) EXPECT_NEAR(adj.values[k] - adj.values[0], s[k] - s[0], 1e-9);
  }
}

TEST(ContrastiveAdjust, HandExampleFlipsToSecondLabel) {
  const ScoreRange r(1, 2);
  const auto adj = contrastive_adjust(tl({2.0, 1.0}, r), tl({3.0, 0.0}, r), {1.0, 1.0});
  // Frozen from the formula: log softmax([2,1]) - log softmax([3,0]).
  EXPECT_NEAR(adj.values[0], -0.26467433594448053, 1e-12);
  EXPECT_NEAR(adj.values[1], 1.7353256640555195, 1e-12);
  EXPECT_EQ(select_score(adj, r).value, 2);
  // Main alone picks the first label.
  EXPECT_EQ(select_score({candidate_labels(r), temperature_log_probs(tl({2.0, 1.0}, r), 1.0)}, r)
                .value,
            1);
}

TEST(ContrastiveAdjust, LabelMismatchIsError) {
  EXPECT_THROW(contrastive_adjust(tl({1, 2, 3, 4, 5}, {0, 4}), tl({1, 2, 3, 4, 5}, {1, 5}), {}),
               ProviderError);
}

TEST(ContrastiveAdjust, ConstantShiftLeavesChoiceUnchanged) {
  std::mt19937_64 rng(4);
  for (int i = 0; i < 300; ++i) {
    const auto m = uniform(rng, 5, -10, 10);
    const auto a = uniform(rng, 5, -10, 10);
    const double c = std::uniform_real_distribution<double>(-100, 100)(rng);
    const ContrastiveConfig cfg{std::uniform_real_distribution<double>(0, 1)(rng),
                                std::uniform_real_distribution<double>(0.5, 5)(rng)};
    auto shifted_m = m, shifted_a = a;
    for (auto& x : shifted_m) x += c;
    for (auto& x : shifted_a) x -= c;
    const auto base = select_score(contrastive_adjust(tl(m), tl(a), cfg), {0, 4}).value;
    EXPECT_EQ(select_score(contrastive_adjust(tl(shifted_m), tl(a), cfg), {0, 4}).value, base);
    EXPECT_EQ(select_score(contrastive_adjust(tl(m), tl(shifted_a), cfg), {0, 4}).value, base);
  }
}

TEST(SelectScore, Examples) {
  EXPECT_EQ(select_score({candidate_labels({0, 4}), {0.1, 0.9, 0.2, 0.0, 0.0}}, {0, 4}).value, 1);
  EXPECT_EQ(select_score({candidate_labels({2, 6}), std::vector<double>(5, 0.3)}, {2, 6}).value, 2);
  EXPECT_EQ(select_score({candidate_labels({2, 6}), {0, 1, 2, 3, 4}}, {2, 6}).value, 6);
  const auto s = select_score({candidate_labels({1, 5}), {0, 5, 1, 5, 0}}, {1, 5});
  EXPECT_EQ(s.value, 2);
  EXPECT_EQ(s.provenance, Provenance::parsed);
  EXPECT_THROW(select_score({candidate_labels({1, 5}), {0, 1, 2, 3, 4}}, {0, 4}), DataError);
}

TEST(JudgeGreedy, TextMode) {
  FixedProvider four("m", {}, "4");
  EXPECT_EQ(judge_greedy(four, "p", {2, 6}, GreedyMode::text).value, 4);
  FixedProvider fine("m", {}, "fine");
  const auto s = judge_greedy(fine, "p", {2, 6}, GreedyMode::text);
  EXPECT_EQ(s.value, 2);
  EXPECT_EQ(s.provenance, Provenance::fallback_min);
}

TEST(JudgeGreedy, RestrictedEqualsContrastiveWithLambdaZero) {
  std::mt19937_64 rng(5);
  for (int i = 0; i < 200; ++i) {
    FixedProvider main("m", uniform(rng, 5, -10, 10));
    FixedProvider asst("a", uniform(rng, 5, -10, 10));
    EXPECT_EQ(judge_greedy(main, "p", {3, 7}, GreedyMode::restricted).value,
              judge_contrastive(main, asst, "p", {3, 7}, {0.0, 1.0}).value);
  }
}

TEST(JudgeContrastive, SharedBiasFamilyRecoversSignalOnEveryItem) {
  const ScoreRange r(2, 6);
  const auto labels = candidate_labels(r);
  auto main_cfg = testing_support::synthetic_provider("main", 1.0, 1.0, 0.0, 0);
  auto asst_cfg = testing_support::synthetic_provider("asst", 0.0, 1.0, 0.0, 0);
  auto signal_cfg = testing_support::synthetic_provider("signal", 1.0, 1.0, 0.0, 0, false);
  std::mt19937_64 rng(6);
  std::vector<double> qualities(200);
  for (auto& q : qualities) q = std::uniform_real_distribution<double>(0, 1)(rng);
  QualitySource source = [&](std::string_view prompt) -> std::optional<SyntheticItem> {
    return SyntheticItem{qualities.at(std::stoul(std::string(prompt))), labels};
  };
  SyntheticProvider main(main_cfg, source), asst(asst_cfg, source), signal(signal_cfg, source);
  std::size_t differs_from_greedy = 0;
  for (std::size_t i = 0; i < qualities.size(); ++i) {
    const auto prompt = std::to_string(i);
    const int truth = judge_greedy(signal, prompt, r, GreedyMode::restricted).value;
    EXPECT_EQ(judge_contrastive(main, asst, prompt, r, {1.0, 1.0}).value, truth) << i;
    if (judge_greedy(main, prompt, r, GreedyMode::restricted).value != truth) ++differs_from_greedy;
  }
  // The bias actually distorts the uncorrected judge.
  EXPECT_GT(differs_from_greedy, 20u);
}

TEST(JudgeContrastive, HotAssistantMatchesMain) {
  std::mt19937_64 rng(7);
  for (int i = 0; i < 300; ++i) {
    FixedProvider main("m", uniform(rng, 5, -10, 10));
    FixedProvider asst("a", uniform(rng, 5, -10, 10));
    EXPECT_EQ(judge_contrastive(main, asst, "p", {0, 4}, {1.0, 1e9}).value,
              judge_greedy(main, "p", {0, 4}, GreedyMode::restricted).value);
  }
}

TEST(ContrastiveAdjust, ChoiceDependsOnLambdaOverTemperature) {
  // lambda * log softmax(a / t) = (lambda / t) * a - const, so scaling lambda
  // and t together never changes the selected score.
  std::mt19937_64 rng(8);
  for (int i = 0; i < 500; ++i) {
    const auto m = tl(uniform(rng, 5, -10, 10));
    const auto a = tl(uniform(rng, 5, -10, 10));
    const ContrastiveConfig base{std::uniform_real_distribution<double>(0.01, 1.0)(rng),
                                 std::uniform_real_distribution<double>(0.5, 5.0)(rng)};
    const double k = std::uniform_real_distribution<double>(0.1, 10.0)(rng);
    const auto x = contrastive_adjust(m, a, base);
    const auto y = contrastive_adjust(m, a, {base.lambda * k, base.temperature * k});
    for (int j = 1; j < 5; ++j) {
      EXPECT_NEAR(x.values[j] - x.values[0], y.values[j] - y.values[0], 1e-9);
    }
  }
}
