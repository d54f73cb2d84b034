#pragma once

#include <algorithm>
#include <array>
#include <cstdint>
#include <random>
#include <string>

#include "rangejudge/corpus.hpp"

namespace rangejudge {

struct SyntheticCorpusSpec {
  std::size_t documents = 100;
  std::size_t summaries_per_document = 16;
  std::size_t annotators = 3;
  // Probability that an annotator's score deviates by one point from the
  // latent quality (direction chosen uniformly, clamped to 1-5).
  double annotator_noise = 0.0;
  std::uint64_t seed = 1;
};

// SummEval-shaped corpus with latent integer qualities per dimension. With
// annotator_noise = 0 every aggregated human score is an integer in 1-5.
inline Corpus make_synthetic_corpus(const SyntheticCorpusSpec& spec) {
  // Cumulative weights for latent quality 1..5.
  static constexpr std::array<std::uint64_t, 5> kCumulative = {10, 30, 60, 85, 100};
  std::mt19937_64 rng(spec.seed);
  auto latent = [&] {
    const auto u = detail::bounded(rng, 100);
    int q = 1;
    while (u >= kCumulative[q - 1]) ++q;
    return q;
  };
  auto annotate = [&](int q) {
    if (spec.annotator_noise > 0.0) {
      const double u = static_cast<double>(rng() >> 11) * 0x1.0p-53;
      if (u < spec.annotator_noise) {
        q += detail::bounded(rng, 2) == 0 ? -1 : 1;
        q = std::clamp(q, kAnnotationMin, kAnnotationMax);
      }
    }
    return static_cast<double>(q);
  };

  Corpus corpus;
  for (std::size_t d = 0; d < spec.documents; ++d) {
    const std::string doc_id = "syn-doc-" + std::to_string(d);
    corpus.documents.push_back(
        {doc_id, "Synthetic news article number " + std::to_string(d) + "."});
    for (std::size_t s = 0; s < spec.summaries_per_document; ++s) {
      SummaryRecord rec;
      rec.doc_id = doc_id;
      rec.system_id = "M" + std::to_string(s);
      rec.summary_text = "Summary by system M" + std::to_string(s) + " of article " +
                         std::to_string(d) + ".";
      for (auto dim : kAllDimensions) {
        const int q = latent();
        auto& scores = rec.annotations[dim];
        for (std::size_t a = 0; a < spec.annotators; ++a) scores.push_back(annotate(q));
      }
      corpus.summaries.push_back(std::move(rec));
    }
  }
  return corpus;
}

}  // namespace rangejudge
