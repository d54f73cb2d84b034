#include <gtest/gtest.h>

#include <cctype>

#include "rangejudge/hash.hpp"
#include "rangejudge/prompts.hpp"
#include "test_support.hpp"

using namespace rangejudge;
using testing_support::ScratchDir;

namespace {

const ScoreRange kRanges[] = {{0, 4}, {1, 5}, {2, 6}, {3, 7}, {1, 10}};

bool contains(const std::string& s, std::string_view needle) {
  return s.find(needle) != std::string::npos;
}

}  // namespace

TEST(RenderPrompt, CoherenceHeaderAndScale) {
  EXPECT_TRUE(contains(render_prompt(Dimension::coherence, {1, 5}, "doc", "sum"),
                       "Coherence (1-5)"));
  EXPECT_TRUE(contains(render_prompt(Dimension::coherence, {2, 6}, "doc", "sum"),
                       "on a scale of 2 to 6"));
}

TEST(RenderPrompt, EndsWithQuestionAndInstruction) {
  for (auto dim : kAllDimensions) {
    for (const auto& r : kRanges) {
      const auto p = render_prompt(dim, r, "doc", "sum");
      const std::string tail = "What is the " + std::string(to_string(dim)) +
                               " of the summary above? Provide only rating and no other text.";
      ASSERT_GE(p.size(), tail.size());
      EXPECT_EQ(p.substr(p.size() - tail.size()), tail);
    }
  }
}

TEST(RenderPrompt, NoResidualPlaceholders) {
  for (auto dim : kAllDimensions) {
    for (const auto& r : kRanges) {
      const auto p = render_prompt(dim, r, "The article.", "The summary.");
      for (std::string_view ph : {"{min_range}", "{max_range}", "{{Document}}", "{{Summary}}",
                                  "{{Document]}}"}) {
        EXPECT_FALSE(contains(p, ph)) << ph;
      }
      EXPECT_TRUE(contains(p, "The article."));
      EXPECT_TRUE(contains(p, "The summary."));
    }
  }
}

TEST(RenderPrompt, RangeFidelity) {
  auto count = [](const std::string& s, std::string_view needle) {
    std::size_t n = 0;
    for (auto pos = s.find(needle); pos != std::string::npos; pos = s.find(needle, pos + 1)) ++n;
    return n;
  };
  for (auto dim : kAllDimensions) {
    const std::string body(builtin_template(dim));
    const auto min_slots = count(body, "{min_range}");
    const auto max_slots = count(body, "{max_range}");
    ASSERT_GT(min_slots, 0u);
    ASSERT_GT(max_slots, 0u);
    // Sentinel bounds that occur nowhere else in the template.
    const auto p = render_template(body, ScoreRange(9001, 9002), "D", "S");
    EXPECT_EQ(count(p, "9001"), min_slots);
    EXPECT_EQ(count(p, "9002"), max_slots);

    std::string header(to_string(dim));
    header[0] = static_cast<char>(std::toupper(header[0]));
    for (const auto& r : kRanges) {
      EXPECT_TRUE(contains(render_template(body, r, "D", "S"),
                           header + " (" + r.str() + ")"));
    }
  }
}

TEST(RenderPrompt, SubstitutedContentIsNotRescanned) {
  const auto p = render_prompt(Dimension::relevance, {0, 4}, "doc says {max_range}",
                               "sum says {{Document}}");
  EXPECT_TRUE(contains(p, "doc says {max_range}"));
  EXPECT_TRUE(contains(p, "sum says {{Document}}"));
}

TEST(RenderPrompt, EmptyInputsRejected) {
  EXPECT_THROW(render_prompt(Dimension::coherence, {1, 5}, "", "s"), DataError);
  EXPECT_THROW(render_prompt(Dimension::coherence, {1, 5}, "d", ""), DataError);
}

TEST(RenderPrompt, ConsistencyReusesCoherenceSteps) {
  const std::string step2 =
      "2. Read the summary and compare it to the news article. Check if the summary covers the "
      "main topic and key points of the news article, and if it presents them in a clear and "
      "logical order.";
  EXPECT_TRUE(contains(std::string(templates::kCoherence), step2));
  EXPECT_TRUE(contains(std::string(templates::kConsistency), step2));
}

// Pinned checksums of the packaged templates; any edit to the wording fails here.
TEST(Templates, ChecksumsArePinned) {
  EXPECT_EQ(sha256_hex(templates::kCoherence), "ace8fda26e4364f057acea2cb4b262aba7e0dd19f3f7406ae803dabf211f4fb8");
  EXPECT_EQ(sha256_hex(templates::kRelevance), "14f588eb1a83cfb0758604c5eca5f2f02443671de3a47825a75c305656c6161b");
  EXPECT_EQ(sha256_hex(templates::kConsistency), "6d29f9c4c5bd2e314bd4c7617aa6b619ccd5f13de7e2c507eeca4faefc580eff");
}

TEST(PromptLibrary, DirectoryOverride) {
  ScratchDir dir("prompts");
  testing_support::write_file(dir / "relevance.txt",
                              "Rate {{Summary}} against {{Document}} from {min_range} to {max_range}.");
  const auto lib = PromptLibrary::from_directory(dir.path());
  EXPECT_TRUE(lib.overridden(Dimension::relevance));
  EXPECT_FALSE(lib.overridden(Dimension::coherence));
  EXPECT_EQ(lib.render(Dimension::relevance, {2, 6}, "D", "S"), "Rate S against D from 2 to 6.");
  EXPECT_EQ(lib.render(Dimension::coherence, {2, 6}, "D", "S"),
            render_prompt(Dimension::coherence, {2, 6}, "D", "S"));
}

TEST(PromptLibrary, OverrideMissingPlaceholderIsConfigError) {
  ScratchDir dir("prompts-bad");
  testing_support::write_file(dir / "coherence.txt", "Rate {{Summary}} from {min_range}.");
  EXPECT_THROW(PromptLibrary::from_directory(dir.path()), ConfigError);
  EXPECT_THROW(PromptLibrary::from_directory(dir / "missing"), ConfigError);
}
