#pragma once

#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>
#include <string>
#include <string_view>

#include "rangejudge/dimension.hpp"
#include "rangejudge/error.hpp"
#include "rangejudge/ranges.hpp"

namespace rangejudge {

// Judge prompt templates (G-Eval style). Placeholders: {min_range},
// {max_range}, {{Document}}, {{Summary}}. The consistency template keeps the
// coherence evaluation steps as originally published.
namespace templates {

inline constexpr std::string_view kCoherence =
    R"(You will be given one summary written for a news article.

Your task is to rate the summary on one metric.

Please make sure you read and understand these instructions carefully. Please keep this document open while reviewing, and refer to it as needed.

Evaluation Criteria:

Coherence ({min_range}-{max_range}) - the collective quality of all sentences. We align this dimension with the DUC quality question of structure and coherence whereby "the summary should be well-structured and well-organized. The summary should not just be a heap of related information, but should build from sentence to a coherent body of information about a topic."

Evaluation Steps:

1. Read the news article carefully and identify the main topic and key points.
2. Read the summary and compare it to the news article. Check if the summary covers the main topic and key points of the news article, and if it presents them in a clear and logical order.
3. Assign a score for coherence on a scale of {min_range} to {max_range}, where {min_range} is the lowest and {max_range} is the highest based on the Evaluation Criteria.

Example:

Source Text:

{{Document}}

Summary:

{{Summary}}

Evaluation Form (scores ONLY):

- Coherence:

What is the coherence of the summary above? Provide only rating and no other text.)";

inline constexpr std::string_view kRelevance =
    R"(You will be given one summary written for a news article.

Your task is to rate the summary on one metric.

Please make sure you read and understand these instructions carefully. Please keep this document open while reviewing, and refer to it as needed.

Evaluation Criteria:

Relevance ({min_range}-{max_range}) - selection of important content from the source. The summary should include only important information from the source document. Annotators were instructed to penalize summaries which contained redundancies and excess information.

Evaluation Steps:

1. Read the summary and the source document carefully.
2. Compare the summary to the source document and identify the main points of the article.
3. Assess how well the summary covers the main points of the article, and how much irrelevant or redundant information it contains.
4. Assign a relevance score from {min_range} to {max_range}.

Example:

Source Text:

{{Document}}

Summary:

{{Summary}}

Evaluation Form (scores ONLY):

- Relevance:

What is the relevance of the summary above? Provide only rating and no other text.)";

inline constexpr std::string_view kConsistency =
    R"(You will be given one summary written for a news article.

Your task is to rate the summary on one metric.

Please make sure you read and understand these instructions carefully. Please keep this document open while reviewing, and refer to it as needed.

Evaluation Criteria:

Consistency ({min_range}-{max_range}) - the factual alignment between the summary and the summarized source. A factually consistent summary contains only statements that are entailed by the source document. Annotators were also asked to penalize summaries that contained hallucinated facts.

Evaluation Steps:

1. Read the news article carefully and identify the main topic and key points.
2. Read the summary and compare it to the news article. Check if the summary covers the main topic and key points of the news article, and if it presents them in a clear and logical order.
3. Assign a score for consistency based on the Evaluation Criteria.

Example:

Source Text:

{{Document}}

Summary:

{{Summary}}

Evaluation Form (scores ONLY):

- Consistency:

What is the consistency of the summary above? Provide only rating and no other text.)";

}  // namespace templates

inline std::string_view builtin_template(Dimension dim) {
  switch (dim) {
    case Dimension::coherence: return templates::kCoherence;
    case Dimension::relevance: return templates::kRelevance;
    case Dimension::consistency: return templates::kConsistency;
  }
  return {};
}

// One pass over the template; substituted content is never rescanned, so a
// document that happens to contain "{min_range}" is left untouched.
inline std::string render_template(std::string_view body, const ScoreRange& range,
                                   std::string_view document, std::string_view summary) {
  struct Slot {
    std::string_view token;
    std::string value;
  };
  const Slot slots[] = {
      {"{{Document}}", std::string(document)},
      {"{{Summary}}", std::string(summary)},
      {"{min_range}", std::to_string(range.min())},
      {"{max_range}", std::to_string(range.max())},
  };
  std::string out;
  out.reserve(body.size() + document.size() + summary.size());
  std::size_t i = 0;
  while (i < body.size()) {
    bool matched = false;
    if (body[i] == '{') {
      for (const auto& slot : slots) {
        if (body.substr(i, slot.token.size()) == slot.token) {
          out += slot.value;
          i += slot.token.size();
          matched = true;
          break;
        }
      }
    }
    if (!matched) out.push_back(body[i++]);
  }
  return out;
}

// Template set, optionally overridden from a directory of `<dimension>.txt`
// files. Dimensions without an override file use the built-in template.
class PromptLibrary {
 public:
  PromptLibrary() = default;

  static PromptLibrary from_directory(const std::filesystem::path& dir) {
    if (!std::filesystem::is_directory(dir)) {
      throw ConfigError("prompt directory '" + dir.string() + "' does not exist");
    }
    PromptLibrary lib;
    for (auto dim : kAllDimensions) {
      const auto file = dir / (std::string(to_string(dim)) + ".txt");
      if (!std::filesystem::exists(file)) continue;
      std::ifstream in(file, std::ios::binary);
      std::stringstream ss;
      ss << in.rdbuf();
      std::string body = ss.str();
      for (std::string_view required : {"{{Document}}", "{{Summary}}"}) {
        if (body.find(required) == std::string::npos) {
          throw ConfigError("prompt template '" + file.string() + "' lacks " +
                            std::string(required));
        }
      }
      lib.overrides_[dim] = std::move(body);
    }
    return lib;
  }

  std::string_view body(Dimension dim) const {
    auto it = overrides_.find(dim);
    return it == overrides_.end() ? builtin_template(dim) : std::string_view(it->second);
  }

  bool overridden(Dimension dim) const { return overrides_.contains(dim); }

  std::string render(Dimension dim, const ScoreRange& range, std::string_view document,
                     std::string_view summary) const {
    if (document.empty()) throw DataError("cannot render prompt: empty document");
    if (summary.empty()) throw DataError("cannot render prompt: empty summary");
    return render_template(body(dim), range, document, summary);
  }

 private:
  std::map<Dimension, std::string> overrides_;
};

inline std::string render_prompt(Dimension dim, const ScoreRange& range,
                                 std::string_view document, std::string_view summary) {
  return PromptLibrary{}.render(dim, range, document, summary);
}

}  // namespace rangejudge
