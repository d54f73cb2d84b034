#pragma once

#include <nlohmann/json.hpp>

#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <map>
#include <numeric>
#include <random>
#include <set>
#include <string>
#include <unordered_map>
#include <unordered_set>
#include <utility>
#include <vector>

#include "rangejudge/dimension.hpp"
#include "rangejudge/error.hpp"

namespace rangejudge {

// SummEval expert scores are integers on 1-5.
inline constexpr int kAnnotationMin = 1;
inline constexpr int kAnnotationMax = 5;

struct Document {
  std::string doc_id;
  std::string text;
};

struct SummaryRecord {
  std::string doc_id;
  std::string system_id;
  std::string summary_text;
  std::map<Dimension, std::vector<double>> annotations;
};

struct Corpus {
  std::vector<Document> documents;
  std::vector<SummaryRecord> summaries;

  bool empty() const { return documents.empty(); }
};

struct SplitSpec {
  double dev_fraction = 0.1;
  std::uint64_t seed = 0;
};

inline constexpr std::uint64_t kDefaultSplitSeed = 20250101;

// Mean of the expert scores for `dim`.
inline double aggregate_human_score(const SummaryRecord& record, Dimension dim) {
  auto it = record.annotations.find(dim);
  if (it == record.annotations.end() || it->second.empty()) {
    throw DataError("summary (" + record.doc_id + ", " + record.system_id + ") has no " +
                    std::string(to_string(dim)) + " annotation");
  }
  const auto& xs = it->second;
  return std::accumulate(xs.begin(), xs.end(), 0.0) / static_cast<double>(xs.size());
}

namespace detail {

inline std::string record_ctx(std::size_t line_no) {
  return "record " + std::to_string(line_no) + ": ";
}

inline std::string require_string(const nlohmann::json& obj, const char* key,
                                  std::size_t line_no) {
  auto it = obj.find(key);
  if (it == obj.end() || !it->is_string()) {
    throw DataError(record_ctx(line_no) + "missing string field '" + key + "'");
  }
  auto s = it->get<std::string>();
  if (s.empty()) throw DataError(record_ctx(line_no) + "empty field '" + key + "'");
  return s;
}

}  // namespace detail

// Parses the canonical JSON Lines corpus. Document lines carry `doc_id` and
// `text`; summary lines carry `doc_id`, `system_id`, `summary` and
// `expert_annotations`. Errors name the 1-based record (line) number.
inline Corpus parse_corpus(std::istream& in) {
  Corpus corpus;
  std::unordered_set<std::string> doc_ids;
  std::set<std::pair<std::string, std::string>> summary_keys;
  std::vector<std::size_t> summary_lines;

  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    nlohmann::json obj;
    try {
      obj = nlohmann::json::parse(line);
    } catch (const nlohmann::json::parse_error& e) {
      throw DataError(detail::record_ctx(line_no) + "invalid JSON: " + e.what());
    }
    if (!obj.is_object()) throw DataError(detail::record_ctx(line_no) + "expected an object");

    const bool is_summary = obj.contains("system_id") || obj.contains("summary") ||
                            obj.contains("expert_annotations");
    if (!is_summary) {
      Document doc{detail::require_string(obj, "doc_id", line_no),
                   detail::require_string(obj, "text", line_no)};
      if (!doc_ids.insert(doc.doc_id).second) {
        throw DataError(detail::record_ctx(line_no) + "duplicate doc_id '" + doc.doc_id + "'");
      }
      corpus.documents.push_back(std::move(doc));
      continue;
    }

    SummaryRecord rec;
    rec.doc_id = detail::require_string(obj, "doc_id", line_no);
    rec.system_id = detail::require_string(obj, "system_id", line_no);
    rec.summary_text = detail::require_string(obj, "summary", line_no);
    auto ann = obj.find("expert_annotations");
    if (ann == obj.end() || !ann->is_array() || ann->empty()) {
      throw DataError(detail::record_ctx(line_no) + "missing field 'expert_annotations'");
    }
    for (const auto& expert : *ann) {
      if (!expert.is_object()) {
        throw DataError(detail::record_ctx(line_no) + "expert annotation must be an object");
      }
      for (auto dim : kAllDimensions) {
        auto v = expert.find(std::string(to_string(dim)));
        if (v == expert.end()) continue;
        if (!v->is_number()) {
          throw DataError(detail::record_ctx(line_no) + "non-numeric " +
                          std::string(to_string(dim)) + " annotation");
        }
        const double score = v->get<double>();
        if (!(score >= kAnnotationMin && score <= kAnnotationMax)) {
          throw DataError(detail::record_ctx(line_no) + std::string(to_string(dim)) +
                          " annotation out of range 1-5");
        }
        rec.annotations[dim].push_back(score);
      }
    }
    if (rec.annotations.empty()) {
      throw DataError(detail::record_ctx(line_no) + "no usable expert annotations");
    }
    if (!summary_keys.emplace(rec.doc_id, rec.system_id).second) {
      throw DataError(detail::record_ctx(line_no) + "duplicate summary (" + rec.doc_id + ", " +
                      rec.system_id + ")");
    }
    corpus.summaries.push_back(std::move(rec));
    summary_lines.push_back(line_no);
  }

  for (std::size_t i = 0; i < corpus.summaries.size(); ++i) {
    if (!doc_ids.contains(corpus.summaries[i].doc_id)) {
      throw DataError(detail::record_ctx(summary_lines[i]) + "dangling doc_id '" +
                      corpus.summaries[i].doc_id + "'");
    }
  }
  if (corpus.documents.empty()) throw DataError("no documents");
  return corpus;
}

inline Corpus load_corpus(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open corpus file '" + path.string() + "'");
  return parse_corpus(in);
}

inline nlohmann::json to_json(const Document& doc) {
  return {{"doc_id", doc.doc_id}, {"text", doc.text}};
}

// Canonical summary line. Per-expert objects are rebuilt column-wise, so a
// record whose dimensions have unequal expert counts is written with the
// shorter columns omitted from later experts.
inline nlohmann::json to_json(const SummaryRecord& rec) {
  std::size_t experts = 0;
  for (const auto& [dim, xs] : rec.annotations) experts = std::max(experts, xs.size());
  nlohmann::json ann = nlohmann::json::array();
  for (std::size_t e = 0; e < experts; ++e) {
    nlohmann::json obj = nlohmann::json::object();
    for (const auto& [dim, xs] : rec.annotations) {
      if (e < xs.size()) {
        const double v = xs[e];
        if (v == std::floor(v)) {
          obj[std::string(to_string(dim))] = static_cast<int>(v);
        } else {
          obj[std::string(to_string(dim))] = v;
        }
      }
    }
    ann.push_back(std::move(obj));
  }
  return {{"doc_id", rec.doc_id},
          {"system_id", rec.system_id},
          {"summary", rec.summary_text},
          {"expert_annotations", std::move(ann)}};
}

// Writes each document line followed by its summaries, in corpus order.
inline void write_corpus(std::ostream& out, const Corpus& corpus) {
  std::unordered_map<std::string, std::vector<const SummaryRecord*>> by_doc;
  for (const auto& s : corpus.summaries) by_doc[s.doc_id].push_back(&s);
  for (const auto& doc : corpus.documents) {
    out << to_json(doc).dump() << '\n';
    for (const auto* s : by_doc[doc.doc_id]) out << to_json(*s).dump() << '\n';
  }
}

namespace detail {

// Uniform integer in [0, bound) from raw engine output (rejection sampling),
// so the result depends only on the engine, not on the standard library.
inline std::uint64_t bounded(std::mt19937_64& rng, std::uint64_t bound) {
  const std::uint64_t limit = std::numeric_limits<std::uint64_t>::max() -
                              std::numeric_limits<std::uint64_t>::max() % bound;
  std::uint64_t x;
  do {
    x = rng();
  } while (x >= limit);
  return x % bound;
}

}  // namespace detail

struct CorpusSplit {
  Corpus dev;
  Corpus test;
};

// Article-level split: a seeded Fisher-Yates shuffle picks
// round-half-up(dev_fraction * |documents|) documents for dev; every summary
// follows its document. Both halves keep file order.
inline CorpusSplit split_corpus(const Corpus& corpus, const SplitSpec& spec) {
  if (corpus.empty()) throw DataError("cannot split an empty corpus");
  if (!(spec.dev_fraction >= 0.0 && spec.dev_fraction <= 1.0)) {
    throw ConfigError("dev fraction must lie in [0, 1]");
  }
  const std::size_t n = corpus.documents.size();
  const auto dev_count =
      static_cast<std::size_t>(std::floor(spec.dev_fraction * static_cast<double>(n) + 0.5));

  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::mt19937_64 rng(spec.seed);
  for (std::size_t i = n; i > 1; --i) {
    std::swap(order[i - 1], order[detail::bounded(rng, i)]);
  }
  std::vector<bool> in_dev(n, false);
  for (std::size_t i = 0; i < dev_count; ++i) in_dev[order[i]] = true;

  CorpusSplit out;
  std::unordered_set<std::string> dev_ids;
  for (std::size_t i = 0; i < n; ++i) {
    if (in_dev[i]) {
      out.dev.documents.push_back(corpus.documents[i]);
      dev_ids.insert(corpus.documents[i].doc_id);
    } else {
      out.test.documents.push_back(corpus.documents[i]);
    }
  }
  for (const auto& s : corpus.summaries) {
    (dev_ids.contains(s.doc_id) ? out.dev : out.test).summaries.push_back(s);
  }
  return out;
}

inline const Document& find_document(const Corpus& corpus, const std::string& doc_id) {
  for (const auto& d : corpus.documents) {
    if (d.doc_id == doc_id) return d;
  }
  throw DataError("dangling doc_id '" + doc_id + "'");
}

}  // namespace rangejudge
