#pragma once

#include <nlohmann/json.hpp>

#include <istream>
#include <ostream>
#include <string>
#include <unordered_map>
#include <vector>

#include "rangejudge/corpus.hpp"

namespace rangejudge {

inline constexpr std::size_t kSummEvalDocuments = 100;
inline constexpr std::size_t kSummEvalSummariesPerDocument = 16;

struct ConversionResult {
  Corpus corpus;
  std::vector<std::string> warnings;
};

// Reads the upstream SummEval release (model_annotations.aligned.paired.jsonl:
// one line per summary with `id`, `model_id`, `decoded`, `text` and
// `expert_annotations`) and builds the canonical corpus. Fluency annotations
// and turker annotations are dropped.
inline ConversionResult convert_summeval(std::istream& in) {
  ConversionResult result;
  std::unordered_map<std::string, std::size_t> doc_index;
  std::vector<std::vector<SummaryRecord>> grouped;

  auto field = [](const nlohmann::json& obj, const char* key, std::size_t line_no) {
    auto it = obj.find(key);
    if (it == obj.end() || !it->is_string() || it->get_ref<const std::string&>().empty()) {
      throw DataError("upstream line " + std::to_string(line_no) + ": missing or invalid field '" +
                      key + "'");
    }
    return it->get<std::string>();
  };

  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    nlohmann::json obj;
    try {
      obj = nlohmann::json::parse(line);
    } catch (const nlohmann::json::parse_error& e) {
      throw DataError("upstream line " + std::to_string(line_no) + ": invalid JSON: " + e.what());
    }
    if (!obj.is_object()) {
      throw DataError("upstream line " + std::to_string(line_no) + ": expected an object");
    }
    SummaryRecord rec;
    rec.doc_id = field(obj, "id", line_no);
    rec.system_id = field(obj, "model_id", line_no);
    rec.summary_text = field(obj, "decoded", line_no);
    const std::string text = field(obj, "text", line_no);

    auto ann = obj.find("expert_annotations");
    if (ann == obj.end() || !ann->is_array() || ann->empty()) {
      throw DataError("upstream line " + std::to_string(line_no) +
                      ": missing or invalid field 'expert_annotations'");
    }
    for (const auto& expert : *ann) {
      for (auto dim : kAllDimensions) {
        const std::string key(to_string(dim));
        auto v = expert.find(key);
        if (v == expert.end() || !v->is_number()) {
          throw DataError("upstream line " + std::to_string(line_no) +
                          ": missing or invalid field 'expert_annotations[]." + key + "'");
        }
        rec.annotations[dim].push_back(v->get<double>());
      }
    }

    auto [it, inserted] = doc_index.try_emplace(rec.doc_id, result.corpus.documents.size());
    if (inserted) {
      result.corpus.documents.push_back(Document{rec.doc_id, text});
      grouped.emplace_back();
    }
    grouped[it->second].push_back(std::move(rec));
  }

  if (result.corpus.documents.empty()) throw DataError("upstream file has no records");
  if (result.corpus.documents.size() != kSummEvalDocuments) {
    result.warnings.push_back("expected " + std::to_string(kSummEvalDocuments) +
                              " documents, found " +
                              std::to_string(result.corpus.documents.size()));
  }
  for (std::size_t i = 0; i < grouped.size(); ++i) {
    if (grouped[i].size() != kSummEvalSummariesPerDocument) {
      result.warnings.push_back("document '" + result.corpus.documents[i].doc_id + "' has " +
                                std::to_string(grouped[i].size()) + " summaries, expected " +
                                std::to_string(kSummEvalSummariesPerDocument));
    }
  }
  for (auto& group : grouped) {
    for (auto& rec : group) result.corpus.summaries.push_back(std::move(rec));
  }
  return result;
}

}  // namespace rangejudge
