#pragma once

#include <fmt/format.h>
#include <nlohmann/json.hpp>

#include <filesystem>
#include <fstream>
#include <string>
#include <string_view>
#include <vector>

#include "rangejudge/experiment.hpp"

namespace rangejudge {

// Minimal RFC 4180 writer: fields with a comma, quote or newline are quoted.
class CsvWriter {
 public:
  explicit CsvWriter(const std::filesystem::path& path) : out_(path, std::ios::binary) {
    if (!out_) throw DataError("cannot write '" + path.string() + "'");
  }

  CsvWriter& row(const std::vector<std::string>& fields) {
    for (std::size_t i = 0; i < fields.size(); ++i) {
      if (i) out_ << ',';
      out_ << escape(fields[i]);
    }
    out_ << '\n';
    return *this;
  }

  static std::string escape(std::string_view f) {
    if (f.find_first_of(",\"\n\r") == std::string_view::npos) return std::string(f);
    std::string s = "\"";
    for (char c : f) {
      if (c == '"') s += '"';
      s += c;
    }
    return s + '"';
  }

 private:
  std::ofstream out_;
};

// Shortest representation that round-trips.
inline std::string num(double v) { return fmt::format("{}", v); }
inline std::string num(std::size_t v) { return std::to_string(v); }

inline std::string lambda_field(const std::optional<ContrastiveConfig>& c) {
  return c ? num(c->lambda) : "";
}
inline std::string temp_field(const std::optional<ContrastiveConfig>& c) {
  return c ? num(c->temperature) : "";
}

inline nlohmann::json to_json(const CorrelationReport& r) {
  return {{"pearson", r.pearson.value},
          {"spearman", r.spearman.value},
          {"kendall", r.kendall.value},
          {"kendall_variant", kKendallVariant},
          {"pearson_degenerate", r.pearson.degenerate},
          {"spearman_degenerate", r.spearman.degenerate},
          {"kendall_degenerate", r.kendall.degenerate},
          {"n", r.n},
          {"failed", r.failed},
          {"parsed", r.provenance.parsed},
          {"clamped_high", r.provenance.clamped_high},
          {"clamped_low", r.provenance.clamped_low},
          {"fallback_min", r.provenance.fallback_min}};
}

// Writes every report file of a run into `dir`.
inline void write_reports(const ExperimentResult& result, const ExperimentConfig& config,
                          const std::filesystem::path& dir) {
  std::filesystem::create_directories(dir);
  const std::string main_id = config.main.provider_id;
  const std::string asst_id = config.asst ? config.asst->provider_id : "";

  {
    CsvWriter csv(dir / "correlations.csv");
    csv.row({"main", "asst", "mode", "dimension", "range", "lambda", "temperature", "tuned",
             "pearson", "spearman", "kendall_tau_b", "degenerate", "n", "failed", "parsed",
             "clamped_high", "clamped_low", "fallback_min", "failure_rate_exceeded"});
    nlohmann::json rows = nlohmann::json::array();
    for (const auto& c : result.cells) {
      const bool contrastive = c.mode == DecodeMode::contrastive;
      const auto& r = c.report;
      csv.row({main_id, contrastive ? asst_id : "", to_string(c.mode),
               std::string(to_string(c.dimension)), c.range.str(), lambda_field(c.contrastive),
               temp_field(c.contrastive), contrastive ? (c.tuned ? "grid" : "fixed") : "",
               num(r.pearson.value), num(r.spearman.value), num(r.kendall.value),
               r.degenerate() ? "1" : "0", num(r.n), num(r.failed), num(r.provenance.parsed),
               num(r.provenance.clamped_high), num(r.provenance.clamped_low),
               num(r.provenance.fallback_min), c.failure_rate_exceeded ? "1" : "0"});
      nlohmann::json row = to_json(r);
      row["main"] = main_id;
      row["asst"] = contrastive ? nlohmann::json(asst_id) : nlohmann::json(nullptr);
      row["mode"] = to_string(c.mode);
      row["dimension"] = to_string(c.dimension);
      row["range"] = c.range.str();
      row["lambda"] = c.contrastive ? nlohmann::json(c.contrastive->lambda) : nlohmann::json(nullptr);
      row["temperature"] =
          c.contrastive ? nlohmann::json(c.contrastive->temperature) : nlohmann::json(nullptr);
      row["failure_rate_exceeded"] = c.failure_rate_exceeded;
      rows.push_back(std::move(row));
    }
    std::ofstream(dir / "correlations.json", std::ios::binary) << rows.dump(2) << '\n';
  }

  {
    CsvWriter csv(dir / "histograms.csv");
    csv.row({"dimension", "range", "source", "score", "count"});
    for (const auto& c : result.cells) {
      for (const auto& [score, count] : c.histogram.counts) {
        csv.row({std::string(to_string(c.dimension)), c.range.str(), to_string(c.mode),
                 std::to_string(score), num(count)});
      }
    }
    // Human distribution once per (dimension, range).
    for (std::size_t i = 0; i < result.cells.size(); ++i) {
      const auto& c = result.cells[i];
      if (i > 0 && result.cells[i - 1].dimension == c.dimension &&
          result.cells[i - 1].range == c.range) {
        continue;
      }
      for (const auto& [score, count] : c.human_histogram.counts) {
        csv.row({std::string(to_string(c.dimension)), c.range.str(), "human",
                 std::to_string(score), num(count)});
      }
    }
  }

  {
    CsvWriter csv(dir / "predictions.csv");
    csv.row({"dimension", "range", "mode", "doc_id", "system_id", "human", "score",
             "provenance", "error"});
    for (const auto& c : result.cells) {
      for (const auto& it : c.items) {
        csv.row({std::string(to_string(c.dimension)), c.range.str(), to_string(c.mode), it.doc_id,
                 it.system_id, num(it.human), it.score ? std::to_string(it.score->value) : "",
                 it.score ? to_string(it.score->provenance) : "failed", it.error});
      }
    }
  }

  {
    CsvWriter csv(dir / "logits.csv");
    csv.row({"dimension", "range", "role", "provider", "label", "mean_logit"});
    for (const auto& s : result.snapshots) {
      for (std::size_t i = 0; i < s.snapshot.labels.size(); ++i) {
        csv.row({std::string(to_string(s.dimension)), s.range.str(), s.role, s.provider_id,
                 s.snapshot.labels[i], num(s.snapshot.mean_logit[i])});
      }
    }
  }

  if (config.dump_item_logits) {
    CsvWriter csv(dir / "item_logits.csv");
    csv.row({"dimension", "range", "role", "provider", "doc_id", "system_id", "label", "logit"});
    for (const auto& s : result.snapshots) {
      for (std::size_t r = 0; r < s.snapshot.per_item.size(); ++r) {
        for (std::size_t i = 0; i < s.snapshot.labels.size(); ++i) {
          csv.row({std::string(to_string(s.dimension)), s.range.str(), s.role, s.provider_id,
                   s.item_keys[r].first, s.item_keys[r].second, s.snapshot.labels[i],
                   num(s.snapshot.per_item[r][i])});
        }
      }
    }
  }

  if (!result.grids.empty()) {
    CsvWriter grid(dir / "grid.csv");
    grid.row({"dimension", "range", "lambda", "temperature", "pearson", "spearman",
              "kendall_tau_b", "n", "failed", "status"});
    CsvWriter summary(dir / "grid_summary.csv");
    summary.row({"main", "asst", "dimension", "range", "lambda", "temperature",
                 "selection_metric", "dev_value", "dev_items"});
    for (const auto& g : result.grids) {
      const std::string dim(to_string(g.dimension));
      for (const auto& e : g.result.table) {
        grid.row({dim, g.range.str(), num(e.config.lambda), num(e.config.temperature),
                  num(e.report.pearson.value), num(e.report.spearman.value),
                  num(e.report.kendall.value), num(e.report.n), num(e.report.failed), "ok"});
      }
      for (const auto& x : g.result.excluded) {
        grid.row({dim, g.range.str(), num(x.config.lambda), num(x.config.temperature), "", "", "",
                  "", "", "excluded: " + x.diagnostic});
      }
      summary.row({main_id, asst_id, dim, g.range.str(), num(g.result.best.lambda),
                   num(g.result.best.temperature), to_string(g.result.metric),
                   num(g.result.best_value), num(g.dev_items)});
    }
  }

  std::ofstream(dir / "manifest.json", std::ios::binary) << result.manifest.dump(2) << '\n';
}

}  // namespace rangejudge
