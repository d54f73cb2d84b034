#pragma once

#include <nlohmann/json.hpp>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <memory>
#include <optional>
#include <sstream>
#include <string>
#include <unordered_map>
#include <vector>

#include "rangejudge/cache.hpp"
#include "rangejudge/corpus.hpp"
#include "rangejudge/decode.hpp"
#include "rangejudge/hash.hpp"
#include "rangejudge/http_provider.hpp"
#include "rangejudge/parallel.hpp"
#include "rangejudge/prompts.hpp"
#include "rangejudge/providers.hpp"
#include "rangejudge/stats.hpp"
#include "rangejudge/tuning.hpp"

namespace rangejudge {

inline constexpr const char* kToolVersion = "0.1.0";

enum class DecodeMode { greedy_text, greedy_restricted, contrastive };

inline const char* to_string(DecodeMode m) {
  switch (m) {
    case DecodeMode::greedy_text: return "greedy-text";
    case DecodeMode::greedy_restricted: return "greedy-restricted";
    case DecodeMode::contrastive: return "contrastive";
  }
  return "?";
}

inline DecodeMode parse_mode(std::string_view name) {
  if (name == "greedy-text") return DecodeMode::greedy_text;
  if (name == "greedy-restricted") return DecodeMode::greedy_restricted;
  if (name == "contrastive") return DecodeMode::contrastive;
  throw ConfigError("unknown mode '" + std::string(name) +
                    "' (expected greedy-text, greedy-restricted or contrastive)");
}

struct ExperimentConfig {
  std::filesystem::path corpus_path;
  std::vector<Dimension> dimensions;
  std::vector<ScoreRange> ranges;
  std::vector<DecodeMode> modes;
  ProviderConfig main;
  std::optional<ProviderConfig> asst;
  // Exactly one of these drives contrastive mode.
  std::optional<ContrastiveConfig> contrastive;
  std::optional<Grid> grid;
  SelectionMetric metric = SelectionMetric::spearman;
  SplitSpec split{0.1, kDefaultSplitSeed};
  std::optional<std::filesystem::path> cache_dir;
  std::optional<std::filesystem::path> prompt_dir;
  std::filesystem::path out_dir = "out";
  double max_failure_rate = 0.2;
  std::size_t jobs = 4;
  bool dump_item_logits = false;

  bool has_mode(DecodeMode m) const {
    return std::find(modes.begin(), modes.end(), m) != modes.end();
  }
};

// Checks that need no corpus and no provider call.
inline void validate(const ExperimentConfig& c) {
  if (c.corpus_path.empty()) throw ConfigError("no corpus given");
  if (c.dimensions.empty()) throw ConfigError("no dimension given");
  if (c.ranges.empty()) throw ConfigError("no score range given");
  if (c.modes.empty()) throw ConfigError("no decoding mode given");
  validate(c.main);
  if (c.asst) validate(*c.asst);
  if (c.has_mode(DecodeMode::contrastive)) {
    if (!c.asst) throw ConfigError("contrastive mode requires an assistant provider");
    if (c.contrastive && c.grid) {
      throw ConfigError("give either a fixed lambda/temperature or a grid, not both");
    }
    if (!c.contrastive && !c.grid) {
      throw ConfigError("contrastive mode requires --lambda/--temp or --grid");
    }
    if (c.contrastive) validate(*c.contrastive);
    if (c.grid) validate(*c.grid);
  }
  if (!(c.split.dev_fraction >= 0.0 && c.split.dev_fraction <= 1.0)) {
    throw ConfigError("dev fraction must lie in [0, 1]");
  }
  if (!(c.max_failure_rate >= 0.0 && c.max_failure_rate <= 1.0)) {
    throw ConfigError("max failure rate must lie in [0, 1]");
  }
  for (const auto* p : {&c.main, c.asst ? &*c.asst : nullptr}) {
    if (p && p->is_replay() && !c.cache_dir) {
      throw ConfigError("provider '" + p->provider_id + "' replays from cache but no cache is set");
    }
  }
  if (c.asst && c.asst->provider_id == c.main.provider_id) {
    throw ConfigError("main and assistant providers need distinct ids");
  }
}

inline nlohmann::json to_json(const ExperimentConfig& c) {
  nlohmann::json j;
  j["corpus"] = c.corpus_path.string();
  j["dimensions"] = nlohmann::json::array();
  for (auto d : c.dimensions) j["dimensions"].push_back(to_string(d));
  j["ranges"] = nlohmann::json::array();
  for (const auto& r : c.ranges) j["ranges"].push_back(r.str());
  j["modes"] = nlohmann::json::array();
  for (auto m : c.modes) j["modes"].push_back(to_string(m));
  j["main"] = to_json(c.main);
  j["asst"] = c.asst ? to_json(*c.asst) : nlohmann::json(nullptr);
  j["contrastive"] = c.contrastive ? nlohmann::json{{"lambda", c.contrastive->lambda},
                                                    {"temperature", c.contrastive->temperature}}
                                   : nlohmann::json(nullptr);
  j["grid"] = c.grid ? nlohmann::json{{"lambdas", c.grid->lambdas},
                                      {"temperatures", c.grid->temperatures}}
                     : nlohmann::json(nullptr);
  j["selection_metric"] = to_string(c.metric);
  j["dev_fraction"] = c.split.dev_fraction;
  j["seed"] = c.split.seed;
  j["cache"] = c.cache_dir ? nlohmann::json(c.cache_dir->string()) : nlohmann::json(nullptr);
  j["prompt_dir"] = c.prompt_dir ? nlohmann::json(c.prompt_dir->string()) : nlohmann::json(nullptr);
  j["max_failure_rate"] = c.max_failure_rate;
  j["jobs"] = c.jobs;
  j["dump_item_logits"] = c.dump_item_logits;
  return j;
}

inline ExperimentConfig experiment_config_from_json(const nlohmann::json& j) {
  try {
    ExperimentConfig c;
    c.corpus_path = j.at("corpus").get<std::string>();
    for (const auto& d : j.at("dimensions")) c.dimensions.push_back(parse_dimension(d.get<std::string>()));
    for (const auto& r : j.at("ranges")) c.ranges.push_back(parse_range(r.get<std::string>()));
    for (const auto& m : j.at("modes")) c.modes.push_back(parse_mode(m.get<std::string>()));
    c.main = provider_config_from_json(j.at("main"));
    if (!j.at("asst").is_null()) c.asst = provider_config_from_json(j.at("asst"));
    if (!j.at("contrastive").is_null()) {
      c.contrastive = ContrastiveConfig{j["contrastive"].at("lambda").get<double>(),
                                        j["contrastive"].at("temperature").get<double>()};
    }
    if (!j.at("grid").is_null()) {
      c.grid = Grid{j["grid"].at("lambdas").get<std::vector<double>>(),
                    j["grid"].at("temperatures").get<std::vector<double>>()};
    }
    c.metric = parse_metric(j.at("selection_metric").get<std::string>());
    c.split.dev_fraction = j.at("dev_fraction").get<double>();
    c.split.seed = j.at("seed").get<std::uint64_t>();
    if (!j.at("cache").is_null()) c.cache_dir = j["cache"].get<std::string>();
    if (j.contains("prompt_dir") && !j["prompt_dir"].is_null()) {
      c.prompt_dir = j["prompt_dir"].get<std::string>();
    }
    c.max_failure_rate = j.at("max_failure_rate").get<double>();
    c.jobs = j.value("jobs", std::size_t{4});
    c.dump_item_logits = j.value("dump_item_logits", false);
    return c;
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("experiment config: ") + e.what());
  }
}

struct ItemPrediction {
  std::string doc_id;
  std::string system_id;
  double human = 0.0;
  std::optional<JudgeScore> score;
  std::string error;
};

struct CellResult {
  Dimension dimension;
  ScoreRange range;
  DecodeMode mode;
  std::optional<ContrastiveConfig> contrastive;
  bool tuned = false;
  CorrelationReport report;
  ScoreDistribution histogram;
  ScoreDistribution human_histogram;
  std::vector<ItemPrediction> items;
  bool failure_rate_exceeded = false;
};

struct GridCell {
  Dimension dimension;
  ScoreRange range;
  GridResult result;
  std::size_t dev_items = 0;
};

struct SnapshotCell {
  Dimension dimension;
  ScoreRange range;
  std::string role;  // "main" or "asst"
  std::string provider_id;
  LogitSnapshot snapshot;
  std::vector<std::pair<std::string, std::string>> item_keys;  // (doc_id, system_id) per row
};

struct ExperimentResult {
  std::vector<CellResult> cells;
  std::vector<GridCell> grids;
  std::vector<SnapshotCell> snapshots;
  nlohmann::json manifest;
  bool failure_rate_exceeded = false;
  std::size_t main_backend_calls = 0;
  std::size_t asst_backend_calls = 0;
};

// Maps a normalized quality in [0, 1] onto the SummEval 1-5 scale and back.
inline double quality_from_human(double human) {
  return (human - kAnnotationMin) / static_cast<double>(kAnnotationMax - kAnnotationMin);
}

// Builds the provider stack for one config: backend (HTTP or synthetic), then
// the response cache in front when one is configured.
inline std::unique_ptr<Provider> make_provider(const ProviderConfig& cfg, QualitySource quality,
                                               std::shared_ptr<ResponseCache> cache) {
  std::unique_ptr<Provider> backend;
  if (cfg.is_synthetic()) {
    backend = std::make_unique<SyntheticProvider>(cfg, std::move(quality));
  } else if (cfg.is_http()) {
    backend = std::make_unique<HttpProvider>(cfg);
  } else if (!cfg.is_replay()) {
    throw ConfigError("provider '" + cfg.provider_id + "': unsupported endpoint");
  }
  if (!cache) {
    if (!backend) throw ConfigError("provider '" + cfg.provider_id + "' needs a cache to replay");
    return backend;
  }
  return std::make_unique<CachedProvider>(cfg, std::move(cache), std::move(backend));
}

namespace detail {

struct PreparedItems {
  std::vector<const SummaryRecord*> records;
  std::vector<std::string> prompts;
  std::vector<double> human;
};

inline PreparedItems prepare_items(const Corpus& corpus, Dimension dim, const ScoreRange& range,
                                   const PromptLibrary& prompts,
                                   const std::unordered_map<std::string, const Document*>& docs) {
  PreparedItems out;
  for (const auto& s : corpus.summaries) {
    out.records.push_back(&s);
    out.prompts.push_back(prompts.render(dim, range, docs.at(s.doc_id)->text, s.summary_text));
    out.human.push_back(aggregate_human_score(s, dim));
  }
  return out;
}

struct Fetched {
  std::optional<TokenLogits> logits;
  std::string error;
};

inline std::vector<Fetched> fetch_logits(Provider& p, const std::vector<std::string>& prompts,
                                         const std::vector<std::string>& labels,
                                         std::size_t jobs) {
  return parallel_map(prompts.size(), jobs, [&](std::size_t i) {
    Fetched f;
    try {
      f.logits = first_token_logits(p, prompts[i], labels);
    } catch (const ProviderError& e) {
      f.error = e.what();
    }
    return f;
  });
}

struct FetchedText {
  std::optional<std::string> text;
  std::string error;
};

inline std::vector<FetchedText> fetch_completions(Provider& p,
                                                  const std::vector<std::string>& prompts,
                                                  std::size_t jobs) {
  return parallel_map(prompts.size(), jobs, [&](std::size_t i) {
    FetchedText f;
    try {
      f.text = p.complete(prompts[i]);
    } catch (const ProviderError& e) {
      f.error = e.what();
    }
    return f;
  });
}

inline std::string read_file_bytes(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

inline ScoreDistribution human_histogram(std::span<const double> human, const ScoreRange& range) {
  // Human means on 1-5 rounded half up, then shifted into the judged window.
  std::vector<JudgeScore> shifted;
  for (double h : human) {
    int v = static_cast<int>(std::floor(h + 0.5)) - kAnnotationMin + range.min();
    shifted.push_back({std::clamp(v, range.min(), range.max()), Provenance::parsed});
  }
  return score_histogram(shifted, range);
}

}  // namespace detail

// Runs every (dimension, range, mode) cell over the test split. Item-level
// provider failures are recorded; configuration problems throw ConfigError
// before any provider call.
inline ExperimentResult run_experiment(const ExperimentConfig& config) {
  validate(config);
  const Corpus corpus = load_corpus(config.corpus_path);
  const CorpusSplit split = split_corpus(corpus, config.split);
  const bool tuning = config.has_mode(DecodeMode::contrastive) && config.grid.has_value();
  if (tuning && split.dev.documents.empty()) {
    throw ConfigError("grid search requires a dev split with at least one document");
  }
  if (split.test.summaries.empty()) throw DataError("test split has no summaries");

  const PromptLibrary prompts =
      config.prompt_dir ? PromptLibrary::from_directory(*config.prompt_dir) : PromptLibrary{};

  std::unordered_map<std::string, const Document*> docs;
  for (const auto& d : corpus.documents) docs[d.doc_id] = &d;
  for (auto dim : config.dimensions) {
    for (const auto& s : corpus.summaries) (void)aggregate_human_score(s, dim);
  }

  // Synthetic judges see the normalized human score of the summary behind
  // each prompt.
  auto quality_table = std::make_shared<std::unordered_map<std::string, SyntheticItem>>();
  if (config.main.is_synthetic() || (config.asst && config.asst->is_synthetic())) {
    for (auto dim : config.dimensions) {
      for (const auto& range : config.ranges) {
        const auto labels = candidate_labels(range);
        for (const auto& s : corpus.summaries) {
          const auto prompt = prompts.render(dim, range, docs.at(s.doc_id)->text, s.summary_text);
          (*quality_table)[sha256_hex(prompt)] =
              SyntheticItem{quality_from_human(aggregate_human_score(s, dim)), labels};
        }
      }
    }
  }
  QualitySource quality = [quality_table](std::string_view prompt) -> std::optional<SyntheticItem> {
    auto it = quality_table->find(sha256_hex(prompt));
    if (it == quality_table->end()) return std::nullopt;
    return it->second;
  };

  std::shared_ptr<ResponseCache> cache;
  if (config.cache_dir) cache = std::make_shared<ResponseCache>(*config.cache_dir);
  auto main = make_provider(config.main, quality, cache);
  std::unique_ptr<Provider> asst;
  if (config.asst) asst = make_provider(*config.asst, quality, cache);

  const bool need_main_logits = config.has_mode(DecodeMode::greedy_restricted) ||
                                config.has_mode(DecodeMode::contrastive);
  const bool need_asst_logits = config.has_mode(DecodeMode::contrastive);
  for (const auto& range : config.ranges) {
    const auto labels = candidate_labels(range);
    if (need_main_logits) main->validate_labels(labels);
    if (need_asst_logits) asst->validate_labels(labels);
  }

  ExperimentResult result;
  nlohmann::json manifest_cells = nlohmann::json::array();

  for (auto dim : config.dimensions) {
    for (const auto& range : config.ranges) {
      const auto labels = candidate_labels(range);
      const auto test = detail::prepare_items(split.test, dim, range, prompts, docs);

      std::vector<detail::Fetched> main_logits, asst_logits;
      std::vector<detail::FetchedText> texts;
      if (need_main_logits) main_logits = detail::fetch_logits(*main, test.prompts, labels, config.jobs);
      if (need_asst_logits) asst_logits = detail::fetch_logits(*asst, test.prompts, labels, config.jobs);
      if (config.has_mode(DecodeMode::greedy_text)) {
        texts = detail::fetch_completions(*main, test.prompts, config.jobs);
      }

      std::optional<ContrastiveConfig> chosen = config.contrastive;
      if (tuning) {
        const auto dev = detail::prepare_items(split.dev, dim, range, prompts, docs);
        const auto pairs = fetch_logit_pairs(*main, *asst, dev.prompts, labels, config.jobs);
        GridCell g{dim, range, evaluate_grid(pairs, dev.human, range, *config.grid, config.metric),
                   dev.prompts.size()};
        chosen = g.result.best;
        result.grids.push_back(std::move(g));
      }

      for (auto mode : config.modes) {
        CellResult cell{dim, range, mode, std::nullopt, false, {},
                        score_histogram({}, range), score_histogram({}, range), {}, false};
        std::vector<std::optional<JudgeScore>> preds(test.prompts.size());
        std::vector<JudgeScore> judged;
        for (std::size_t i = 0; i < test.prompts.size(); ++i) {
          ItemPrediction item{test.records[i]->doc_id, test.records[i]->system_id, test.human[i],
                              std::nullopt, {}};
          switch (mode) {
            case DecodeMode::greedy_text:
              if (texts[i].text) {
                item.score = parse_score(*texts[i].text, range);
              } else {
                item.error = texts[i].error;
              }
              break;
            case DecodeMode::greedy_restricted:
              if (main_logits[i].logits) {
                item.score = select_score({labels, temperature_log_probs(*main_logits[i].logits, 1.0)},
                                          range);
              } else {
                item.error = main_logits[i].error;
              }
              break;
            case DecodeMode::contrastive:
              if (main_logits[i].logits && asst_logits[i].logits) {
                item.score = select_score(
                    contrastive_adjust(*main_logits[i].logits, *asst_logits[i].logits, *chosen), range);
              } else {
                item.error = !main_logits[i].logits ? main_logits[i].error : asst_logits[i].error;
              }
              break;
          }
          preds[i] = item.score;
          if (item.score) judged.push_back(*item.score);
          cell.items.push_back(std::move(item));
        }
        if (mode == DecodeMode::contrastive) {
          cell.contrastive = chosen;
          cell.tuned = tuning;
        }
        cell.report = correlation_report(preds, test.human);
        cell.histogram = score_histogram(judged, range);
        cell.human_histogram = detail::human_histogram(test.human, range);
        const double rate =
            static_cast<double>(cell.report.failed) / static_cast<double>(cell.report.attempted());
        cell.failure_rate_exceeded = rate > config.max_failure_rate;
        result.failure_rate_exceeded = result.failure_rate_exceeded || cell.failure_rate_exceeded;

        nlohmann::json mc = {{"dimension", to_string(dim)},
                             {"range", range.str()},
                             {"mode", to_string(mode)}};
        if (cell.contrastive) {
          mc["lambda"] = cell.contrastive->lambda;
          mc["temperature"] = cell.contrastive->temperature;
          mc["hyperparameters"] = tuning ? "grid" : "fixed";
        }
        manifest_cells.push_back(std::move(mc));
        result.cells.push_back(std::move(cell));
      }

      auto snapshot = [&](const std::vector<detail::Fetched>& fetched, const char* role,
                          const Provider& p) {
        std::vector<TokenLogits> ok;
        std::vector<std::pair<std::string, std::string>> keys;
        for (std::size_t i = 0; i < fetched.size(); ++i) {
          if (!fetched[i].logits) continue;
          ok.push_back(*fetched[i].logits);
          keys.emplace_back(test.records[i]->doc_id, test.records[i]->system_id);
        }
        if (ok.empty()) return;
        result.snapshots.push_back({dim, range, role, p.id(),
                                    logit_snapshot(ok, config.dump_item_logits), std::move(keys)});
      };
      if (need_main_logits) snapshot(main_logits, "main", *main);
      if (need_asst_logits) snapshot(asst_logits, "asst", *asst);
    }
  }

  result.main_backend_calls = main->backend_calls();
  result.asst_backend_calls = asst ? asst->backend_calls() : 0;

  nlohmann::json dev_ids = nlohmann::json::array();
  for (const auto& d : split.dev.documents) dev_ids.push_back(d.doc_id);
  const auto config_json = to_json(config);
  result.manifest = {
      {"tool", "rangejudge"},
      {"version", kToolVersion},
      {"config", config_json},
      {"config_sha256", sha256_hex(config_json.dump())},
      {"corpus_sha256", sha256_hex(detail::read_file_bytes(config.corpus_path))},
      {"split",
       {{"seed", config.split.seed},
        {"dev_fraction", config.split.dev_fraction},
        {"dev_documents", split.dev.documents.size()},
        {"test_documents", split.test.documents.size()},
        {"dev_doc_ids", std::move(dev_ids)}}},
      {"providers",
       {{"main", {{"id", config.main.provider_id}, {"model", config.main.model_name}}},
        {"asst", config.asst ? nlohmann::json{{"id", config.asst->provider_id},
                                              {"model", config.asst->model_name}}
                             : nlohmann::json(nullptr)}}},
      {"kendall_variant", kKendallVariant},
      {"selection_metric", to_string(config.metric)},
      {"cells", std::move(manifest_cells)}};
  return result;
}

}  // namespace rangejudge
