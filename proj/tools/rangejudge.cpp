// rangejudge: score-range bias measurement and contrastive-decoding judge.
//
//   rangejudge run --corpus c.jsonl --providers p.json --main M [--asst A] ...
//   rangejudge convert-summeval --input paired.jsonl --output corpus.jsonl
//   rangejudge synth-corpus --output corpus.jsonl
//   rangejudge prompt --dimension coherence --range 2-6 --document d --summary s

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include <fstream>
#include <iostream>
#include <sstream>

#include "rangejudge/rangejudge.hpp"

namespace rj = rangejudge;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitConfig = 1;
constexpr int kExitData = 2;
constexpr int kExitFailureRate = 3;

nlohmann::json read_json_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw rj::ConfigError("cannot open '" + path + "'");
  try {
    return nlohmann::json::parse(in);
  } catch (const nlohmann::json::parse_error& e) {
    throw rj::ConfigError("'" + path + "': " + e.what());
  }
}

rj::ProviderConfig find_provider(const nlohmann::json& file, const std::string& id) {
  const auto it = file.find("providers");
  if (it == file.end() || !it->is_array()) {
    throw rj::ConfigError("providers file needs a \"providers\" array");
  }
  for (const auto& p : *it) {
    if (p.value("id", std::string{}) == id) return rj::provider_config_from_json(p);
  }
  throw rj::ConfigError("provider '" + id + "' not found in providers file");
}

struct RunArgs {
  std::string manifest;
  std::string corpus;
  std::string providers;
  std::string main_id;
  std::string asst_id;
  std::vector<std::string> ranges;
  std::vector<std::string> dimensions;
  std::vector<std::string> modes;
  std::optional<double> lambda;
  std::optional<double> temp;
  std::string grid;
  std::string metric = "spearman";
  std::uint64_t seed = rj::kDefaultSplitSeed;
  double dev_fraction = 0.1;
  std::string cache;
  std::string prompts;
  std::string out = "out";
  double max_failure_rate = 0.2;
  std::size_t jobs = 4;
  bool dump_item_logits = false;
};

rj::ExperimentConfig build_config(const RunArgs& a) {
  if (!a.manifest.empty()) {
    auto manifest = read_json_file(a.manifest);
    if (!manifest.contains("config")) throw rj::ConfigError("manifest has no config");
    auto cfg = rj::experiment_config_from_json(manifest["config"]);
    cfg.out_dir = a.out;
    return cfg;
  }
  if (a.providers.empty() || a.main_id.empty()) {
    throw rj::ConfigError("run needs --providers and --main (or --manifest)");
  }
  const auto providers = read_json_file(a.providers);
  rj::ExperimentConfig cfg;
  cfg.corpus_path = a.corpus;
  for (const auto& d : a.dimensions) cfg.dimensions.push_back(rj::parse_dimension(d));
  if (cfg.dimensions.empty()) cfg.dimensions.push_back(rj::Dimension::coherence);
  for (const auto& r : a.ranges) cfg.ranges.push_back(rj::parse_range(r));
  for (const auto& m : a.modes) cfg.modes.push_back(rj::parse_mode(m));
  cfg.main = find_provider(providers, a.main_id);
  if (!a.asst_id.empty()) cfg.asst = find_provider(providers, a.asst_id);
  if (a.lambda || a.temp) {
    if (!a.lambda || !a.temp) throw rj::ConfigError("--lambda and --temp go together");
    cfg.contrastive = rj::ContrastiveConfig{*a.lambda, *a.temp};
  }
  if (!a.grid.empty()) cfg.grid = rj::parse_grid(a.grid);
  cfg.metric = rj::parse_metric(a.metric);
  cfg.split = {a.dev_fraction, a.seed};
  if (!a.cache.empty()) cfg.cache_dir = a.cache;
  if (!a.prompts.empty()) cfg.prompt_dir = a.prompts;
  cfg.out_dir = a.out;
  cfg.max_failure_rate = a.max_failure_rate;
  cfg.jobs = a.jobs;
  cfg.dump_item_logits = a.dump_item_logits;
  return cfg;
}

int run_command(const RunArgs& args) {
  const auto cfg = build_config(args);
  const auto result = rj::run_experiment(cfg);
  rj::write_reports(result, cfg, cfg.out_dir);

  for (const auto& c : result.cells) {
    std::cout << rj::to_string(c.dimension) << " " << c.range.str() << " "
              << rj::to_string(c.mode);
    if (c.contrastive) {
      std::cout << " (lambda=" << rj::num(c.contrastive->lambda)
                << ", t=" << rj::num(c.contrastive->temperature) << ")";
    }
    std::cout << ": pearson=" << rj::num(c.report.pearson.value)
              << " spearman=" << rj::num(c.report.spearman.value)
              << " kendall=" << rj::num(c.report.kendall.value) << " n=" << c.report.n
              << " failed=" << c.report.failed << (c.report.degenerate() ? " [degenerate]" : "")
              << "\n";
  }
  std::cout << "reports written to " << cfg.out_dir.string() << "\n";
  if (result.failure_rate_exceeded) {
    std::cerr << "error: item failure rate above " << cfg.max_failure_rate
              << " in at least one cell\n";
    return kExitFailureRate;
  }
  return kExitOk;
}

int convert_command(const std::string& input, const std::string& output) {
  std::ifstream in(input, std::ios::binary);
  if (!in) throw rj::DataError("cannot open '" + input + "'");
  const auto converted = rj::convert_summeval(in);
  for (const auto& w : converted.warnings) std::cerr << "warning: " << w << "\n";
  std::ofstream out(output, std::ios::binary | std::ios::trunc);
  if (!out) throw rj::DataError("cannot write '" + output + "'");
  rj::write_corpus(out, converted.corpus);
  std::cout << converted.corpus.documents.size() << " documents, "
            << converted.corpus.summaries.size() << " summaries\n";
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Score-range bias measurement and contrastive-decoding LLM judge"};
  app.require_subcommand(1);

  RunArgs run;
  auto* run_cmd = app.add_subcommand("run", "Judge a corpus and write correlation reports");
  run_cmd->add_option("--manifest", run.manifest, "Re-run the config stored in a manifest.json");
  run_cmd->add_option("--corpus", run.corpus, "Canonical JSON Lines corpus");
  run_cmd->add_option("--providers", run.providers, "Provider config file (JSON)");
  run_cmd->add_option("--main", run.main_id, "Main provider id");
  run_cmd->add_option("--asst", run.asst_id, "Assistant provider id");
  run_cmd->add_option("--range", run.ranges, "Score range MIN-MAX (repeatable)");
  run_cmd->add_option("--dimension", run.dimensions,
                      "coherence | relevance | consistency (repeatable)");
  run_cmd->add_option("--mode", run.modes,
                      "greedy-text | greedy-restricted | contrastive (repeatable)");
  run_cmd->add_option("--lambda", run.lambda, "Contrastive weight on the assistant");
  run_cmd->add_option("--temp", run.temp, "Assistant temperature (> 0)");
  run_cmd->add_option("--grid", run.grid,
                      "Tune (lambda, t) on the dev split: 'default' or 'L1,L2:T1,T2'");
  run_cmd->add_option("--metric", run.metric, "Grid selection metric")->capture_default_str();
  run_cmd->add_option("--seed", run.seed, "Dev/test split seed")->capture_default_str();
  run_cmd->add_option("--dev-fraction", run.dev_fraction, "Fraction of articles held out as dev")
      ->capture_default_str();
  run_cmd->add_option("--cache", run.cache, "Response cache directory");
  run_cmd->add_option("--prompts", run.prompts, "Directory of <dimension>.txt prompt overrides");
  run_cmd->add_option("--out", run.out, "Output directory")->capture_default_str();
  run_cmd->add_option("--max-failure-rate", run.max_failure_rate,
                      "Per-cell item failure rate above which the run exits 3")
      ->capture_default_str();
  run_cmd->add_option("--jobs", run.jobs, "Concurrent provider calls")->capture_default_str();
  run_cmd->add_flag("--dump-item-logits", run.dump_item_logits,
                    "Also write per-item first-token logits");

  std::string convert_in, convert_out;
  auto* convert_cmd = app.add_subcommand(
      "convert-summeval", "Convert the SummEval paired annotations file to the canonical corpus");
  convert_cmd->add_option("--input", convert_in, "model_annotations.aligned.paired.jsonl")
      ->required();
  convert_cmd->add_option("--output", convert_out, "Canonical corpus path")->required();

  rj::SyntheticCorpusSpec synth;
  std::string synth_out;
  auto* synth_cmd = app.add_subcommand("synth-corpus", "Write a synthetic SummEval-shaped corpus");
  synth_cmd->add_option("--output", synth_out, "Output path")->required();
  synth_cmd->add_option("--documents", synth.documents)->capture_default_str();
  synth_cmd->add_option("--summaries", synth.summaries_per_document)->capture_default_str();
  synth_cmd->add_option("--annotators", synth.annotators)->capture_default_str();
  synth_cmd->add_option("--annotator-noise", synth.annotator_noise)->capture_default_str();
  synth_cmd->add_option("--seed", synth.seed)->capture_default_str();

  std::string prompt_dim = "coherence", prompt_range = "1-5", prompt_doc, prompt_sum,
              prompt_dump, prompt_dir;
  auto* prompt_cmd = app.add_subcommand("prompt", "Render a judge prompt or dump the templates");
  prompt_cmd->add_option("--dimension", prompt_dim)->capture_default_str();
  prompt_cmd->add_option("--range", prompt_range)->capture_default_str();
  prompt_cmd->add_option("--document", prompt_doc, "Article text");
  prompt_cmd->add_option("--summary", prompt_sum, "Summary text");
  prompt_cmd->add_option("--prompts", prompt_dir, "Directory of prompt overrides");
  prompt_cmd->add_option("--dump", prompt_dump, "Write the built-in templates to this directory");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kExitOk : kExitConfig;
  }

  try {
    if (*run_cmd) return run_command(run);
    if (*convert_cmd) return convert_command(convert_in, convert_out);
    if (*synth_cmd) {
      std::ofstream out(synth_out, std::ios::binary | std::ios::trunc);
      if (!out) throw rj::DataError("cannot write '" + synth_out + "'");
      rj::write_corpus(out, rj::make_synthetic_corpus(synth));
      return kExitOk;
    }
    if (*prompt_cmd) {
      if (!prompt_dump.empty()) {
        std::filesystem::create_directories(prompt_dump);
        for (auto d : rj::kAllDimensions) {
          std::ofstream(std::filesystem::path(prompt_dump) / (std::string(rj::to_string(d)) + ".txt"),
                        std::ios::binary)
              << rj::builtin_template(d);
        }
        return kExitOk;
      }
      const auto lib = prompt_dir.empty() ? rj::PromptLibrary{}
                                          : rj::PromptLibrary::from_directory(prompt_dir);
      std::cout << lib.render(rj::parse_dimension(prompt_dim), rj::parse_range(prompt_range),
                              prompt_doc.empty() ? "{{Document}}" : prompt_doc,
                              prompt_sum.empty() ? "{{Summary}}" : prompt_sum)
                << "\n";
      return kExitOk;
    }
  } catch (const rj::ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return kExitConfig;
  } catch (const rj::DataError& e) {
    std::cerr << "data error: " << e.what() << "\n";
    return kExitData;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitData;
  }
  return kExitOk;
}
