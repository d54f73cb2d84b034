#pragma once

#include <nlohmann/json.hpp>

#include <atomic>
#include <bit>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <functional>
#include <memory>
#include <numbers>
#include <optional>
#include <random>
#include <string>
#include <string_view>
#include <vector>

#include "rangejudge/error.hpp"
#include "rangejudge/hash.hpp"

namespace rangejudge {

// Raw logits come from local or synthetic models; HTTP backends return
// log-probabilities. The two differ by a per-item constant, which every
// downstream softmax absorbs.
enum class LogitKind { raw_logits, log_probs };

inline const char* to_string(LogitKind k) {
  return k == LogitKind::raw_logits ? "raw_logits" : "log_probs";
}

// First-output-token scores over the candidate labels, in label order.
struct TokenLogits {
  std::vector<std::string> labels;
  std::vector<double> logits;
  std::string provider_id;
  LogitKind kind = LogitKind::raw_logits;

  friend bool operator==(const TokenLogits&, const TokenLogits&) = default;
};

inline void validate(const TokenLogits& t) {
  if (t.labels.size() != t.logits.size()) {
    throw ProviderError("token logits: " + std::to_string(t.labels.size()) + " labels but " +
                        std::to_string(t.logits.size()) + " values");
  }
  for (double v : t.logits) {
    if (!std::isfinite(v)) throw ProviderError("token logits: non-finite value");
  }
}

// Synthetic family bias defined over label *values*, so the same model
// prefers the same token whatever window the prompt asks for.
struct FamilyBias {
  double peak = 0.0;
  double amplitude = 0.0;
  double width = 1.0;

  std::vector<double> over(const std::vector<std::string>& labels, double gain = 1.0) const {
    std::vector<double> bias;
    bias.reserve(labels.size());
    for (const auto& label : labels) {
      double value = 0.0;
      try {
        value = std::stod(label);
      } catch (const std::exception&) {
        throw ConfigError("synthetic provider needs numeric labels, got '" + label + "'");
      }
      const double z = (value - peak) / width;
      bias.push_back(gain * amplitude * std::exp(-0.5 * z * z));
    }
    return bias;
  }
};

struct SyntheticSpec {
  double signal_weight = 1.0;
  FamilyBias family;
  double bias_gain = 1.0;
  double noise_scale = 0.0;
  std::uint64_t seed = 0;
  std::optional<std::string> forced_answer;
};

struct ProviderConfig {
  std::string provider_id;
  // http(s) URL, "synthetic" or "replay".
  std::string endpoint;
  std::string model_name;
  std::chrono::milliseconds timeout{60'000};
  int max_retries = 2;
  std::chrono::milliseconds retry_backoff{500};
  int top_logprobs = 20;
  int max_tokens = 8;
  std::string api_key_env = "RANGEJUDGE_API_KEY";
  bool allow_multichar_labels = false;
  std::optional<SyntheticSpec> synthetic;

  bool is_synthetic() const { return endpoint == "synthetic"; }
  bool is_replay() const { return endpoint == "replay"; }
  bool is_http() const {
    return endpoint.rfind("http://", 0) == 0 || endpoint.rfind("https://", 0) == 0;
  }
};

inline void validate(const ProviderConfig& cfg) {
  if (cfg.provider_id.empty()) throw ConfigError("provider needs an id");
  if (cfg.timeout.count() <= 0) {
    throw ConfigError("provider '" + cfg.provider_id + "': timeout must be positive");
  }
  if (cfg.max_retries < 0) {
    throw ConfigError("provider '" + cfg.provider_id + "': max_retries must be >= 0");
  }
  if (!cfg.is_synthetic() && !cfg.is_replay() && !cfg.is_http()) {
    throw ConfigError("provider '" + cfg.provider_id + "': endpoint must be an http(s) URL, "
                      "\"synthetic\" or \"replay\"");
  }
  if (cfg.is_synthetic() && !cfg.synthetic) {
    throw ConfigError("provider '" + cfg.provider_id + "': synthetic endpoint needs a "
                      "\"synthetic\" block");
  }
  if (cfg.is_http() && cfg.top_logprobs < 1) {
    throw ConfigError("provider '" + cfg.provider_id + "': top_logprobs must be >= 1");
  }
}

class Provider {
 public:
  explicit Provider(ProviderConfig config) : config_(std::move(config)) {}
  virtual ~Provider() = default;
  Provider(const Provider&) = delete;
  Provider& operator=(const Provider&) = delete;

  const ProviderConfig& config() const { return config_; }
  const std::string& id() const { return config_.provider_id; }

  virtual TokenLogits first_token_logits(std::string_view prompt,
                                         const std::vector<std::string>& labels) = 0;
  virtual std::string complete(std::string_view prompt) = 0;

  // Each label must be a single first token. Backends that tokenize digit
  // runs as one token can opt in to wider labels.
  virtual void validate_labels(const std::vector<std::string>& labels) const {
    if (labels.empty()) throw ConfigError("empty candidate label set");
    if (config_.allow_multichar_labels) return;
    for (const auto& l : labels) {
      if (l.size() != 1) {
        throw ConfigError("provider '" + id() + "': label '" + l +
                          "' is not a single token; set allow_multichar_labels if the "
                          "backend's tokenizer keeps it whole");
      }
    }
  }

  // Number of backend calls that reached the underlying model.
  std::size_t backend_calls() const { return backend_calls_.load(); }

 protected:
  void count_backend_call() { ++backend_calls_; }

 private:
  ProviderConfig config_;
  std::atomic<std::size_t> backend_calls_{0};
};

// Provider call plus the label-alignment postcondition.
inline TokenLogits first_token_logits(Provider& provider, std::string_view prompt,
                                      const std::vector<std::string>& labels) {
  if (labels.empty()) throw ProviderError("empty candidate label set");
  TokenLogits out = provider.first_token_logits(prompt, labels);
  validate(out);
  if (out.labels != labels) {
    throw ProviderError("provider '" + provider.id() + "' returned misaligned labels");
  }
  return out;
}

// ---------------------------------------------------------------------------
// Synthetic provider
// ---------------------------------------------------------------------------

struct BiasProfile {
  std::vector<double> bias;
  double signal_weight = 1.0;
  double noise_scale = 0.0;
  std::uint64_t seed = 0;
};

namespace detail {

// Standard normal from raw engine output via Box-Muller, for results that are
// identical across standard library implementations.
class PortableNormal {
 public:
  explicit PortableNormal(std::uint64_t seed) : rng_(seed) {}

  double operator()() {
    if (cached_) {
      cached_ = false;
      return spare_;
    }
    const double u1 = uniform_open();
    const double u2 = uniform_open();
    const double r = std::sqrt(-2.0 * std::log(u1));
    const double theta = 2.0 * std::numbers::pi * u2;
    spare_ = r * std::sin(theta);
    cached_ = true;
    return r * std::cos(theta);
  }

 private:
  // Uniform on (0, 1).
  double uniform_open() { return (static_cast<double>(rng_() >> 11) + 0.5) * 0x1.0p-53; }

  std::mt19937_64 rng_;
  double spare_ = 0.0;
  bool cached_ = false;
};

}  // namespace detail

// Quality bump: a downward parabola centred at quality * (K - 1), so a
// noiseless, unbiased judge picks round(quality * (K - 1)).
inline double quality_signal(double quality, std::size_t position, std::size_t label_count) {
  const double center = quality * static_cast<double>(label_count - 1);
  const double d = static_cast<double>(position) - center;
  return -d * d;
}

// logits = signal_weight * signal(quality) + bias + noise, with noise drawn
// from a generator seeded by (profile.seed, quality, labels).
inline TokenLogits synth_logits(const BiasProfile& profile, double quality,
                                const std::vector<std::string>& labels) {
  if (labels.size() != profile.bias.size()) {
    throw ProviderError("synthetic profile has " + std::to_string(profile.bias.size()) +
                        " bias entries for " + std::to_string(labels.size()) + " labels");
  }
  if (!(quality >= 0.0 && quality <= 1.0)) {
    throw ProviderError("synthetic quality must lie in [0, 1]");
  }
  Sha256 h;
  h.field(std::to_string(profile.seed));
  h.field(std::to_string(std::bit_cast<std::uint64_t>(quality)));
  for (const auto& l : labels) h.field(l);
  const auto d = h.digest();
  std::uint64_t seed = 0;
  for (int i = 0; i < 8; ++i) seed |= static_cast<std::uint64_t>(d[i]) << (8 * i);
  detail::PortableNormal normal(seed);

  TokenLogits out;
  out.labels = labels;
  out.kind = LogitKind::raw_logits;
  out.logits.reserve(labels.size());
  for (std::size_t i = 0; i < labels.size(); ++i) {
    double v = profile.signal_weight * quality_signal(quality, i, labels.size()) + profile.bias[i];
    if (profile.noise_scale > 0.0) v += profile.noise_scale * normal();
    out.logits.push_back(v);
  }
  return out;
}

// What a synthetic judge "knows" about one prompt.
struct SyntheticItem {
  double quality = 0.0;
  std::vector<std::string> labels;
};

using QualitySource = std::function<std::optional<SyntheticItem>(std::string_view prompt)>;

// A stand-in judge that sees the true quality, distorted by a family bias and
// seeded per-prompt noise. Stateless apart from call counting.
class SyntheticProvider : public Provider {
 public:
  SyntheticProvider(ProviderConfig config, QualitySource source)
      : Provider(std::move(config)), source_(std::move(source)) {
    if (!this->config().synthetic) {
      throw ConfigError("provider '" + id() + "' has no synthetic block");
    }
  }

  BiasProfile profile_for(std::string_view prompt, const std::vector<std::string>& labels) const {
    const auto& spec = *config().synthetic;
    BiasProfile p;
    p.bias = spec.family.over(labels, spec.bias_gain);
    p.signal_weight = spec.signal_weight;
    p.noise_scale = spec.noise_scale;
    p.seed = spec.seed ^ sha256_u64(prompt);
    return p;
  }

  TokenLogits first_token_logits(std::string_view prompt,
                                 const std::vector<std::string>& labels) override {
    count_backend_call();
    const auto item = lookup(prompt);
    TokenLogits out = synth_logits(profile_for(prompt, labels), item.quality, labels);
    out.provider_id = id();
    return out;
  }

  std::string complete(std::string_view prompt) override {
    count_backend_call();
    const auto& spec = *config().synthetic;
    if (spec.forced_answer) return *spec.forced_answer;
    const auto item = lookup(prompt);
    const auto logits = synth_logits(profile_for(prompt, item.labels), item.quality, item.labels);
    std::size_t best = 0;
    for (std::size_t i = 1; i < logits.logits.size(); ++i) {
      if (logits.logits[i] > logits.logits[best]) best = i;
    }
    return item.labels[best];
  }

  void validate_labels(const std::vector<std::string>& labels) const override {
    if (labels.empty()) throw ConfigError("empty candidate label set");
  }

 private:
  SyntheticItem lookup(std::string_view prompt) const {
    std::optional<SyntheticItem> item = source_ ? source_(prompt) : std::nullopt;
    if (!item) throw ProviderError("synthetic provider '" + id() + "': unknown prompt");
    return *item;
  }

  QualitySource source_;
};

// ---------------------------------------------------------------------------
// Provider config file
// ---------------------------------------------------------------------------

inline ProviderConfig provider_config_from_json(const nlohmann::json& j) {
  try {
    ProviderConfig c;
    c.provider_id = j.at("id").get<std::string>();
    c.endpoint = j.at("endpoint").get<std::string>();
    c.model_name = j.value("model", c.provider_id);
    c.timeout = std::chrono::milliseconds(
        static_cast<long>(j.value("timeout_s", 60.0) * 1000.0));
    c.max_retries = j.value("max_retries", 2);
    c.retry_backoff = std::chrono::milliseconds(j.value("retry_backoff_ms", 500));
    c.top_logprobs = j.value("top_logprobs", 20);
    c.max_tokens = j.value("max_tokens", 8);
    c.api_key_env = j.value("api_key_env", std::string("RANGEJUDGE_API_KEY"));
    c.allow_multichar_labels = j.value("allow_multichar_labels", false);
    if (auto s = j.find("synthetic"); s != j.end()) {
      SyntheticSpec spec;
      spec.signal_weight = s->value("signal_weight", 1.0);
      spec.bias_gain = s->value("bias_gain", 1.0);
      spec.noise_scale = s->value("noise_scale", 0.0);
      spec.seed = s->value("seed", std::uint64_t{0});
      if (auto fb = s->find("family_bias"); fb != s->end()) {
        spec.family.peak = fb->value("peak", 0.0);
        spec.family.amplitude = fb->value("amplitude", 0.0);
        spec.family.width = fb->value("width", 1.0);
      }
      if (auto fa = s->find("forced_answer"); fa != s->end() && fa->is_string()) {
        spec.forced_answer = fa->get<std::string>();
      }
      if (spec.signal_weight < 0 || spec.noise_scale < 0 || spec.family.width <= 0) {
        throw ConfigError("provider '" + c.provider_id +
                          "': synthetic weights must be >= 0 and width > 0");
      }
      c.synthetic = spec;
    }
    validate(c);
    return c;
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("provider config: ") + e.what());
  }
}

inline nlohmann::json to_json(const ProviderConfig& c) {
  nlohmann::json j = {{"id", c.provider_id},
                      {"endpoint", c.endpoint},
                      {"model", c.model_name},
                      {"timeout_s", static_cast<double>(c.timeout.count()) / 1000.0},
                      {"max_retries", c.max_retries},
                      {"retry_backoff_ms", c.retry_backoff.count()},
                      {"top_logprobs", c.top_logprobs},
                      {"max_tokens", c.max_tokens},
                      {"api_key_env", c.api_key_env},
                      {"allow_multichar_labels", c.allow_multichar_labels}};
  if (c.synthetic) {
    const auto& s = *c.synthetic;
    nlohmann::json sj = {{"signal_weight", s.signal_weight},
                         {"bias_gain", s.bias_gain},
                         {"noise_scale", s.noise_scale},
                         {"seed", s.seed},
                         {"family_bias",
                          {{"peak", s.family.peak},
                           {"amplitude", s.family.amplitude},
                           {"width", s.family.width}}}};
    if (s.forced_answer) sj["forced_answer"] = *s.forced_answer;
    j["synthetic"] = std::move(sj);
  }
  return j;
}

}  // namespace rangejudge
