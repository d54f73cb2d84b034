#pragma once

#include <nlohmann/json.hpp>

#include <array>
#include <atomic>
#include <filesystem>
#include <fstream>
#include <memory>
#include <mutex>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "rangejudge/hash.hpp"
#include "rangejudge/providers.hpp"

namespace rangejudge {

// One JSON file per key:
//   {"format":1, "key":..., "provider_id":..., "model_name":..., "kind":...,
//    "checksum": sha256(payload.dump()), "payload": {...}}
// Doubles are written in shortest round-trip form, so replayed logits are
// bit-identical to the recorded ones.
class ResponseCache {
 public:
  explicit ResponseCache(std::filesystem::path dir) : dir_(std::move(dir)) {
    std::error_code ec;
    std::filesystem::create_directories(dir_, ec);
    if (ec || !std::filesystem::is_directory(dir_)) {
      throw ConfigError("cache directory '" + dir_.string() + "' is not writable");
    }
  }

  static std::string logits_key(const ProviderConfig& p, std::string_view prompt,
                                const std::vector<std::string>& labels) {
    Sha256 h;
    h.field("first_token_logits").field(p.provider_id).field(p.model_name).field(prompt);
    h.field(std::to_string(labels.size()));
    for (const auto& l : labels) h.field(l);
    return h.hex();
  }

  static std::string completion_key(const ProviderConfig& p, std::string_view prompt) {
    return Sha256{}
        .field("complete")
        .field(p.provider_id)
        .field(p.model_name)
        .field(prompt)
        .field(std::to_string(p.max_tokens))
        .hex();
  }

  std::filesystem::path path_for(const std::string& key) const { return dir_ / (key + ".json"); }

  // Returns the payload, or nullopt when absent or corrupt.
  std::optional<nlohmann::json> load(const std::string& key, const ProviderConfig& p) {
    std::lock_guard lock(stripe(key));
    std::ifstream in(path_for(key), std::ios::binary);
    if (!in) return std::nullopt;
    std::stringstream ss;
    ss << in.rdbuf();
    try {
      auto entry = nlohmann::json::parse(ss.str());
      const auto& payload = entry.at("payload");
      if (entry.at("key") != key || entry.at("provider_id") != p.provider_id ||
          entry.at("model_name") != p.model_name ||
          entry.at("checksum") != sha256_hex(payload.dump())) {
        ++corrupt_;
        return std::nullopt;
      }
      return std::optional<nlohmann::json>(std::in_place, payload);
    } catch (const nlohmann::json::exception&) {
      ++corrupt_;
      return std::nullopt;
    }
  }

  void store(const std::string& key, const ProviderConfig& p, std::string_view kind,
             const nlohmann::json& payload) {
    nlohmann::json entry = {{"format", 1},
                            {"key", key},
                            {"provider_id", p.provider_id},
                            {"model_name", p.model_name},
                            {"kind", kind},
                            {"checksum", sha256_hex(payload.dump())},
                            {"payload", payload}};
    std::lock_guard lock(stripe(key));
    const auto target = path_for(key);
    auto tmp = target;
    tmp += ".tmp";
    {
      std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
      out << entry.dump() << '\n';
      if (!out) throw ProviderError("cannot write cache entry '" + tmp.string() + "'");
    }
    std::filesystem::rename(tmp, target);
  }

  std::size_t corrupt_entries() const { return corrupt_.load(); }
  const std::filesystem::path& dir() const { return dir_; }

 private:
  std::mutex& stripe(const std::string& key) {
    return stripes_[std::hash<std::string>{}(key) % stripes_.size()];
  }

  std::filesystem::path dir_;
  std::array<std::mutex, 64> stripes_;
  std::atomic<std::size_t> corrupt_{0};
};

inline nlohmann::json to_json(const TokenLogits& t) {
  return {{"labels", t.labels},
          {"logits", t.logits},
          {"provider_id", t.provider_id},
          {"kind", to_string(t.kind)}};
}

inline TokenLogits token_logits_from_json(const nlohmann::json& j) {
  TokenLogits t;
  t.labels = j.at("labels").get<std::vector<std::string>>();
  t.logits = j.at("logits").get<std::vector<double>>();
  t.provider_id = j.at("provider_id").get<std::string>();
  t.kind = j.at("kind").get<std::string>() == "log_probs" ? LogitKind::log_probs
                                                          : LogitKind::raw_logits;
  return t;
}

// Read-through cache in front of a backend. With no backend (the "replay"
// endpoint) a miss is an item-level error.
class CachedProvider : public Provider {
 public:
  CachedProvider(ProviderConfig config, std::shared_ptr<ResponseCache> cache,
                 std::unique_ptr<Provider> backend)
      : Provider(std::move(config)), cache_(std::move(cache)), backend_(std::move(backend)) {}

  TokenLogits first_token_logits(std::string_view prompt,
                                 const std::vector<std::string>& labels) override {
    const auto key = ResponseCache::logits_key(config(), prompt, labels);
    if (auto hit = cache_->load(key, config())) {
      try {
        auto t = token_logits_from_json(*hit);
        if (t.labels == labels) {
          ++hits_;
          return t;
        }
      } catch (const nlohmann::json::exception&) {
      }
    }
    ++misses_;
    if (!backend_) throw ProviderError("replay cache miss for provider '" + id() + "'");
    count_backend_call();
    auto fresh = backend_->first_token_logits(prompt, labels);
    validate(fresh);
    cache_->store(key, config(), "first_token_logits", to_json(fresh));
    return fresh;
  }

  std::string complete(std::string_view prompt) override {
    const auto key = ResponseCache::completion_key(config(), prompt);
    if (auto hit = cache_->load(key, config()); hit && hit->contains("text")) {
      ++hits_;
      return hit->at("text").get<std::string>();
    }
    ++misses_;
    if (!backend_) throw ProviderError("replay cache miss for provider '" + id() + "'");
    count_backend_call();
    auto text = backend_->complete(prompt);
    cache_->store(key, config(), "complete", {{"text", text}});
    return text;
  }

  void validate_labels(const std::vector<std::string>& labels) const override {
    if (backend_) {
      backend_->validate_labels(labels);
    } else {
      Provider::validate_labels(labels);
    }
  }

  std::size_t hits() const { return hits_.load(); }
  std::size_t misses() const { return misses_.load(); }

 private:
  std::shared_ptr<ResponseCache> cache_;
  std::unique_ptr<Provider> backend_;
  std::atomic<std::size_t> hits_{0};
  std::atomic<std::size_t> misses_{0};
};

}  // namespace rangejudge
