#pragma once

#include <httplib.h>
#include <nlohmann/json.hpp>

#include <cctype>
#include <cstdlib>
#include <limits>
#include <map>
#include <optional>
#include <string>
#include <thread>
#include <vector>

#include "rangejudge/providers.hpp"

namespace rangejudge {

namespace detail {

struct SplitUrl {
  std::string origin;  // scheme://host[:port]
  std::string path;    // request path for the completions endpoint
};

// "http://host:8000/v1" -> origin "http://host:8000", path "/v1/completions".
// A URL that already ends in "/completions" is used as is.
inline SplitUrl split_completions_url(const std::string& endpoint) {
  const auto scheme_end = endpoint.find("://");
  const auto path_start = endpoint.find('/', scheme_end + 3);
  SplitUrl out;
  out.origin = endpoint.substr(0, path_start);
  std::string path = path_start == std::string::npos ? "" : endpoint.substr(path_start);
  while (!path.empty() && path.back() == '/') path.pop_back();
  const std::string suffix = "/completions";
  if (path.size() < suffix.size() || path.compare(path.size() - suffix.size(), suffix.size(),
                                                  suffix) != 0) {
    path += suffix;
  }
  out.path = path;
  return out;
}

inline std::string trim(std::string_view s) {
  std::size_t b = 0, e = s.size();
  while (b < e && std::isspace(static_cast<unsigned char>(s[b]))) ++b;
  while (e > b && std::isspace(static_cast<unsigned char>(s[e - 1]))) --e;
  return std::string(s.substr(b, e - b));
}

// Top-k entries for the first generated token. Accepts the legacy completions
// shape (`logprobs.top_logprobs[0]` as a token -> logprob object) and the
// chat shape (`logprobs.content[0].top_logprobs` as [{token, logprob}]).
inline std::vector<std::pair<std::string, double>> first_token_top_logprobs(
    const nlohmann::json& response) {
  const auto& choice = response.at("choices").at(0);
  const auto& lp = choice.at("logprobs");
  std::vector<std::pair<std::string, double>> out;
  if (lp.contains("top_logprobs")) {
    const auto& first = lp.at("top_logprobs").at(0);
    for (auto it = first.begin(); it != first.end(); ++it) {
      out.emplace_back(it.key(), it.value().get<double>());
    }
  } else if (lp.contains("content")) {
    for (const auto& e : lp.at("content").at(0).at("top_logprobs")) {
      out.emplace_back(e.at("token").get<std::string>(), e.at("logprob").get<double>());
    }
  } else {
    throw ProviderError("response has no top_logprobs");
  }
  return out;
}

}  // namespace detail

// OpenAI-compatible completions backend. The first-token path requests one
// token with `logprobs = top_logprobs` and reads the top-k log-probabilities;
// every candidate label must appear among them.
class HttpProvider : public Provider {
 public:
  explicit HttpProvider(ProviderConfig config) : Provider(std::move(config)) {
    validate(this->config());
    if (!this->config().is_http()) {
      throw ConfigError("provider '" + id() + "' endpoint is not an http(s) URL");
    }
    url_ = detail::split_completions_url(this->config().endpoint);
  }

  TokenLogits first_token_logits(std::string_view prompt,
                                 const std::vector<std::string>& labels) override {
    nlohmann::json body = {{"model", config().model_name},
                           {"prompt", prompt},
                           {"max_tokens", 1},
                           {"temperature", 0},
                           {"logprobs", config().top_logprobs}};
    const auto response = post(body);
    std::vector<std::pair<std::string, double>> top;
    try {
      top = detail::first_token_top_logprobs(response);
    } catch (const nlohmann::json::exception& e) {
      throw ProviderError("provider '" + id() + "': malformed logprobs: " + e.what());
    }

    // Exact token match wins; otherwise the best whitespace-trimmed match
    // (tokenizers often emit " 4" rather than "4").
    TokenLogits out;
    out.labels = labels;
    out.provider_id = id();
    out.kind = LogitKind::log_probs;
    for (const auto& label : labels) {
      std::optional<double> exact, trimmed;
      for (const auto& [token, logprob] : top) {
        if (token == label) exact = logprob;
        if (detail::trim(token) == label && (!trimmed || logprob > *trimmed)) trimmed = logprob;
      }
      auto v = exact ? exact : trimmed;
      if (!v) {
        throw ProviderError("provider '" + id() + "': label '" + label + "' missing from top-" +
                            std::to_string(top.size()) + " logprobs");
      }
      out.logits.push_back(*v);
    }
    return out;
  }

  std::string complete(std::string_view prompt) override {
    nlohmann::json body = {{"model", config().model_name},
                           {"prompt", prompt},
                           {"max_tokens", config().max_tokens},
                           {"temperature", 0}};
    const auto response = post(body);
    try {
      return response.at("choices").at(0).at("text").get<std::string>();
    } catch (const nlohmann::json::exception& e) {
      throw ProviderError("provider '" + id() + "': malformed completion: " + e.what());
    }
  }

 private:
  nlohmann::json post(const nlohmann::json& body) {
    const auto& cfg = config();
    httplib::Headers headers;
    if (const char* key = std::getenv(cfg.api_key_env.c_str()); key != nullptr && *key) {
      headers.emplace("Authorization", std::string("Bearer ") + key);
    }
    const std::string payload = body.dump();
    std::string last_error;
    for (int attempt = 0; attempt <= cfg.max_retries; ++attempt) {
      if (attempt > 0) std::this_thread::sleep_for(cfg.retry_backoff * (1 << (attempt - 1)));
      count_backend_call();
      httplib::Client client(url_.origin);
      const auto secs = std::chrono::duration_cast<std::chrono::seconds>(cfg.timeout);
      const auto usecs =
          std::chrono::duration_cast<std::chrono::microseconds>(cfg.timeout - secs);
      client.set_connection_timeout(secs.count(), usecs.count());
      client.set_read_timeout(secs.count(), usecs.count());
      client.set_write_timeout(secs.count(), usecs.count());
      auto res = client.Post(url_.path, headers, payload, "application/json");
      if (!res) {
        last_error = httplib::to_string(res.error());
        continue;
      }
      if (res->status == 429 || res->status >= 500) {
        last_error = "HTTP " + std::to_string(res->status);
        continue;
      }
      if (res->status != 200) {
        throw ProviderError("provider '" + id() + "': HTTP " + std::to_string(res->status) +
                            ": " + res->body.substr(0, 200));
      }
      try {
        return nlohmann::json::parse(res->body);
      } catch (const nlohmann::json::parse_error& e) {
        throw ProviderError("provider '" + id() + "': invalid JSON response: " + e.what());
      }
    }
    throw ProviderError("provider '" + id() + "': giving up after " +
                        std::to_string(cfg.max_retries + 1) + " attempts: " + last_error);
  }

  detail::SplitUrl url_;
};

}  // namespace rangejudge
