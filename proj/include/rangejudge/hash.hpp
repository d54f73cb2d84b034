#pragma once

#include <openssl/evp.h>

#include <array>
#include <cstdint>
#include <string>
#include <string_view>

#include "rangejudge/error.hpp"

namespace rangejudge {

using Sha256Digest = std::array<unsigned char, 32>;

// Incremental SHA-256. Fields fed with `field()` are length-prefixed so
// ("ab","c") and ("a","bc") hash differently.
class Sha256 {
 public:
  Sha256() : ctx_(EVP_MD_CTX_new()) {
    if (ctx_ == nullptr || EVP_DigestInit_ex(ctx_, EVP_sha256(), nullptr) != 1) {
      EVP_MD_CTX_free(ctx_);
      throw std::runtime_error("sha256: init failed");
    }
  }
  ~Sha256() { EVP_MD_CTX_free(ctx_); }
  Sha256(const Sha256&) = delete;
  Sha256& operator=(const Sha256&) = delete;

  Sha256& update(std::string_view bytes) {
    EVP_DigestUpdate(ctx_, bytes.data(), bytes.size());
    return *this;
  }

  Sha256& field(std::string_view bytes) {
    const std::uint64_t len = bytes.size();
    unsigned char prefix[8];
    for (int i = 0; i < 8; ++i) prefix[i] = static_cast<unsigned char>(len >> (8 * i));
    EVP_DigestUpdate(ctx_, prefix, sizeof prefix);
    return update(bytes);
  }

  Sha256Digest digest() {
    Sha256Digest out{};
    unsigned int len = 0;
    EVP_DigestFinal_ex(ctx_, out.data(), &len);
    return out;
  }

  std::string hex() { return to_hex(digest()); }

  static std::string to_hex(const Sha256Digest& d) {
    static constexpr char kDigits[] = "0123456789abcdef";
    std::string s;
    s.reserve(64);
    for (unsigned char c : d) {
      s.push_back(kDigits[c >> 4]);
      s.push_back(kDigits[c & 0xf]);
    }
    return s;
  }

 private:
  EVP_MD_CTX* ctx_;
};

inline std::string sha256_hex(std::string_view bytes) { return Sha256{}.update(bytes).hex(); }

// First 8 digest bytes as a little-endian integer; used for seed mixing.
inline std::uint64_t sha256_u64(std::string_view bytes) {
  const auto d = Sha256{}.update(bytes).digest();
  std::uint64_t v = 0;
  for (int i = 0; i < 8; ++i) v |= static_cast<std::uint64_t>(d[i]) << (8 * i);
  return v;
}

}  // namespace rangejudge
