#include "redes/sha256.hpp"

#include <openssl/evp.h>

#include <array>
#include <atomic>
#include <stdexcept>

namespace redes {

namespace {
std::atomic<std::uint64_t> g_invocations{0};

constexpr char kHexDigits[] = "0123456789abcdef";
}  // namespace

std::string sha256_hex(std::string_view data) {
  g_invocations.fetch_add(1, std::memory_order_relaxed);

  std::array<unsigned char, EVP_MAX_MD_SIZE> digest{};
  unsigned int digest_len = 0;
  if (EVP_Digest(data.data(), data.size(), digest.data(), &digest_len, EVP_sha256(), nullptr) !=
      1) {
    throw std::runtime_error("EVP_Digest(sha256) failed");
  }

  std::string hex;
  hex.resize(static_cast<size_t>(digest_len) * 2);
  for (unsigned int i = 0; i < digest_len; ++i) {
    hex[2 * i] = kHexDigits[digest[i] >> 4];
    hex[2 * i + 1] = kHexDigits[digest[i] & 0x0f];
  }
  return hex;
}

std::uint64_t sha256_invocations() { return g_invocations.load(std::memory_order_relaxed); }

}  // namespace redes
