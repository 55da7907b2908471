#pragma once

#include <cstdint>
#include <string>
#include <string_view>

namespace redes {

/// Lowercase hex SHA-256 digest of `data`.
std::string sha256_hex(std::string_view data);

/// Process-wide count of sha256_hex invocations. Proof mining, proof
/// verification and block hashing each cost exactly one invocation, so
/// deltas of this counter are the hashing-cost metric.
std::uint64_t sha256_invocations();

}  // namespace redes
