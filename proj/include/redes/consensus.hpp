#pragma once

#include <functional>
#include <optional>
#include <set>
#include <string>

#include "redes/ledger.hpp"

namespace redes {

/// Normalizes a peer address to "scheme://host:port" (lowercase scheme/host,
/// explicit port, no path). Throws Errc::invalid_address.
std::string normalize_address(const std::string& address);

/// The permissioned set of known node addresses. Re-registering is a no-op;
/// the node's own address is never admitted.
class PeerRegistry {
 public:
  PeerRegistry() = default;
  explicit PeerRegistry(std::string self_address);

  /// Returns true if the address was newly added.
  /// Throws Errc::invalid_address / Errc::self_registration.
  bool add(const std::string& address);

  /// Returns false (NotFound) when the address was not registered; the
  /// registry is left unchanged in that case.
  bool remove(const std::string& address);

  bool contains(const std::string& address) const;
  size_t size() const { return peers_.size(); }

  /// Lexicographically ordered, which fixes the query order during resolution.
  const std::set<std::string>& peers() const { return peers_; }

 private:
  std::set<std::string> peers_;
  std::optional<std::string> self_;
};

struct ResolutionReport {
  bool replaced = false;
  std::optional<std::string> adopted_from;
  size_t old_length = 0;
  size_t new_length = 0;
  size_t peers_queried = 0;
  size_t peers_unreachable = 0;
  size_t peers_invalid_chain = 0;
};

/// Abstract capability used to obtain a peer's chain. Returns nullopt when the
/// peer is unreachable or its response cannot be parsed.
using ChainFetcher = std::function<std::optional<Chain>(const std::string& address)>;

struct ResolveResult {
  Chain chain;
  ResolutionReport report;
};

/// Longest-valid-chain conflict resolution: queries every registered peer in
/// address order and adopts the longest chain that is strictly longer than the
/// current best and passes valid_chain. Equal lengths never displace the local
/// chain. Per-peer failures are recorded in the report, never fatal.
ResolveResult resolve_conflicts(const Chain& local, const PeerRegistry& registry,
                                const ChainFetcher& fetch, Difficulty difficulty);

enum class AcceptStatus { accepted, stale_block, bad_linkage, bad_proof };

const char* accept_status_name(AcceptStatus status);

/// Appends `block` iff it extends the tip with correct index, previous_hash
/// and proof. The chain is unchanged on rejection.
AcceptStatus accept_block(Chain& chain, const Block& block, Difficulty difficulty);

}  // namespace redes
