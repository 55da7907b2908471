#include "redes/consensus.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>

#include "redes/errors.hpp"

namespace redes {

namespace {

bool valid_host_char(char c) {
  return std::isalnum(static_cast<unsigned char>(c)) || c == '.' || c == '-' || c == '_';
}

}  // namespace

std::string normalize_address(const std::string& address) {
  const size_t scheme_end = address.find("://");
  if (scheme_end == std::string::npos || scheme_end == 0) {
    throw Error(Errc::invalid_address, "'" + address + "' has no scheme");
  }
  std::string scheme = address.substr(0, scheme_end);
  std::transform(scheme.begin(), scheme.end(), scheme.begin(),
                 [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  if (scheme != "http" && scheme != "https") {
    throw Error(Errc::invalid_address, "'" + address + "' scheme must be http or https");
  }

  std::string rest = address.substr(scheme_end + 3);
  // A bare trailing slash is tolerated; any other path is not.
  if (!rest.empty() && rest.back() == '/') rest.pop_back();
  if (rest.find('/') != std::string::npos) {
    throw Error(Errc::invalid_address, "'" + address + "' must not carry a path");
  }

  const size_t colon = rest.rfind(':');
  if (colon == std::string::npos || colon == 0 || colon + 1 == rest.size()) {
    throw Error(Errc::invalid_address, "'" + address + "' has no explicit port");
  }
  std::string host = rest.substr(0, colon);
  const std::string port_text = rest.substr(colon + 1);

  std::transform(host.begin(), host.end(), host.begin(),
                 [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  if (!std::all_of(host.begin(), host.end(), valid_host_char)) {
    throw Error(Errc::invalid_address, "'" + address + "' has an invalid host");
  }

  unsigned int port = 0;
  const auto [ptr, ec] =
      std::from_chars(port_text.data(), port_text.data() + port_text.size(), port);
  if (ec != std::errc() || ptr != port_text.data() + port_text.size() || port == 0 ||
      port > 65535) {
    throw Error(Errc::invalid_address, "'" + address + "' has an invalid port");
  }

  return scheme + "://" + host + ":" + std::to_string(port);
}

PeerRegistry::PeerRegistry(std::string self_address)
    : self_(normalize_address(self_address)) {}

bool PeerRegistry::add(const std::string& address) {
  const std::string normalized = normalize_address(address);
  if (self_ && normalized == *self_) {
    throw Error(Errc::self_registration, "refusing to register own address " + normalized);
  }
  return peers_.insert(normalized).second;
}

bool PeerRegistry::remove(const std::string& address) {
  std::string normalized;
  try {
    normalized = normalize_address(address);
  } catch (const Error&) {
    return false;  // unparseable addresses are necessarily unknown
  }
  return peers_.erase(normalized) > 0;
}

bool PeerRegistry::contains(const std::string& address) const {
  return peers_.count(normalize_address(address)) > 0;
}

ResolveResult resolve_conflicts(const Chain& local, const PeerRegistry& registry,
                                const ChainFetcher& fetch, Difficulty difficulty) {
  ResolveResult result;
  result.chain = local;
  result.report.old_length = local.length();
  result.report.new_length = local.length();

  size_t max_length = local.length();
  for (const std::string& address : registry.peers()) {
    ++result.report.peers_queried;
    std::optional<Chain> candidate = fetch(address);
    if (!candidate) {
      ++result.report.peers_unreachable;
      continue;
    }
    if (candidate->length() <= max_length) continue;
    if (!valid_chain(*candidate, difficulty)) {
      ++result.report.peers_invalid_chain;
      continue;
    }
    max_length = candidate->length();
    result.chain = std::move(*candidate);
    result.report.replaced = true;
    result.report.adopted_from = address;
  }

  result.report.new_length = result.chain.length();
  return result;
}

const char* accept_status_name(AcceptStatus status) {
  switch (status) {
    case AcceptStatus::accepted: return "Accepted";
    case AcceptStatus::stale_block: return "StaleBlock";
    case AcceptStatus::bad_linkage: return "BadLinkage";
    case AcceptStatus::bad_proof: return "BadProof";
  }
  return "Unknown";
}

AcceptStatus accept_block(Chain& chain, const Block& block, Difficulty difficulty) {
  const Block& tip = chain.tip();
  if (block.index <= tip.index) return AcceptStatus::stale_block;
  if (block.index != tip.index + 1 || block.previous_hash != canonical_hash(tip)) {
    return AcceptStatus::bad_linkage;
  }
  if (!valid_proof(tip.proof, block.proof, difficulty)) return AcceptStatus::bad_proof;
  chain.blocks.push_back(block);
  return AcceptStatus::accepted;
}

}  // namespace redes
