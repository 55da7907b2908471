#pragma once

#include <string>

#include "redes/ledger.hpp"

namespace redes {

/// Parsers for the canonical wire/persistence format. Strict about the
/// constraints that matter for cross-node hash agreement: timestamps must be
/// decimal tokens with exactly six fractional digits, transaction actions must
/// be the canonical "allow"/"deny", MACs must already be canonical. All throw
/// Errc::parse_error on violation.

/// One block object, e.g. one line of the chain log.
Block parse_block_json(const std::string& text);

/// A bare JSON array of blocks.
Chain parse_chain_json(const std::string& text);

/// A GET /chain response body: {"chain":[...],"length":N}.
Chain parse_chain_response(const std::string& text);

/// The exact GET /chain response body for `chain`.
std::string chain_response_json(const Chain& chain);

struct ForgeResponse {
  Block block;
  std::uint64_t attempts = 0;
};

/// A POST /blocks/new response body: {"attempts":K,"block":{...}}. The block
/// text is extracted verbatim so its canonical bytes survive.
ForgeResponse parse_forge_response(const std::string& text);

}  // namespace redes
