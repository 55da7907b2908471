#pragma once

#include <cstdint>
#include <string>
#include <vector>

namespace redes {

enum class Action { allow, deny };

/// Canonical on-chain action names ("allow" / "deny").
const char* action_name(Action action);

/// Maps an inbound action word onto the canonical enum. Accepted aliases
/// (case-insensitive): allow/allowed/add -> allow, deny/denied/remove/delete -> deny.
/// Throws Errc::invalid_action otherwise.
Action parse_action(const std::string& word);

/// Normalizes a MAC address to six lowercase colon-separated hex octets.
/// Accepts ':' '-' '.' grouping and bare 12-digit hex. Throws Errc::invalid_mac.
std::string normalize_mac(const std::string& mac);

/// True iff `mac` is already in canonical form.
bool is_canonical_mac(const std::string& mac);

struct Transaction {
  std::string sender;
  std::string recipient;
  std::string mac;  // canonical form
  Action action = Action::allow;

  bool operator==(const Transaction&) const = default;
};

/// Validates and normalizes the four transaction fields.
/// Throws Errc::empty_identifier / invalid_identifier / invalid_mac / invalid_action.
Transaction new_transaction(const std::string& sender, const std::string& recipient,
                            const std::string& mac, const std::string& action);

struct Block {
  std::uint64_t index = 0;       // 1-based position in the chain
  std::int64_t timestamp_us = 0; // microseconds since Unix epoch, non-negative
  std::vector<Transaction> transactions;
  std::uint64_t proof = 0;
  std::string previous_hash;

  bool operator==(const Block&) const = default;
};

struct Chain {
  std::vector<Block> blocks;

  size_t length() const { return blocks.size(); }
  const Block& tip() const { return blocks.back(); }

  bool operator==(const Chain&) const = default;
};

/// Difficulty of the proof predicate: required count of leading '0' hex
/// characters in the digest. Valid range 1..16.
class Difficulty {
 public:
  Difficulty() : zeros_(4) {}
  explicit Difficulty(int leading_zero_hex_digits);

  int leading_zero_hex_digits() const { return zeros_; }

  bool operator==(const Difficulty&) const = default;

 private:
  int zeros_;
};

/// The network-wide genesis constant: index 1, timestamp 0, no transactions,
/// proof 100, previous_hash "1".
const Block& genesis_block();

/// A chain holding only the genesis block.
Chain genesis_chain();

/// Renders microseconds-since-epoch as a decimal with exactly six fractional
/// digits ("0.000000", "1699999999.123456").
std::string canonical_timestamp(std::int64_t timestamp_us);

/// Parses a canonical timestamp token back to microseconds.
/// Throws Errc::parse_error unless the token matches ^[0-9]+\.[0-9]{6}$.
std::int64_t parse_canonical_timestamp(const std::string& token);

/// Canonical serializations: single-line JSON, keys sorted lexicographically,
/// no insignificant whitespace, UTF-8, minimal string escaping. These byte
/// strings are the hash input, the wire format and the persistence format.
std::string to_canonical_json(const Transaction& tx);
std::string to_canonical_json(const Block& block);
std::string to_canonical_json(const Chain& chain);  // JSON array of blocks

/// SHA-256 hex digest of the block's canonical serialization.
std::string canonical_hash(const Block& block);

/// True iff sha256(decimal last_proof || decimal proof) starts with
/// `difficulty` literal '0' characters.
bool valid_proof(std::uint64_t last_proof, std::uint64_t proof, Difficulty difficulty);

struct MineResult {
  std::uint64_t proof = 0;
  std::uint64_t attempts = 0;  // hash attempts consumed, successful one included
};

/// Smallest proof satisfying valid_proof, searched ascending from 0.
/// Deterministic given (last_proof, difficulty).
MineResult mine_proof(std::uint64_t last_proof, Difficulty difficulty);

struct ForgeResult {
  Block block;
  std::uint64_t attempts = 0;
};

/// Builds the next block on `chain`: index = tip+1, previous_hash = hash(tip),
/// proof mined from tip.proof. Throws Errc::empty_pending.
ForgeResult forge_block(const Chain& chain, const std::vector<Transaction>& pending,
                        Difficulty difficulty, std::int64_t timestamp_us);

/// Full-chain validation: genesis equality, hash linkage, index continuity and
/// proof validity for every adjacent pair. Pure; no side effects.
bool valid_chain(const Chain& chain, Difficulty difficulty);

}  // namespace redes
