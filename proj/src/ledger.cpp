#include "redes/ledger.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>

#include <json.hpp>

#include "redes/errors.hpp"
#include "redes/sha256.hpp"

namespace redes {

namespace {

constexpr size_t kMaxIdentifierLength = 128;

bool is_hex_lower(char c) { return (c >= '0' && c <= '9') || (c >= 'a' && c <= 'f'); }

std::string to_lower(std::string s) {
  std::transform(s.begin(), s.end(), s.begin(),
                 [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  return s;
}

std::string validated_identifier(const std::string& value, const char* field) {
  if (value.empty()) {
    throw Error(Errc::empty_identifier, std::string(field) + " must be non-empty");
  }
  if (value.size() > kMaxIdentifierLength) {
    throw Error(Errc::invalid_identifier,
                std::string(field) + " exceeds " + std::to_string(kMaxIdentifierLength) +
                    " characters");
  }
  return value;
}

// JSON string escaping via the library keeps the canonical form minimal and
// consistent with standard encoders.
std::string json_string(const std::string& s) { return nlohmann::json(s).dump(); }

}  // namespace

const char* action_name(Action action) { return action == Action::allow ? "allow" : "deny"; }

Action parse_action(const std::string& word) {
  const std::string w = to_lower(word);
  if (w == "allow" || w == "allowed" || w == "add") return Action::allow;
  if (w == "deny" || w == "denied" || w == "remove" || w == "delete") return Action::deny;
  throw Error(Errc::invalid_action, "unknown action '" + word + "'");
}

std::string normalize_mac(const std::string& mac) {
  std::string digits;
  digits.reserve(12);
  for (char raw : mac) {
    const char c = static_cast<char>(std::tolower(static_cast<unsigned char>(raw)));
    if (c == ':' || c == '-' || c == '.') continue;
    if (!is_hex_lower(c)) {
      throw Error(Errc::invalid_mac, "'" + mac + "' contains a non-hex character");
    }
    digits.push_back(c);
  }
  if (digits.size() != 12) {
    throw Error(Errc::invalid_mac, "'" + mac + "' does not contain exactly 12 hex digits");
  }
  std::string canonical;
  canonical.reserve(17);
  for (size_t i = 0; i < 12; i += 2) {
    if (i != 0) canonical.push_back(':');
    canonical.push_back(digits[i]);
    canonical.push_back(digits[i + 1]);
  }
  return canonical;
}

bool is_canonical_mac(const std::string& mac) {
  if (mac.size() != 17) return false;
  for (size_t i = 0; i < 17; ++i) {
    if (i % 3 == 2) {
      if (mac[i] != ':') return false;
    } else if (!is_hex_lower(mac[i])) {
      return false;
    }
  }
  return true;
}

Transaction new_transaction(const std::string& sender, const std::string& recipient,
                            const std::string& mac, const std::string& action) {
  Transaction tx;
  tx.sender = validated_identifier(sender, "sender");
  tx.recipient = validated_identifier(recipient, "recipient");
  tx.mac = normalize_mac(mac);
  tx.action = parse_action(action);
  return tx;
}

Difficulty::Difficulty(int leading_zero_hex_digits) : zeros_(leading_zero_hex_digits) {
  if (zeros_ < 1 || zeros_ > 16) {
    throw Error(Errc::invalid_difficulty,
                "leading zero digits must be in [1,16], got " + std::to_string(zeros_));
  }
}

const Block& genesis_block() {
  static const Block genesis{1, 0, {}, 100, "1"};
  return genesis;
}

Chain genesis_chain() { return Chain{{genesis_block()}}; }

std::string canonical_timestamp(std::int64_t timestamp_us) {
  if (timestamp_us < 0) {
    throw Error(Errc::parse_error, "negative timestamp");
  }
  const std::int64_t seconds = timestamp_us / 1'000'000;
  const std::int64_t fraction = timestamp_us % 1'000'000;
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%lld.%06lld", static_cast<long long>(seconds),
                static_cast<long long>(fraction));
  return buf;
}

std::int64_t parse_canonical_timestamp(const std::string& token) {
  const size_t dot = token.find('.');
  if (dot == std::string::npos || dot == 0 || token.size() - dot - 1 != 6) {
    throw Error(Errc::parse_error, "timestamp '" + token + "' is not seconds.%06d");
  }
  for (size_t i = 0; i < token.size(); ++i) {
    if (i == dot) continue;
    if (token[i] < '0' || token[i] > '9') {
      throw Error(Errc::parse_error, "timestamp '" + token + "' is not seconds.%06d");
    }
  }
  std::int64_t seconds = 0;
  const auto [sp, sec] = std::from_chars(token.data(), token.data() + dot, seconds);
  std::int64_t fraction = 0;
  const auto [fp, fec] =
      std::from_chars(token.data() + dot + 1, token.data() + token.size(), fraction);
  if (sec != std::errc() || fec != std::errc() || seconds > 9'000'000'000'000LL) {
    throw Error(Errc::parse_error, "timestamp '" + token + "' out of range");
  }
  return seconds * 1'000'000 + fraction;
}

std::string to_canonical_json(const Transaction& tx) {
  std::string out = "{\"action\":";
  out += json_string(action_name(tx.action));
  out += ",\"mac\":";
  out += json_string(tx.mac);
  out += ",\"recipient\":";
  out += json_string(tx.recipient);
  out += ",\"sender\":";
  out += json_string(tx.sender);
  out += "}";
  return out;
}

std::string to_canonical_json(const Block& block) {
  std::string out = "{\"index\":";
  out += std::to_string(block.index);
  out += ",\"previous_hash\":";
  out += json_string(block.previous_hash);
  out += ",\"proof\":";
  out += std::to_string(block.proof);
  out += ",\"timestamp\":";
  out += canonical_timestamp(block.timestamp_us);
  out += ",\"transactions\":[";
  for (size_t i = 0; i < block.transactions.size(); ++i) {
    if (i != 0) out += ",";
    out += to_canonical_json(block.transactions[i]);
  }
  out += "]}";
  return out;
}

std::string to_canonical_json(const Chain& chain) {
  std::string out = "[";
  for (size_t i = 0; i < chain.blocks.size(); ++i) {
    if (i != 0) out += ",";
    out += to_canonical_json(chain.blocks[i]);
  }
  out += "]";
  return out;
}

std::string canonical_hash(const Block& block) { return sha256_hex(to_canonical_json(block)); }

bool valid_proof(std::uint64_t last_proof, std::uint64_t proof, Difficulty difficulty) {
  const std::string digest = sha256_hex(std::to_string(last_proof) + std::to_string(proof));
  const int zeros = difficulty.leading_zero_hex_digits();
  for (int i = 0; i < zeros; ++i) {
    if (digest[static_cast<size_t>(i)] != '0') return false;
  }
  return true;
}

MineResult mine_proof(std::uint64_t last_proof, Difficulty difficulty) {
  MineResult result;
  for (std::uint64_t p = 0;; ++p) {
    ++result.attempts;
    if (valid_proof(last_proof, p, difficulty)) {
      result.proof = p;
      return result;
    }
  }
}

ForgeResult forge_block(const Chain& chain, const std::vector<Transaction>& pending,
                        Difficulty difficulty, std::int64_t timestamp_us) {
  if (pending.empty()) {
    throw Error(Errc::empty_pending, "no pending transactions to forge");
  }
  const Block& tip = chain.tip();
  const MineResult mined = mine_proof(tip.proof, difficulty);
  ForgeResult result;
  result.block =
      Block{tip.index + 1, timestamp_us, pending, mined.proof, canonical_hash(tip)};
  result.attempts = mined.attempts;
  return result;
}

bool valid_chain(const Chain& chain, Difficulty difficulty) {
  if (chain.blocks.empty() || chain.blocks.front() != genesis_block()) return false;
  for (size_t i = 1; i < chain.blocks.size(); ++i) {
    const Block& prev = chain.blocks[i - 1];
    const Block& block = chain.blocks[i];
    if (block.previous_hash != canonical_hash(prev)) return false;
    if (block.index != prev.index + 1) return false;
    if (!valid_proof(prev.proof, block.proof, difficulty)) return false;
  }
  return true;
}

const char* errc_name(Errc code) {
  switch (code) {
    case Errc::invalid_mac: return "InvalidMac";
    case Errc::invalid_action: return "InvalidAction";
    case Errc::empty_identifier: return "EmptyIdentifier";
    case Errc::invalid_identifier: return "InvalidIdentifier";
    case Errc::invalid_difficulty: return "InvalidDifficulty";
    case Errc::empty_pending: return "EmptyPending";
    case Errc::tip_moved: return "TipMoved";
    case Errc::invalid_address: return "InvalidAddress";
    case Errc::self_registration: return "SelfRegistration";
    case Errc::parse_error: return "ParseError";
    case Errc::script_error: return "ScriptError";
    case Errc::command_failed: return "CommandFailed";
    case Errc::io_error: return "IoError";
    case Errc::config_error: return "ConfigError";
  }
  return "Error";
}

}  // namespace redes
