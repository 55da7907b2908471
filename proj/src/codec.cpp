#include "redes/codec.hpp"

#include <vector>

#include <json.hpp>

#include "redes/errors.hpp"

namespace redes {

namespace {

using nlohmann::json;

// Collects the raw lexemes of every float literal in document order. Block
// timestamps are the only floats in the canonical schema, so this recovers
// them bit-exactly; going through double would round the sixth fractional
// digit for present-day epochs.
class FloatTokenCollector : public nlohmann::json_sax<json> {
 public:
  std::vector<std::string> tokens;

  bool null() override { return true; }
  bool boolean(bool) override { return true; }
  bool number_integer(number_integer_t) override { return true; }
  bool number_unsigned(number_unsigned_t) override { return true; }
  bool number_float(number_float_t, const string_t& raw) override {
    tokens.push_back(raw);
    return true;
  }
  bool string(string_t&) override { return true; }
  bool binary(binary_t&) override { return true; }
  bool start_object(std::size_t) override { return true; }
  bool key(string_t&) override { return true; }
  bool end_object() override { return true; }
  bool start_array(std::size_t) override { return true; }
  bool end_array() override { return true; }
  bool parse_error(std::size_t, const std::string&, const nlohmann::detail::exception& ex)
      override {
    throw Error(Errc::parse_error, ex.what());
  }
};

std::vector<std::string> collect_float_tokens(const std::string& text) {
  FloatTokenCollector collector;
  json::sax_parse(text, &collector);
  return collector.tokens;
}

std::string require_string(const json& j, const char* key) {
  const auto it = j.find(key);
  if (it == j.end() || !it->is_string()) {
    throw Error(Errc::parse_error, std::string("missing or non-string field '") + key + "'");
  }
  return it->get<std::string>();
}

std::uint64_t require_uint(const json& j, const char* key) {
  const auto it = j.find(key);
  if (it == j.end() || !it->is_number_unsigned()) {
    throw Error(Errc::parse_error,
                std::string("missing or non-integer field '") + key + "'");
  }
  return it->get<std::uint64_t>();
}

Transaction transaction_from_json(const json& j) {
  if (!j.is_object()) throw Error(Errc::parse_error, "transaction is not an object");
  Transaction tx;
  tx.sender = require_string(j, "sender");
  tx.recipient = require_string(j, "recipient");
  tx.mac = require_string(j, "mac");
  const std::string action = require_string(j, "action");
  if (tx.sender.empty() || tx.sender.size() > 128 || tx.recipient.empty() ||
      tx.recipient.size() > 128) {
    throw Error(Errc::parse_error, "sender/recipient must be 1..128 characters");
  }
  if (!is_canonical_mac(tx.mac)) {
    throw Error(Errc::parse_error, "mac '" + tx.mac + "' is not canonical");
  }
  if (action == "allow") {
    tx.action = Action::allow;
  } else if (action == "deny") {
    tx.action = Action::deny;
  } else {
    throw Error(Errc::parse_error, "action '" + action + "' is not canonical");
  }
  return tx;
}

// `timestamp_token` carries the raw lexeme recovered by the SAX pass.
Block block_from_json(const json& j, const std::string& timestamp_token) {
  if (!j.is_object()) throw Error(Errc::parse_error, "block is not an object");
  Block block;
  block.index = require_uint(j, "index");
  block.proof = require_uint(j, "proof");
  block.previous_hash = require_string(j, "previous_hash");
  if (block.index == 0) throw Error(Errc::parse_error, "block index must be positive");
  if (block.previous_hash.empty() || block.previous_hash.size() > 64) {
    throw Error(Errc::parse_error, "previous_hash must be 1..64 characters");
  }
  const auto ts = j.find("timestamp");
  if (ts == j.end() || !ts->is_number_float()) {
    throw Error(Errc::parse_error, "missing or non-decimal field 'timestamp'");
  }
  block.timestamp_us = parse_canonical_timestamp(timestamp_token);
  const auto txs = j.find("transactions");
  if (txs == j.end() || !txs->is_array()) {
    throw Error(Errc::parse_error, "missing or non-array field 'transactions'");
  }
  block.transactions.reserve(txs->size());
  for (const auto& t : *txs) {
    block.transactions.push_back(transaction_from_json(t));
  }
  return block;
}

json parse_dom(const std::string& text) {
  json dom = json::parse(text, nullptr, false);
  if (dom.is_discarded()) throw Error(Errc::parse_error, "malformed JSON");
  return dom;
}

Chain chain_from_array(const json& array, const std::vector<std::string>& float_tokens) {
  if (!array.is_array()) throw Error(Errc::parse_error, "chain is not an array");
  if (float_tokens.size() != array.size()) {
    throw Error(Errc::parse_error, "expected exactly one decimal timestamp per block");
  }
  Chain chain;
  chain.blocks.reserve(array.size());
  for (size_t i = 0; i < array.size(); ++i) {
    chain.blocks.push_back(block_from_json(array[i], float_tokens[i]));
  }
  if (chain.blocks.empty()) throw Error(Errc::parse_error, "chain must not be empty");
  return chain;
}

}  // namespace

Block parse_block_json(const std::string& text) {
  const json dom = parse_dom(text);
  const auto tokens = collect_float_tokens(text);
  if (tokens.size() != 1) {
    throw Error(Errc::parse_error, "expected exactly one decimal timestamp in block");
  }
  return block_from_json(dom, tokens.front());
}

Chain parse_chain_json(const std::string& text) {
  return chain_from_array(parse_dom(text), collect_float_tokens(text));
}

Chain parse_chain_response(const std::string& text) {
  const json dom = parse_dom(text);
  if (!dom.is_object()) throw Error(Errc::parse_error, "response is not an object");
  const auto it = dom.find("chain");
  if (it == dom.end()) throw Error(Errc::parse_error, "response has no 'chain' field");
  return chain_from_array(*it, collect_float_tokens(text));
}

std::string chain_response_json(const Chain& chain) {
  return "{\"chain\":" + to_canonical_json(chain) +
         ",\"length\":" + std::to_string(chain.length()) + "}";
}

}  // namespace redes
