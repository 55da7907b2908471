#pragma once

#include <random>
#include <string>
#include <vector>

#include "redes/ledger.hpp"

namespace redes::testsupport {

inline std::string random_mac(std::mt19937_64& rng) {
  static const char hex[] = "0123456789abcdef";
  std::string mac;
  for (int octet = 0; octet < 6; ++octet) {
    if (octet != 0) mac.push_back(':');
    mac.push_back(hex[rng() % 16]);
    mac.push_back(hex[rng() % 16]);
  }
  return mac;
}

inline Transaction random_tx(std::mt19937_64& rng) {
  Transaction tx;
  tx.sender = "node-" + std::to_string(rng() % 10);
  tx.recipient = "node-" + std::to_string(rng() % 10);
  tx.mac = random_mac(rng);
  tx.action = rng() % 2 == 0 ? Action::allow : Action::deny;
  return tx;
}

/// A structurally valid chain of `length` blocks (genesis included), forged
/// with 1..3 random transactions per block.
inline Chain random_chain(std::mt19937_64& rng, size_t length, Difficulty difficulty) {
  Chain chain = genesis_chain();
  std::int64_t ts = 1'600'000'000'000'000;
  while (chain.length() < length) {
    std::vector<Transaction> txs;
    const size_t count = 1 + rng() % 3;
    for (size_t i = 0; i < count; ++i) txs.push_back(random_tx(rng));
    ts += 1000 + static_cast<std::int64_t>(rng() % 1000);
    chain.blocks.push_back(forge_block(chain, txs, difficulty, ts).block);
  }
  return chain;
}

/// Mutates one randomly chosen field of one randomly chosen non-tip block
/// (tip content is attested only once a successor links to it). The chain
/// stays structurally well-formed; returns a description of the mutation.
inline std::string mutate_single_field(Chain& chain, std::mt19937_64& rng) {
  const size_t target = rng() % (chain.length() - 1);  // excludes the tip
  Block& block = chain.blocks[target];

  std::vector<std::string> fields = {"index", "timestamp", "proof", "previous_hash"};
  if (!block.transactions.empty()) {
    fields.insert(fields.end(), {"tx_sender", "tx_recipient", "tx_mac", "tx_action"});
  }
  const std::string field = fields[rng() % fields.size()];
  const std::string where = "block " + std::to_string(target) + " " + field;

  if (field == "index") {
    block.index += 1;
  } else if (field == "timestamp") {
    block.timestamp_us += 1;
  } else if (field == "proof") {
    block.proof += 1;
  } else if (field == "previous_hash") {
    block.previous_hash[0] = block.previous_hash[0] == '1' ? '2' : '1';
  } else {
    Transaction& tx = block.transactions[rng() % block.transactions.size()];
    if (field == "tx_sender") {
      tx.sender += "x";
    } else if (field == "tx_recipient") {
      tx.recipient += "x";
    } else if (field == "tx_mac") {
      tx.mac[0] = tx.mac[0] == 'a' ? 'b' : 'a';
    } else {
      tx.action = tx.action == Action::allow ? Action::deny : Action::allow;
    }
  }
  return where;
}

}  // namespace redes::testsupport
