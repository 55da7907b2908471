#include <doctest.h>

#include <map>
#include <random>

#include "redes/consensus.hpp"
#include "redes/errors.hpp"
#include "test_support.hpp"

using namespace redes;

namespace {

// Fetcher over an in-memory peer table; records the addresses queried.
struct TableFetcher {
  std::map<std::string, std::optional<Chain>> table;
  mutable std::vector<std::string> queried;

  ChainFetcher fn() const {
    return [this](const std::string& address) -> std::optional<Chain> {
      queried.push_back(address);
      const auto it = table.find(address);
      return it == table.end() ? std::nullopt : it->second;
    };
  }
};

Chain extend(Chain chain, size_t target_length, std::mt19937_64& rng, Difficulty d) {
  std::int64_t ts = chain.tip().timestamp_us + 1'000'000;
  while (chain.length() < target_length) {
    chain.blocks.push_back(
        forge_block(chain, {testsupport::random_tx(rng)}, d, ts).block);
    ts += 1'000'000;
  }
  return chain;
}

}  // namespace

TEST_CASE("address normalization") {
  CHECK(normalize_address("http://10.0.0.2:5000") == "http://10.0.0.2:5000");
  CHECK(normalize_address("HTTP://Node-1:5000/") == "http://node-1:5000");
  CHECK(normalize_address("https://host:443") == "https://host:443");
  CHECK_THROWS_AS(normalize_address("10.0.0.2:5000"), Error);        // no scheme
  CHECK_THROWS_AS(normalize_address("http://10.0.0.2"), Error);      // no port
  CHECK_THROWS_AS(normalize_address("http://host:0"), Error);        // bad port
  CHECK_THROWS_AS(normalize_address("http://host:5000/api"), Error); // path
  CHECK_THROWS_AS(normalize_address("ftp://host:21"), Error);        // scheme
}

TEST_CASE("peer registry is a permissioned set") {
  PeerRegistry registry("http://10.0.0.1:5000");
  CHECK(registry.add("http://10.0.0.2:5000"));
  CHECK_FALSE(registry.add("http://10.0.0.2:5000"));  // idempotent
  CHECK(registry.size() == 1);

  CHECK(registry.add("http://10.0.0.3:5000"));
  CHECK(registry.add("http://10.0.0.4:5000"));
  CHECK(registry.size() == 3);

  CHECK_THROWS_AS(registry.add("http://10.0.0.1:5000"), Error);  // self
  CHECK_THROWS_AS(registry.add("not an address"), Error);

  CHECK(registry.remove("http://10.0.0.3:5000"));
  CHECK(registry.size() == 2);
  CHECK_FALSE(registry.remove("http://10.0.0.9:5000"));  // NotFound, unchanged
  CHECK(registry.size() == 2);
}

TEST_CASE("resolve_conflicts follows the longest-valid-chain rule") {
  const Difficulty d(1);
  std::mt19937_64 rng(21);
  const Chain local = extend(genesis_chain(), 5, rng, d);

  PeerRegistry registry;
  registry.add("http://peer-a:5000");
  TableFetcher peers;

  SUBCASE("adopts a strictly longer valid chain") {
    peers.table["http://peer-a:5000"] = extend(local, 7, rng, d);
    const auto [chain, report] = resolve_conflicts(local, registry, peers.fn(), d);
    CHECK(report.replaced);
    CHECK(report.adopted_from == "http://peer-a:5000");
    CHECK(report.old_length == 5);
    CHECK(report.new_length == 7);
    CHECK(chain.length() == 7);
    CHECK(valid_chain(chain, d));
  }

  SUBCASE("rejects a longer but tampered chain") {
    Chain tampered = extend(local, 7, rng, d);
    testsupport::mutate_single_field(tampered, rng);
    peers.table["http://peer-a:5000"] = tampered;
    const auto [chain, report] = resolve_conflicts(local, registry, peers.fn(), d);
    CHECK_FALSE(report.replaced);
    CHECK(report.peers_invalid_chain == 1);
    CHECK(chain == local);
  }

  SUBCASE("equal length never displaces the local chain") {
    Chain rival = genesis_chain();
    rival = extend(rival, 5, rng, d);  // diverges from local after genesis
    peers.table["http://peer-a:5000"] = rival;
    const auto [chain, report] = resolve_conflicts(local, registry, peers.fn(), d);
    CHECK_FALSE(report.replaced);
    CHECK(to_canonical_json(chain) == to_canonical_json(local));  // byte-for-byte retained
  }

  SUBCASE("unreachable peers are skipped, never fatal") {
    peers.table["http://peer-a:5000"] = std::nullopt;
    const auto [chain, report] = resolve_conflicts(local, registry, peers.fn(), d);
    CHECK_FALSE(report.replaced);
    CHECK(report.peers_unreachable == 1);
    CHECK(report.peers_queried == 1);
    CHECK(chain == local);
  }

  SUBCASE("no peers registered keeps the local chain") {
    const PeerRegistry empty;
    const auto [chain, report] = resolve_conflicts(local, empty, peers.fn(), d);
    CHECK_FALSE(report.replaced);
    CHECK(report.peers_queried == 0);
    CHECK(chain == local);
  }

  SUBCASE("longest of several valid candidates wins") {
    registry.add("http://peer-b:5000");
    peers.table["http://peer-a:5000"] = extend(local, 6, rng, d);
    peers.table["http://peer-b:5000"] = extend(local, 8, rng, d);
    const auto [chain, report] = resolve_conflicts(local, registry, peers.fn(), d);
    CHECK(report.replaced);
    CHECK(report.adopted_from == "http://peer-b:5000");
    CHECK(chain.length() == 8);
    // queried in lexicographic address order
    REQUIRE(peers.queried.size() == 2);
    CHECK(peers.queried[0] == "http://peer-a:5000");
    CHECK(peers.queried[1] == "http://peer-b:5000");
  }

  SUBCASE("removed peer is not queried") {
    registry.remove("http://peer-a:5000");
    const auto [chain, report] = resolve_conflicts(local, registry, peers.fn(), d);
    CHECK(peers.queried.empty());
    CHECK(chain == local);
  }

  SUBCASE("resolution is idempotent against unchanged peers") {
    peers.table["http://peer-a:5000"] = extend(local, 7, rng, d);
    const auto first = resolve_conflicts(local, registry, peers.fn(), d);
    const auto second = resolve_conflicts(first.chain, registry, peers.fn(), d);
    CHECK_FALSE(second.report.replaced);
    CHECK(second.chain == first.chain);
  }
}

TEST_CASE("accept_block guards the tip") {
  const Difficulty d(1);
  std::mt19937_64 rng(33);
  Chain chain = extend(genesis_chain(), 3, rng, d);

  SUBCASE("accepts a forged tip extension") {
    const Block next = forge_block(chain, {testsupport::random_tx(rng)}, d, 9'000'000).block;
    CHECK(accept_block(chain, next, d) == AcceptStatus::accepted);
    CHECK(chain.length() == 4);
    CHECK(valid_chain(chain, d));
  }

  SUBCASE("rejects wrong previous_hash") {
    Block next = forge_block(chain, {testsupport::random_tx(rng)}, d, 9'000'000).block;
    next.previous_hash[0] = next.previous_hash[0] == '1' ? '2' : '1';
    CHECK(accept_block(chain, next, d) == AcceptStatus::bad_linkage);
    CHECK(chain.length() == 3);
  }

  SUBCASE("rejects proof under difficulty") {
    // proof 0 is below the pinned minimal difficulty-2 nonce for last_proof 100
    Chain fresh = genesis_chain();
    const Block bad{2, 9'000'000, {testsupport::random_tx(rng)}, 0,
                    canonical_hash(genesis_block())};
    CHECK(accept_block(fresh, bad, Difficulty(2)) == AcceptStatus::bad_proof);
    CHECK(fresh.length() == 1);
  }

  SUBCASE("rejects a stale block") {
    const Block old_tip = chain.tip();
    const Block next = forge_block(chain, {testsupport::random_tx(rng)}, d, 9'000'000).block;
    REQUIRE(accept_block(chain, next, d) == AcceptStatus::accepted);
    CHECK(accept_block(chain, old_tip, d) == AcceptStatus::stale_block);
    CHECK(accept_block(chain, next, d) == AcceptStatus::stale_block);
  }

  SUBCASE("rejects an index gap") {
    Block next = forge_block(chain, {testsupport::random_tx(rng)}, d, 9'000'000).block;
    next.index += 1;
    CHECK(accept_block(chain, next, d) == AcceptStatus::bad_linkage);
  }
}

TEST_CASE("chain length is monotone and validity is preserved across operations") {
  const Difficulty d(1);
  std::mt19937_64 rng(55);
  Chain local = genesis_chain();
  PeerRegistry registry;
  registry.add("http://peer-a:5000");

  size_t last_length = local.length();
  for (int step = 0; step < 30; ++step) {
    switch (rng() % 3) {
      case 0: {  // forge + accept
        const Block next =
            forge_block(local, {testsupport::random_tx(rng)}, d,
                        static_cast<std::int64_t>(1'000'000) * (step + 1))
                .block;
        CHECK(accept_block(local, next, d) == AcceptStatus::accepted);
        break;
      }
      case 1: {  // resolve against a random peer chain (sometimes tampered)
        Chain peer = extend(local, local.length() + rng() % 3, rng, d);
        if (rng() % 2 == 0 && peer.length() >= 2) testsupport::mutate_single_field(peer, rng);
        TableFetcher peers;
        peers.table["http://peer-a:5000"] = peer;
        local = resolve_conflicts(local, registry, peers.fn(), d).chain;
        break;
      }
      default: {  // resolve against an unreachable peer
        TableFetcher peers;
        peers.table["http://peer-a:5000"] = std::nullopt;
        local = resolve_conflicts(local, registry, peers.fn(), d).chain;
        break;
      }
    }
    CHECK(local.length() >= last_length);
    CHECK(valid_chain(local, d));
    last_length = local.length();
  }
}
