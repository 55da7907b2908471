#include <doctest.h>

#include <random>

#include "redes/codec.hpp"
#include "redes/errors.hpp"
#include "redes/ledger.hpp"
#include "test_support.hpp"

using namespace redes;

// Golden constants computed with an independent SHA-256 tool before this
// implementation existed; they pin the canonical form across platforms.
static const char* kGenesisJson =
    R"({"index":1,"previous_hash":"1","proof":100,"timestamp":0.000000,"transactions":[]})";
static const char* kGenesisDigest =
    "d24dbd41f5d5bc4ac7ad0325b9926efa4e12969ff95d7db2e79492a9970bc4f0";
static constexpr std::uint64_t kMinimalProofD4 = 35293;  // from last_proof 100
static constexpr std::uint64_t kMinimalProofD1 = 16;
static constexpr std::uint64_t kMinimalProofD2 = 226;

TEST_CASE("genesis canonical serialization and digest are pinned") {
  CHECK(to_canonical_json(genesis_block()) == kGenesisJson);
  CHECK(canonical_hash(genesis_block()) == kGenesisDigest);
  // determinism across invocations
  CHECK(canonical_hash(genesis_block()) == canonical_hash(genesis_block()));
}

TEST_CASE("single-field changes alter the digest") {
  Block a = genesis_block();
  Block b = a;
  b.proof += 1;
  CHECK(canonical_hash(a) != canonical_hash(b));
  b = a;
  b.timestamp_us += 1;
  CHECK(canonical_hash(a) != canonical_hash(b));
}

TEST_CASE("minimal proof at difficulty 4 matches the pinned oracle value") {
  const Difficulty d4(4);
  CHECK(valid_proof(100, kMinimalProofD4, d4));
  CHECK_FALSE(valid_proof(100, kMinimalProofD4 + 1, d4));  // oracle-verified invalid
  const MineResult mined = mine_proof(100, d4);
  CHECK(mined.proof == kMinimalProofD4);
  CHECK(mined.attempts == kMinimalProofD4 + 1);  // searched up from 0
}

TEST_CASE("minimal proofs at low difficulty match the pinned oracle values") {
  CHECK(mine_proof(100, Difficulty(1)).proof == kMinimalProofD1);
  CHECK(mine_proof(100, Difficulty(2)).proof == kMinimalProofD2);
  CHECK_FALSE(valid_proof(100, 0, Difficulty(2)));  // below the minimal nonce
}

TEST_CASE("proof soundness over sampled inputs and difficulties") {
  std::mt19937_64 rng(11);
  for (int d = 1; d <= 3; ++d) {
    for (int i = 0; i < 12; ++i) {
      const std::uint64_t x = rng() % 1'000'000;
      const MineResult mined = mine_proof(x, Difficulty(d));
      CHECK(valid_proof(x, mined.proof, Difficulty(d)));
    }
  }
  // difficulty 4 is ~65k expected attempts per search; sample sparsely
  for (const std::uint64_t x : {7ULL, 99991ULL}) {
    const MineResult mined = mine_proof(x, Difficulty(4));
    CHECK(valid_proof(x, mined.proof, Difficulty(4)));
  }
}

TEST_CASE("difficulty range is enforced") {
  CHECK_THROWS_AS(Difficulty(0), Error);
  CHECK_THROWS_AS(Difficulty(17), Error);
  CHECK(Difficulty().leading_zero_hex_digits() == 4);
}

TEST_CASE("mac normalization accepts common groupings") {
  CHECK(normalize_mac("AA:BB:CC:DD:EE:FF") == "aa:bb:cc:dd:ee:ff");
  CHECK(normalize_mac("aa-bb-cc-dd-ee-ff") == "aa:bb:cc:dd:ee:ff");
  CHECK(normalize_mac("aabb.ccdd.eeff") == "aa:bb:cc:dd:ee:ff");
  CHECK(normalize_mac("AABBCCDDEEFF") == "aa:bb:cc:dd:ee:ff");
  CHECK(is_canonical_mac("aa:bb:cc:dd:ee:ff"));
  CHECK_FALSE(is_canonical_mac("AA:bb:cc:dd:ee:ff"));
  CHECK_THROWS_AS(normalize_mac("aa:bb:cc:dd:ee"), Error);      // five octets
  CHECK_THROWS_AS(normalize_mac("zz:bb:cc:dd:ee:ff"), Error);   // non-hex
  CHECK_THROWS_AS(normalize_mac("aa:bb:cc:dd:ee:ff:00"), Error);
}

TEST_CASE("action aliases map onto the canonical vocabulary") {
  CHECK(parse_action("allow") == Action::allow);
  CHECK(parse_action("allowed") == Action::allow);
  CHECK(parse_action("add") == Action::allow);
  CHECK(parse_action("deny") == Action::deny);
  CHECK(parse_action("denied") == Action::deny);
  CHECK(parse_action("remove") == Action::deny);
  CHECK(parse_action("delete") == Action::deny);
  CHECK(parse_action("Allowed") == Action::allow);
  CHECK_THROWS_AS(parse_action("block"), Error);
}

TEST_CASE("new_transaction validates and normalizes") {
  const Transaction tx = new_transaction("node-A", "node-B", "AA:BB:CC:DD:EE:FF", "allow");
  CHECK(tx.mac == "aa:bb:cc:dd:ee:ff");
  CHECK(tx.action == Action::allow);

  CHECK(new_transaction("n1", "n2", "aa:bb:cc:dd:ee:ff", "remove").action == Action::deny);
  CHECK_THROWS_AS(new_transaction("n1", "n2", "aa:bb:cc:dd:ee", "allow"), Error);
  CHECK_THROWS_AS(new_transaction("", "n2", "aa:bb:cc:dd:ee:ff", "allow"), Error);
  CHECK_THROWS_AS(new_transaction(std::string(129, 'a'), "n2", "aa:bb:cc:dd:ee:ff", "allow"),
                  Error);
}

TEST_CASE("forge_block links onto the tip") {
  Chain chain = genesis_chain();
  const auto tx = new_transaction("a", "b", "aa:bb:cc:dd:ee:ff", "allow");

  const ForgeResult first = forge_block(chain, {tx}, Difficulty(2), 1'000'000);
  CHECK(first.block.index == 2);
  CHECK(first.block.previous_hash == kGenesisDigest);
  CHECK(first.attempts == kMinimalProofD2 + 1);
  chain.blocks.push_back(first.block);
  CHECK(valid_chain(chain, Difficulty(2)));

  const ForgeResult second = forge_block(chain, {tx}, Difficulty(2), 2'000'000);
  CHECK(second.block.index == 3);
  chain.blocks.push_back(second.block);
  CHECK(valid_chain(chain, Difficulty(2)));

  CHECK_THROWS_AS(forge_block(chain, {}, Difficulty(2), 3'000'000), Error);
}

TEST_CASE("valid_chain fundamentals") {
  const Difficulty d2(2);
  CHECK(valid_chain(genesis_chain(), d2));

  std::mt19937_64 rng(5);
  Chain chain = testsupport::random_chain(rng, 4, d2);
  CHECK(valid_chain(chain, d2));

  SUBCASE("flipped transaction byte in block 2") {
    chain.blocks[1].transactions[0].mac[0] = chain.blocks[1].transactions[0].mac[0] == 'a'
                                                 ? 'b'
                                                 : 'a';
    CHECK_FALSE(valid_chain(chain, d2));
  }
  SUBCASE("correct hashes but proof under difficulty") {
    Chain manual = genesis_chain();
    Block bad{2, 1'000'000, {testsupport::random_tx(rng)}, 0, canonical_hash(genesis_block())};
    manual.blocks.push_back(bad);  // 0 is below the minimal difficulty-2 nonce for 100
    CHECK_FALSE(valid_chain(manual, d2));
  }
  SUBCASE("foreign genesis") {
    chain.blocks[0].proof = 101;
    CHECK_FALSE(valid_chain(chain, d2));
  }
  SUBCASE("empty chain") { CHECK_FALSE(valid_chain(Chain{}, d2)); }
}

TEST_CASE("tamper-evidence: random single-field mutations invalidate the chain") {
  std::mt19937_64 rng(42);
  for (int i = 0; i < 40; ++i) {
    Chain chain = testsupport::random_chain(rng, 2 + rng() % 9, Difficulty(1));
    REQUIRE(valid_chain(chain, Difficulty(1)));
    const std::string what = testsupport::mutate_single_field(chain, rng);
    CAPTURE(what);
    CHECK_FALSE(valid_chain(chain, Difficulty(1)));
  }
}

TEST_CASE("canonical timestamps render and parse exactly") {
  CHECK(canonical_timestamp(0) == "0.000000");
  CHECK(canonical_timestamp(1'699'999'999'123'456) == "1699999999.123456");
  CHECK(parse_canonical_timestamp("1699999999.123456") == 1'699'999'999'123'456);
  CHECK(parse_canonical_timestamp("0.000001") == 1);
  CHECK_THROWS_AS(parse_canonical_timestamp("1.12345"), Error);
  CHECK_THROWS_AS(parse_canonical_timestamp("1.1234567"), Error);
  CHECK_THROWS_AS(parse_canonical_timestamp("-1.000000"), Error);
  CHECK_THROWS_AS(parse_canonical_timestamp("1e6"), Error);
  CHECK_THROWS_AS(parse_canonical_timestamp("1"), Error);
}

TEST_CASE("serialize/parse round-trip preserves blocks and bytes") {
  std::mt19937_64 rng(7);
  for (int i = 0; i < 10; ++i) {
    const Chain chain = testsupport::random_chain(rng, 2 + rng() % 5, Difficulty(1));
    const std::string text = to_canonical_json(chain);
    const Chain parsed = parse_chain_json(text);
    CHECK(parsed == chain);
    CHECK(to_canonical_json(parsed) == text);  // byte-identical re-serialization
    for (size_t b = 0; b < chain.length(); ++b) {
      CHECK(canonical_hash(parsed.blocks[b]) == canonical_hash(chain.blocks[b]));
    }
  }
}

TEST_CASE("string escaping stays canonical through the round-trip") {
  Chain chain = genesis_chain();
  Transaction tx;
  tx.sender = "node \"A\"\\1";
  tx.recipient = "b/c";
  tx.mac = "aa:bb:cc:dd:ee:ff";
  tx.action = Action::deny;
  chain.blocks.push_back(forge_block(chain, {tx}, Difficulty(1), 42).block);

  const std::string text = to_canonical_json(chain);
  const Chain parsed = parse_chain_json(text);
  CHECK(parsed == chain);
  CHECK(to_canonical_json(parsed) == text);
}

TEST_CASE("codec rejects non-canonical wire forms") {
  // integer timestamp token
  CHECK_THROWS_AS(
      parse_block_json(
          R"({"index":1,"previous_hash":"1","proof":100,"timestamp":0,"transactions":[]})"),
      Error);
  // non-canonical mac
  CHECK_THROWS_AS(
      parse_block_json(
          R"({"index":2,"previous_hash":"1","proof":1,"timestamp":0.000000,)"
          R"("transactions":[{"action":"allow","mac":"AA:BB:CC:DD:EE:FF","recipient":"r","sender":"s"}]})"),
      Error);
  // alias action is ingestion-only, not wire vocabulary
  CHECK_THROWS_AS(
      parse_block_json(
          R"({"index":2,"previous_hash":"1","proof":1,"timestamp":0.000000,)"
          R"("transactions":[{"action":"allowed","mac":"aa:bb:cc:dd:ee:ff","recipient":"r","sender":"s"}]})"),
      Error);
  // malformed JSON
  CHECK_THROWS_AS(parse_chain_json("[{"), Error);
  // genesis line round-trips
  CHECK(parse_block_json(kGenesisJson) == genesis_block());
}
