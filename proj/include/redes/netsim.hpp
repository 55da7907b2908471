#pragma once

#include <cstdint>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include "redes/actuator.hpp"
#include "redes/node_core.hpp"

namespace redes::netsim {

/// In-process multi-node network: real NodeCore instances driven through an
/// injected fetcher, a logical clock and direct chain handoff. No sockets, no
/// disk, no wall time; identical inputs give bit-identical runs.
class Simulation {
 public:
  struct Options {
    size_t nodes = 3;
    int difficulty = 2;
    std::uint64_t seed = 0;
    // Undirected adjacency; nullopt means full mesh.
    std::optional<std::vector<std::pair<size_t, size_t>>> edges;
  };

  explicit Simulation(const Options& options);

  // Node clocks capture `this`; the simulation must stay put.
  Simulation(const Simulation&) = delete;
  Simulation& operator=(const Simulation&) = delete;

  size_t size() const { return nodes_.size(); }
  NodeCore& node(size_t i) { return *nodes_.at(i).core; }
  const NodeCore& node(size_t i) const { return *nodes_.at(i).core; }
  SimulatedFirewall& firewall(size_t i) { return *nodes_.at(i).firewall; }

  static std::string address_of(size_t i);

  void submit_tx(size_t node, const std::string& sender, const std::string& recipient,
                 const std::string& mac, const std::string& action);

  /// Forges on `node`'s local chain; returns the hash attempts consumed.
  std::uint64_t forge(size_t node);

  /// One node resolves against live peer chains. Returns true on adoption.
  bool resolve(size_t node);

  /// One synchronous resolution round: every node resolves against chains as
  /// they stood at the start of the round, so information propagates exactly
  /// one hop per round regardless of node order. Returns the adoption count.
  size_t resolve_round();

  /// Runs rounds until no adoption happens. Returns rounds executed.
  size_t resolve_until_fixpoint(size_t max_rounds);

  /// Splits reachability into groups; every node must appear in exactly one.
  void partition(const std::vector<std::vector<size_t>>& groups);
  void heal();

  bool chains_equal() const;
  bool acls_equal() const;
  std::vector<size_t> chain_lengths() const;

  std::uint64_t mining_attempts(size_t node) const { return nodes_.at(node).mining_attempts; }
  std::uint64_t validation_hashes(size_t node) const {
    return nodes_.at(node).validation_hashes;
  }

 private:
  struct SimNode {
    SimulatedFirewall* firewall = nullptr;  // owned by core's backend slot
    std::unique_ptr<NodeCore> core;
    std::uint64_t mining_attempts = 0;
    std::uint64_t validation_hashes = 0;
  };

  bool reachable(size_t from, size_t to) const;
  bool resolve_with_chains(size_t node, const std::vector<Chain>& chains);

  std::vector<SimNode> nodes_;
  std::vector<std::vector<bool>> adjacency_;
  std::vector<size_t> group_of_;  // empty when not partitioned
  std::map<std::string, size_t> address_index_;
  std::int64_t clock_us_;
};

// Scripted scenarios.

struct SubmitTxEvent {
  size_t node;
  std::string sender, recipient, mac, action;
};
struct ForgeEvent {
  size_t node;
};
struct ResolveEvent {
  size_t node;
};
struct ResolveRoundEvent {};
struct ResolveUntilFixpointEvent {
  size_t max_rounds = 16;
};
struct PartitionEvent {
  std::vector<std::vector<size_t>> groups;
};
struct HealEvent {};

using Event = std::variant<SubmitTxEvent, ForgeEvent, ResolveEvent, ResolveRoundEvent,
                           ResolveUntilFixpointEvent, PartitionEvent, HealEvent>;

struct Scenario {
  Simulation::Options options;
  std::vector<Event> script;

  /// Throws Errc::script_error / Errc::parse_error.
  static Scenario from_json(const std::string& text);
  static Scenario from_file(const std::string& path);
};

struct Metrics {
  std::uint64_t mining_attempts_total = 0;
  std::vector<std::uint64_t> mining_attempts_by_node;
  std::vector<std::uint64_t> validation_hashes_by_node;
  // Resolution events executed when all chains first became equal; -1 when
  // equality was never observed.
  int resolution_rounds_to_convergence = -1;
  std::vector<size_t> chain_lengths;
  bool chains_equal = false;
  bool acl_equality = false;

  std::string to_csv() const;
};

struct RunResult {
  Metrics metrics;
  std::vector<Chain> chains;
  std::vector<AclState> acls;
};

RunResult run_scenario(const Scenario& scenario);

// Hashing-cost measurement.

struct CostRow {
  std::uint64_t seed = 0;
  size_t blocks = 0;          // measured blocks forged (B)
  size_t warmup_blocks = 0;   // seed-selected unmeasured prefix
  size_t chain_length = 0;    // issuer chain length after the run
  std::uint64_t mining_attempts = 0;        // issuer, measured blocks only
  std::uint64_t validation_hashes = 0;      // per adopting non-issuer
};

struct CostTable {
  std::vector<CostRow> rows;
  double mean_attempts_per_block = 0.0;
  double r_squared = 0.0;  // linear fit of per-B mean mining attempts vs B

  std::string to_csv() const;
};

/// For each B in tx_counts and each seed: forge B single-transaction blocks on
/// one issuer after a seed-selected warmup prefix, then run one resolution
/// round so every other node adopts. The warmup varies which stretch of the
/// deterministic proof search each seed measures.
CostTable measure_linear_cost(const std::vector<size_t>& tx_counts, Difficulty difficulty,
                              size_t nodes, const std::vector<std::uint64_t>& seeds);

// Convergence measurement.

struct ConvergenceResult {
  bool converged = false;
  size_t rounds = 0;
  bool stalemate = false;  // a full round changed nothing while chains differ
};

/// Runs synchronous resolution rounds until convergence, stalemate or the
/// round budget is exhausted.
ConvergenceResult run_to_convergence(Simulation& sim, size_t max_rounds);

}  // namespace redes::netsim
