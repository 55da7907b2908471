#pragma once

#include <cstdint>
#include <functional>
#include <memory>
#include <mutex>
#include <string>
#include <vector>

#include "redes/actuator.hpp"
#include "redes/consensus.hpp"
#include "redes/ledger.hpp"

namespace redes {

struct NodeConfig {
  std::string host = "0.0.0.0";
  int port = 5000;
  int difficulty = 4;
  std::string auth_token;   // empty disables admission checks
  std::string data_dir;     // empty disables persistence
  std::string advertise;    // this node's own address, guards self-registration
  std::string backend = "simulated";  // "simulated" | "command"
  CommandTemplates templates;
};

/// Loads a JSON config file. Unknown keys are rejected.
/// Throws Errc::config_error.
NodeConfig load_config(const std::string& path);

/// Microseconds since the Unix epoch.
using Clock = std::function<std::int64_t()>;
std::int64_t system_clock_us();

/// Node runtime state: chain, pending pool, peer registry and ACL, with
/// persistence and actuator wiring. All mutations serialize through one
/// internal lock; mining runs outside it against a snapshot and commits only
/// if the tip did not move (one retry otherwise).
class NodeCore {
 public:
  NodeCore(NodeConfig config, std::unique_ptr<ActuatorBackend> backend,
           Clock clock = system_clock_us, std::string node_id_override = "");

  const std::string& node_id() const { return node_id_; }
  Difficulty difficulty() const { return difficulty_; }
  const NodeConfig& config() const { return config_; }

  struct SubmitResult {
    Transaction tx;
    std::uint64_t block_index_hint = 0;
  };
  /// Validates, normalizes and queues a transaction.
  SubmitResult submit_transaction(const std::string& sender, const std::string& recipient,
                                  const std::string& mac, const std::string& action);

  struct ForgeOutcome {
    Block block;
    std::uint64_t attempts = 0;
  };
  /// Mines and appends the next block from the pending pool; drains exactly
  /// the forged transactions; applies SON processing and persists.
  /// Throws Errc::empty_pending / Errc::tip_moved.
  ForgeOutcome forge();

  /// Longest-valid-chain resolution against registered peers. On adoption the
  /// ACL is replayed from the new chain and the log is rewritten atomically.
  ResolutionReport resolve(const ChainFetcher& fetch);

  /// Tip-extension path for externally produced blocks.
  AcceptStatus submit_block(const Block& block);

  bool register_peer(const std::string& address);
  bool remove_peer(const std::string& address);
  std::vector<std::string> peer_list() const;
  size_t peer_count() const;

  Chain chain_snapshot() const;
  size_t chain_length() const;
  std::uint64_t block_index_hint() const;
  size_t pending_count() const;
  AclState acl_snapshot() const;

  /// Cumulative issuer-side hash attempts spent mining on this node.
  std::uint64_t mining_attempts_total() const;

 private:
  void restore_or_init();
  void persist_append(const Block& block);
  void persist_rewrite(const Chain& chain);
  std::string load_or_create_node_id(const std::string& override_id);

  NodeConfig config_;
  Difficulty difficulty_;
  std::unique_ptr<ActuatorBackend> backend_;
  Actuator actuator_;
  Clock clock_;
  std::string node_id_;
  std::string log_path_;  // empty when persistence is off

  mutable std::mutex state_mutex_;
  std::mutex forge_mutex_;  // one forge at a time; state lock stays free while mining
  Chain chain_;
  std::vector<Transaction> pending_;
  PeerRegistry registry_;
  std::uint64_t mining_attempts_ = 0;
};

}  // namespace redes
