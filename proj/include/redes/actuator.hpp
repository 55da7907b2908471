#pragma once

#include <functional>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "redes/ledger.hpp"

namespace redes {

struct AclEntry {
  Action action = Action::allow;
  // Provenance: which chain position last wrote this MAC.
  std::uint64_t block_index = 0;
  std::uint64_t tx_position = 0;

  bool operator==(const AclEntry&) const = default;
};

/// The materialized access-control list: the last-writer-wins fold of every
/// transaction in the chain, in (block index, transaction position) order.
/// A pure function of the chain.
struct AclState {
  std::map<std::string, AclEntry> entries;  // keyed by canonical MAC

  bool operator==(const AclState&) const = default;
};

/// Pure folds; no enforcement side effects.
AclState fold_block(AclState acl, const Block& block);
AclState fold_chain(const Chain& chain);

/// Enforcement capability. Implementations must be idempotent: re-applying the
/// current state is observationally a no-op. Returning false reports a backend
/// failure; the ACL itself is never blocked on the backend.
class ActuatorBackend {
 public:
  virtual ~ActuatorBackend() = default;
  virtual bool apply(const std::string& mac, Action action) = 0;
  virtual bool revoke(const std::string& mac) = 0;
};

/// In-memory rule table with a journal of effective changes. Default backend.
class SimulatedFirewall : public ActuatorBackend {
 public:
  enum class Op { apply, revoke };
  struct JournalEntry {
    Op op;
    std::string mac;
    std::optional<Action> action;  // set for apply
  };

  bool apply(const std::string& mac, Action action) override;
  bool revoke(const std::string& mac) override;

  std::optional<Action> query(const std::string& mac) const;
  const std::map<std::string, Action>& rules() const { return rules_; }
  const std::vector<JournalEntry>& journal() const { return journal_; }

  /// Makes the next `count` mutating calls fail (for failure-injection tests).
  void inject_failures(int count) { failures_to_inject_ = count; }

 private:
  bool take_injected_failure();

  std::map<std::string, Action> rules_;
  std::vector<JournalEntry> journal_;
  int failures_to_inject_ = 0;
};

/// Platform command templates with a {mac} placeholder. Defaults mirror the
/// OpenWRT firewall steps: add rule, set target/proto/src/src_mac, commit.
struct CommandTemplates {
  std::string add_rule = "add firewall rule {mac}";
  std::string set_target_accept = "set firewall.rule[-1].target=accept";
  std::string set_proto = "set firewall.rule[-1].proto=tcp udp icmp";
  std::string set_src = "set firewall.rule[-1].src=lan";
  std::string set_src_mac = "set firewall.rule[-1].src_mac={mac}";
  std::string commit_reload = "commit and reload";
  std::string delete_rule = "delete firewall rule {mac}";
};

/// Runs a rendered command, returns its exit status.
using CommandRunner = std::function<int(const std::string& command)>;

/// Drives a real (or stubbed) firewall through shell commands.
/// allow: add_rule, set_target_accept, set_proto, set_src, set_src_mac,
/// commit_reload. deny/revoke: delete_rule, commit_reload.
/// A non-zero exit aborts the sequence and reports the failing step.
class CommandTemplateBackend : public ActuatorBackend {
 public:
  CommandTemplateBackend(CommandTemplates templates, CommandRunner runner);

  bool apply(const std::string& mac, Action action) override;
  bool revoke(const std::string& mac) override;

  /// Rendered command and 1-based step of the most recent failure, if any.
  const std::string& last_error() const { return last_error_; }

 private:
  bool run_sequence(const std::vector<const std::string*>& steps, const std::string& mac);

  CommandTemplates templates_;
  CommandRunner runner_;
  std::string last_error_;
};

/// Applies chain state to a backend. Keeps a shadow of what was successfully
/// actuated so that failed backend calls are retried on the next replay. The
/// chain, not the backend, is the source of truth for the ACL.
class Actuator {
 public:
  explicit Actuator(ActuatorBackend& backend) : backend_(backend) {}

  /// Folds one accepted block into the ACL, actuating only effective changes.
  /// Returns the number of backend failures.
  size_t process_block(const Block& block);

  /// Recomputes the ACL from the whole chain and issues only the delta against
  /// the last successfully applied state. Invoked on chain adoption.
  size_t replay_chain(const Chain& chain);

  const AclState& acl() const { return acl_; }
  const std::map<std::string, Action>& applied() const { return applied_; }

 private:
  // Pushes `mac`'s desired action to the backend if it differs from the
  // applied shadow. Returns false on backend failure.
  bool actuate(const std::string& mac, Action desired);

  AclState acl_;
  std::map<std::string, Action> applied_;
  ActuatorBackend& backend_;
};

}  // namespace redes
