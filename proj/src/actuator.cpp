#include "redes/actuator.hpp"

#include "redes/errors.hpp"

namespace redes {

AclState fold_block(AclState acl, const Block& block) {
  for (size_t pos = 0; pos < block.transactions.size(); ++pos) {
    const Transaction& tx = block.transactions[pos];
    acl.entries[tx.mac] = AclEntry{tx.action, block.index, pos};
  }
  return acl;
}

AclState fold_chain(const Chain& chain) {
  AclState acl;
  for (const Block& block : chain.blocks) {
    acl = fold_block(std::move(acl), block);
  }
  return acl;
}

bool SimulatedFirewall::take_injected_failure() {
  if (failures_to_inject_ > 0) {
    --failures_to_inject_;
    return true;
  }
  return false;
}

bool SimulatedFirewall::apply(const std::string& mac, Action action) {
  if (take_injected_failure()) return false;
  const auto it = rules_.find(mac);
  if (it != rules_.end() && it->second == action) return true;  // already in effect
  rules_[mac] = action;
  journal_.push_back({Op::apply, mac, action});
  return true;
}

bool SimulatedFirewall::revoke(const std::string& mac) {
  if (take_injected_failure()) return false;
  if (rules_.erase(mac) > 0) {
    journal_.push_back({Op::revoke, mac, std::nullopt});
  }
  return true;  // revoking an absent rule is a no-op
}

std::optional<Action> SimulatedFirewall::query(const std::string& mac) const {
  const auto it = rules_.find(mac);
  if (it == rules_.end()) return std::nullopt;
  return it->second;
}

CommandTemplateBackend::CommandTemplateBackend(CommandTemplates templates, CommandRunner runner)
    : templates_(std::move(templates)), runner_(std::move(runner)) {}

namespace {

std::string render(const std::string& tmpl, const std::string& mac) {
  std::string out = tmpl;
  const std::string placeholder = "{mac}";
  size_t pos = 0;
  while ((pos = out.find(placeholder, pos)) != std::string::npos) {
    out.replace(pos, placeholder.size(), mac);
    pos += mac.size();
  }
  return out;
}

}  // namespace

bool CommandTemplateBackend::run_sequence(const std::vector<const std::string*>& steps,
                                          const std::string& mac) {
  for (size_t i = 0; i < steps.size(); ++i) {
    const std::string command = render(*steps[i], mac);
    const int exit_code = runner_(command);
    if (exit_code != 0) {
      last_error_ = "step " + std::to_string(i + 1) + " '" + command + "' exited " +
                    std::to_string(exit_code);
      return false;
    }
  }
  last_error_.clear();
  return true;
}

bool CommandTemplateBackend::apply(const std::string& mac, Action action) {
  if (action == Action::allow) {
    return run_sequence({&templates_.add_rule, &templates_.set_target_accept,
                         &templates_.set_proto, &templates_.set_src, &templates_.set_src_mac,
                         &templates_.commit_reload},
                        mac);
  }
  // An explicit deny removes the allow rule, as does a revoke.
  return run_sequence({&templates_.delete_rule, &templates_.commit_reload}, mac);
}

bool CommandTemplateBackend::revoke(const std::string& mac) {
  return run_sequence({&templates_.delete_rule, &templates_.commit_reload}, mac);
}

bool Actuator::actuate(const std::string& mac, Action desired) {
  const auto it = applied_.find(mac);
  if (it != applied_.end() && it->second == desired) return true;
  if (!backend_.apply(mac, desired)) return false;
  applied_[mac] = desired;
  return true;
}

size_t Actuator::process_block(const Block& block) {
  size_t failures = 0;
  for (size_t pos = 0; pos < block.transactions.size(); ++pos) {
    const Transaction& tx = block.transactions[pos];
    acl_.entries[tx.mac] = AclEntry{tx.action, block.index, pos};
    if (!actuate(tx.mac, tx.action)) ++failures;
  }
  return failures;
}

size_t Actuator::replay_chain(const Chain& chain) {
  acl_ = fold_chain(chain);
  size_t failures = 0;

  for (const auto& [mac, entry] : acl_.entries) {
    if (!actuate(mac, entry.action)) ++failures;
  }

  // MACs actuated earlier but absent from the adopted chain must be revoked.
  for (auto it = applied_.begin(); it != applied_.end();) {
    if (acl_.entries.count(it->first) == 0) {
      if (backend_.revoke(it->first)) {
        it = applied_.erase(it);
        continue;
      }
      ++failures;
    }
    ++it;
  }
  return failures;
}

}  // namespace redes
