#include "redes/node_core.hpp"

#include <fcntl.h>
#include <unistd.h>

#include <chrono>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <random>
#include <sstream>

#include <json.hpp>

#include "redes/codec.hpp"
#include "redes/errors.hpp"

namespace redes {

namespace fs = std::filesystem;
using nlohmann::json;

std::int64_t system_clock_us() {
  return std::chrono::duration_cast<std::chrono::microseconds>(
             std::chrono::system_clock::now().time_since_epoch())
      .count();
}

namespace {

std::string random_node_id() {
  std::random_device rd;
  std::ostringstream out;
  out << std::hex;
  for (int i = 0; i < 4; ++i) out << rd();
  std::string id = out.str();
  id.resize(32, '0');
  return id;
}

void fsync_file(FILE* f, const std::string& path) {
  if (std::fflush(f) != 0 || ::fsync(::fileno(f)) != 0) {
    throw Error(Errc::io_error, "flush failed for " + path);
  }
}

void fsync_parent_dir(const std::string& path) {
  const fs::path dir = fs::path(path).parent_path();
  const int fd = ::open(dir.empty() ? "." : dir.c_str(), O_RDONLY | O_DIRECTORY);
  if (fd >= 0) {
    ::fsync(fd);
    ::close(fd);
  }
}

void set_string(const json& j, const char* key, std::string& out) {
  if (!j.at(key).is_string()) throw Error(Errc::config_error, std::string(key) + " must be a string");
  out = j.at(key).get<std::string>();
}

}  // namespace

NodeConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error(Errc::config_error, "cannot open config file " + path);
  json j = json::parse(in, nullptr, false);
  if (j.is_discarded() || !j.is_object()) {
    throw Error(Errc::config_error, path + " is not a JSON object");
  }

  NodeConfig config;
  for (const auto& [key, value] : j.items()) {
    if (key == "host") {
      set_string(j, "host", config.host);
    } else if (key == "port") {
      if (!value.is_number_integer()) throw Error(Errc::config_error, "port must be an integer");
      config.port = value.get<int>();
      if (config.port < 1 || config.port > 65535) {
        throw Error(Errc::config_error, "port out of range");
      }
    } else if (key == "difficulty") {
      if (!value.is_number_integer()) {
        throw Error(Errc::config_error, "difficulty must be an integer");
      }
      config.difficulty = value.get<int>();
    } else if (key == "auth_token") {
      set_string(j, "auth_token", config.auth_token);
    } else if (key == "data_dir") {
      set_string(j, "data_dir", config.data_dir);
    } else if (key == "advertise") {
      set_string(j, "advertise", config.advertise);
    } else if (key == "backend") {
      set_string(j, "backend", config.backend);
      if (config.backend != "simulated" && config.backend != "command") {
        throw Error(Errc::config_error, "backend must be 'simulated' or 'command'");
      }
    } else if (key == "command_templates") {
      if (!value.is_object()) {
        throw Error(Errc::config_error, "command_templates must be an object");
      }
      for (const auto& [tkey, tval] : value.items()) {
        if (!tval.is_string()) {
          throw Error(Errc::config_error, "command template " + tkey + " must be a string");
        }
        const std::string text = tval.get<std::string>();
        if (tkey == "add_rule") config.templates.add_rule = text;
        else if (tkey == "set_target_accept") config.templates.set_target_accept = text;
        else if (tkey == "set_proto") config.templates.set_proto = text;
        else if (tkey == "set_src") config.templates.set_src = text;
        else if (tkey == "set_src_mac") config.templates.set_src_mac = text;
        else if (tkey == "commit_reload") config.templates.commit_reload = text;
        else if (tkey == "delete_rule") config.templates.delete_rule = text;
        else throw Error(Errc::config_error, "unknown command template '" + tkey + "'");
      }
    } else {
      throw Error(Errc::config_error, "unknown config key '" + key + "'");
    }
  }

  try {
    (void)Difficulty(config.difficulty);
  } catch (const Error& e) {
    throw Error(Errc::config_error, e.what());
  }
  if (!config.advertise.empty()) {
    try {
      config.advertise = normalize_address(config.advertise);
    } catch (const Error& e) {
      throw Error(Errc::config_error, std::string("advertise: ") + e.what());
    }
  }
  return config;
}

NodeCore::NodeCore(NodeConfig config, std::unique_ptr<ActuatorBackend> backend, Clock clock,
                   std::string node_id_override)
    : config_(std::move(config)),
      difficulty_(config_.difficulty),
      backend_(std::move(backend)),
      actuator_(*backend_),
      clock_(std::move(clock)),
      chain_(genesis_chain()),
      registry_(config_.advertise.empty() ? PeerRegistry() : PeerRegistry(config_.advertise)) {
  if (!config_.data_dir.empty()) {
    std::error_code ec;
    fs::create_directories(config_.data_dir, ec);
    if (ec) {
      throw Error(Errc::io_error, "cannot create data_dir " + config_.data_dir);
    }
    log_path_ = (fs::path(config_.data_dir) / "chain.log").string();
  }
  node_id_ = load_or_create_node_id(node_id_override);
  restore_or_init();
  actuator_.replay_chain(chain_);
}

std::string NodeCore::load_or_create_node_id(const std::string& override_id) {
  if (!override_id.empty()) return override_id;
  if (config_.data_dir.empty()) return random_node_id();

  const fs::path id_path = fs::path(config_.data_dir) / "node_id";
  std::ifstream in(id_path);
  std::string id;
  if (in && std::getline(in, id) && !id.empty()) return id;

  id = random_node_id();
  std::ofstream out(id_path, std::ios::trunc);
  if (!out || !(out << id << "\n")) {
    throw Error(Errc::io_error, "cannot write " + id_path.string());
  }
  return id;
}

void NodeCore::restore_or_init() {
  if (log_path_.empty()) return;

  std::ifstream in(log_path_);
  if (!in) {
    persist_rewrite(chain_);  // fresh log with the genesis line
    return;
  }

  std::vector<std::string> lines;
  std::string line;
  while (std::getline(in, line)) {
    if (!line.empty()) lines.push_back(line);
  }
  if (in.bad()) throw Error(Errc::io_error, "cannot read " + log_path_);

  if (lines.empty()) {
    persist_rewrite(chain_);
    return;
  }

  Chain restored = genesis_chain();
  size_t used = 0;
  try {
    if (parse_block_json(lines[0]) == genesis_block()) {
      used = 1;
      for (size_t i = 1; i < lines.size(); ++i) {
        const Block block = parse_block_json(lines[i]);
        if (accept_block(restored, block, difficulty_) != AcceptStatus::accepted) break;
        ++used;
      }
    }
  } catch (const Error&) {
    // parse failure ends the valid prefix
  }

  if (used < lines.size()) {
    std::cerr << "warning: " << log_path_ << " has a corrupt tail; keeping the first " << used
              << " of " << lines.size() << " blocks\n";
    if (used == 0) restored = genesis_chain();
    chain_ = std::move(restored);
    persist_rewrite(chain_);
    return;
  }
  chain_ = std::move(restored);
}

void NodeCore::persist_append(const Block& block) {
  if (log_path_.empty()) return;
  FILE* f = std::fopen(log_path_.c_str(), "ab");
  if (!f) throw Error(Errc::io_error, "cannot open " + log_path_);
  const std::string line = to_canonical_json(block) + "\n";
  const size_t written = std::fwrite(line.data(), 1, line.size(), f);
  if (written != line.size()) {
    std::fclose(f);
    throw Error(Errc::io_error, "short write to " + log_path_);
  }
  fsync_file(f, log_path_);
  std::fclose(f);
}

void NodeCore::persist_rewrite(const Chain& chain) {
  if (log_path_.empty()) return;
  const std::string tmp_path = log_path_ + ".tmp";
  FILE* f = std::fopen(tmp_path.c_str(), "wb");
  if (!f) throw Error(Errc::io_error, "cannot open " + tmp_path);
  for (const Block& block : chain.blocks) {
    const std::string line = to_canonical_json(block) + "\n";
    if (std::fwrite(line.data(), 1, line.size(), f) != line.size()) {
      std::fclose(f);
      throw Error(Errc::io_error, "short write to " + tmp_path);
    }
  }
  fsync_file(f, tmp_path);
  std::fclose(f);

  std::error_code ec;
  fs::rename(tmp_path, log_path_, ec);
  if (ec) throw Error(Errc::io_error, "cannot rename " + tmp_path);
  fsync_parent_dir(log_path_);
}

NodeCore::SubmitResult NodeCore::submit_transaction(const std::string& sender,
                                                    const std::string& recipient,
                                                    const std::string& mac,
                                                    const std::string& action) {
  const Transaction tx = new_transaction(sender, recipient, mac, action);
  std::lock_guard lock(state_mutex_);
  pending_.push_back(tx);
  return SubmitResult{tx, chain_.tip().index + 1};
}

NodeCore::ForgeOutcome NodeCore::forge() {
  std::lock_guard forge_lock(forge_mutex_);
  for (int round = 0; round < 2; ++round) {
    Block tip;
    std::vector<Transaction> batch;
    {
      std::lock_guard lock(state_mutex_);
      if (pending_.empty()) throw Error(Errc::empty_pending, "no transactions queued");
      tip = chain_.tip();
      batch = pending_;
    }

    const MineResult mined = mine_proof(tip.proof, difficulty_);
    Block block{tip.index + 1, clock_(), std::move(batch), mined.proof, canonical_hash(tip)};

    {
      std::lock_guard lock(state_mutex_);
      mining_attempts_ += mined.attempts;
      if (chain_.tip() == tip) {
        chain_.blocks.push_back(block);
        pending_.erase(pending_.begin(),
                       pending_.begin() + static_cast<std::ptrdiff_t>(block.transactions.size()));
        actuator_.process_block(block);
        persist_append(block);
        return ForgeOutcome{std::move(block), mined.attempts};
      }
    }
    // The tip moved while mining (an adoption or a concurrent forge); retry
    // once against the new tip.
  }
  throw Error(Errc::tip_moved, "chain tip changed repeatedly while mining");
}

ResolutionReport NodeCore::resolve(const ChainFetcher& fetch) {
  PeerRegistry registry_copy;
  Chain local_copy;
  {
    std::lock_guard lock(state_mutex_);
    registry_copy = registry_;
    local_copy = chain_;
  }

  ResolveResult result = resolve_conflicts(local_copy, registry_copy, fetch, difficulty_);

  if (result.report.replaced) {
    std::lock_guard lock(state_mutex_);
    if (result.chain.length() > chain_.length()) {
      chain_ = std::move(result.chain);
      actuator_.replay_chain(chain_);
      persist_rewrite(chain_);
    } else {
      // The local chain caught up while peers were being queried.
      result.report.replaced = false;
      result.report.adopted_from.reset();
    }
    result.report.new_length = chain_.length();
  }
  return result.report;
}

AcceptStatus NodeCore::submit_block(const Block& block) {
  std::lock_guard lock(state_mutex_);
  const AcceptStatus status = accept_block(chain_, block, difficulty_);
  if (status == AcceptStatus::accepted) {
    actuator_.process_block(block);
    persist_append(block);
  }
  return status;
}

bool NodeCore::register_peer(const std::string& address) {
  std::lock_guard lock(state_mutex_);
  return registry_.add(address);
}

bool NodeCore::remove_peer(const std::string& address) {
  std::lock_guard lock(state_mutex_);
  return registry_.remove(address);
}

std::vector<std::string> NodeCore::peer_list() const {
  std::lock_guard lock(state_mutex_);
  return {registry_.peers().begin(), registry_.peers().end()};
}

size_t NodeCore::peer_count() const {
  std::lock_guard lock(state_mutex_);
  return registry_.size();
}

Chain NodeCore::chain_snapshot() const {
  std::lock_guard lock(state_mutex_);
  return chain_;
}

size_t NodeCore::chain_length() const {
  std::lock_guard lock(state_mutex_);
  return chain_.length();
}

std::uint64_t NodeCore::block_index_hint() const {
  std::lock_guard lock(state_mutex_);
  return chain_.tip().index + 1;
}

size_t NodeCore::pending_count() const {
  std::lock_guard lock(state_mutex_);
  return pending_.size();
}

AclState NodeCore::acl_snapshot() const {
  std::lock_guard lock(state_mutex_);
  return actuator_.acl();
}

std::uint64_t NodeCore::mining_attempts_total() const {
  std::lock_guard lock(state_mutex_);
  return mining_attempts_;
}

}  // namespace redes
