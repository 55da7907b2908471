#include "redes/netsim.hpp"

#include <fstream>
#include <random>
#include <sstream>

#include <json.hpp>

#include "redes/errors.hpp"
#include "redes/sha256.hpp"

namespace redes::netsim {

using nlohmann::json;

namespace {

constexpr std::int64_t kSimEpochUs = 1'600'000'000'000'000;  // fixed logical epoch
constexpr size_t kMaxSimNodes = 200;

std::string cost_mac(std::uint64_t counter) {
  char buf[18];
  std::snprintf(buf, sizeof(buf), "02:00:%02x:%02x:%02x:%02x",
                static_cast<unsigned>((counter >> 24) & 0xff),
                static_cast<unsigned>((counter >> 16) & 0xff),
                static_cast<unsigned>((counter >> 8) & 0xff),
                static_cast<unsigned>(counter & 0xff));
  return buf;
}

}  // namespace

Simulation::Simulation(const Options& options) : clock_us_(kSimEpochUs) {
  if (options.nodes == 0 || options.nodes > kMaxSimNodes) {
    throw Error(Errc::script_error,
                "node count must be in [1," + std::to_string(kMaxSimNodes) + "]");
  }

  adjacency_.assign(options.nodes, std::vector<bool>(options.nodes, false));
  if (options.edges) {
    for (const auto& [a, b] : *options.edges) {
      if (a >= options.nodes || b >= options.nodes || a == b) {
        throw Error(Errc::script_error, "edge references an unknown node");
      }
      adjacency_[a][b] = adjacency_[b][a] = true;
    }
  } else {
    for (size_t a = 0; a < options.nodes; ++a) {
      for (size_t b = 0; b < options.nodes; ++b) {
        if (a != b) adjacency_[a][b] = true;
      }
    }
  }

  // Logical clock shared by all nodes; advances one millisecond per reading.
  auto clock = [this]() {
    clock_us_ += 1000;
    return clock_us_;
  };

  nodes_.reserve(options.nodes);
  for (size_t i = 0; i < options.nodes; ++i) {
    NodeConfig config;
    config.difficulty = options.difficulty;
    config.advertise = address_of(i);
    auto firewall = std::make_unique<SimulatedFirewall>();
    SimNode sim_node;
    sim_node.firewall = firewall.get();
    sim_node.core = std::make_unique<NodeCore>(config, std::move(firewall), clock,
                                               "sim-node-" + std::to_string(i));
    nodes_.push_back(std::move(sim_node));
    address_index_[address_of(i)] = i;
  }

  for (size_t a = 0; a < options.nodes; ++a) {
    for (size_t b = 0; b < options.nodes; ++b) {
      if (adjacency_[a][b]) nodes_[a].core->register_peer(address_of(b));
    }
  }
}

std::string Simulation::address_of(size_t i) {
  return "http://10.0.0." + std::to_string(i + 1) + ":5000";
}

bool Simulation::reachable(size_t from, size_t to) const {
  if (!adjacency_[from][to]) return false;
  if (group_of_.empty()) return true;
  return group_of_[from] == group_of_[to];
}

void Simulation::submit_tx(size_t node, const std::string& sender, const std::string& recipient,
                           const std::string& mac, const std::string& action) {
  nodes_.at(node).core->submit_transaction(sender, recipient, mac, action);
}

std::uint64_t Simulation::forge(size_t node) {
  const auto outcome = nodes_.at(node).core->forge();
  nodes_[node].mining_attempts += outcome.attempts;
  return outcome.attempts;
}

bool Simulation::resolve_with_chains(size_t node, const std::vector<Chain>& chains) {
  ChainFetcher fetcher = [this, node, &chains](const std::string& address)
      -> std::optional<Chain> {
    const auto it = address_index_.find(address);
    if (it == address_index_.end()) return std::nullopt;
    const size_t peer = it->second;
    if (!reachable(node, peer)) return std::nullopt;
    return chains[peer];
  };

  const std::uint64_t before = sha256_invocations();
  const ResolutionReport report = nodes_[node].core->resolve(fetcher);
  nodes_[node].validation_hashes += sha256_invocations() - before;
  return report.replaced;
}

bool Simulation::resolve(size_t node) {
  if (node >= nodes_.size()) throw Error(Errc::script_error, "unknown node");
  std::vector<Chain> live;
  live.reserve(nodes_.size());
  for (const auto& n : nodes_) live.push_back(n.core->chain_snapshot());
  return resolve_with_chains(node, live);
}

size_t Simulation::resolve_round() {
  std::vector<Chain> snapshot;
  snapshot.reserve(nodes_.size());
  for (const auto& n : nodes_) snapshot.push_back(n.core->chain_snapshot());

  size_t adoptions = 0;
  for (size_t i = 0; i < nodes_.size(); ++i) {
    if (resolve_with_chains(i, snapshot)) ++adoptions;
  }
  return adoptions;
}

size_t Simulation::resolve_until_fixpoint(size_t max_rounds) {
  for (size_t round = 1; round <= max_rounds; ++round) {
    if (resolve_round() == 0) return round;
  }
  return max_rounds;
}

void Simulation::partition(const std::vector<std::vector<size_t>>& groups) {
  std::vector<size_t> group_of(nodes_.size(), SIZE_MAX);
  for (size_t g = 0; g < groups.size(); ++g) {
    for (size_t node : groups[g]) {
      if (node >= nodes_.size() || group_of[node] != SIZE_MAX) {
        throw Error(Errc::script_error, "partition groups must cover each node exactly once");
      }
      group_of[node] = g;
    }
  }
  for (size_t node = 0; node < nodes_.size(); ++node) {
    if (group_of[node] == SIZE_MAX) {
      throw Error(Errc::script_error,
                  "node " + std::to_string(node) + " missing from partition groups");
    }
  }
  group_of_ = std::move(group_of);
}

void Simulation::heal() { group_of_.clear(); }

bool Simulation::chains_equal() const {
  for (size_t i = 1; i < nodes_.size(); ++i) {
    if (!(nodes_[i].core->chain_snapshot() == nodes_[0].core->chain_snapshot())) return false;
  }
  return true;
}

bool Simulation::acls_equal() const {
  for (size_t i = 1; i < nodes_.size(); ++i) {
    if (!(nodes_[i].core->acl_snapshot() == nodes_[0].core->acl_snapshot())) return false;
  }
  return true;
}

std::vector<size_t> Simulation::chain_lengths() const {
  std::vector<size_t> lengths;
  lengths.reserve(nodes_.size());
  for (const auto& n : nodes_) lengths.push_back(n.core->chain_length());
  return lengths;
}

namespace {

size_t require_node(const json& event, const char* key, size_t node_count) {
  const auto it = event.find(key);
  if (it == event.end() || !it->is_number_unsigned()) {
    throw Error(Errc::script_error, std::string("event needs an unsigned '") + key + "'");
  }
  const size_t node = it->get<size_t>();
  if (node >= node_count) {
    throw Error(Errc::script_error, "event references unknown node " + std::to_string(node));
  }
  return node;
}

std::string require_string_field(const json& event, const char* key) {
  const auto it = event.find(key);
  if (it == event.end() || !it->is_string()) {
    throw Error(Errc::script_error, std::string("event needs a string '") + key + "'");
  }
  return it->get<std::string>();
}

}  // namespace

Scenario Scenario::from_json(const std::string& text) {
  json dom = json::parse(text, nullptr, false);
  if (dom.is_discarded() || !dom.is_object()) {
    throw Error(Errc::parse_error, "scenario must be a JSON object");
  }

  Scenario scenario;
  scenario.options.seed = dom.value("seed", 0ULL);
  scenario.options.nodes = dom.value("nodes", size_t{3});
  scenario.options.difficulty = dom.value("difficulty", 2);

  if (dom.contains("topology") && dom["topology"] != "full_mesh") {
    const auto& topo = dom["topology"];
    if (!topo.is_object() || !topo.contains("edges") || !topo["edges"].is_array()) {
      throw Error(Errc::script_error, "topology must be \"full_mesh\" or {\"edges\":[[a,b]..]}");
    }
    std::vector<std::pair<size_t, size_t>> edges;
    for (const auto& e : topo["edges"]) {
      if (!e.is_array() || e.size() != 2 || !e[0].is_number_unsigned() ||
          !e[1].is_number_unsigned()) {
        throw Error(Errc::script_error, "edges must be [from,to] index pairs");
      }
      edges.emplace_back(e[0].get<size_t>(), e[1].get<size_t>());
    }
    scenario.options.edges = std::move(edges);
  }

  const auto script = dom.find("script");
  if (script == dom.end() || !script->is_array()) {
    throw Error(Errc::script_error, "scenario needs a 'script' array");
  }
  for (const auto& event : *script) {
    if (!event.is_object() || !event.contains("op") || !event["op"].is_string()) {
      throw Error(Errc::script_error, "script events need an 'op' string");
    }
    const std::string op = event["op"].get<std::string>();
    if (op == "submit_tx") {
      scenario.script.push_back(SubmitTxEvent{
          require_node(event, "node", scenario.options.nodes),
          require_string_field(event, "sender"), require_string_field(event, "recipient"),
          require_string_field(event, "mac"), require_string_field(event, "action")});
    } else if (op == "forge") {
      scenario.script.push_back(ForgeEvent{require_node(event, "node", scenario.options.nodes)});
    } else if (op == "resolve") {
      scenario.script.push_back(
          ResolveEvent{require_node(event, "node", scenario.options.nodes)});
    } else if (op == "resolve_round") {
      scenario.script.push_back(ResolveRoundEvent{});
    } else if (op == "resolve_until_fixpoint") {
      ResolveUntilFixpointEvent e;
      if (event.contains("max_rounds")) {
        if (!event["max_rounds"].is_number_unsigned() || event["max_rounds"] == 0) {
          throw Error(Errc::script_error, "max_rounds must be a positive integer");
        }
        e.max_rounds = event["max_rounds"].get<size_t>();
      }
      scenario.script.push_back(e);
    } else if (op == "partition") {
      const auto groups = event.find("groups");
      if (groups == event.end() || !groups->is_array()) {
        throw Error(Errc::script_error, "partition needs a 'groups' array");
      }
      PartitionEvent e;
      for (const auto& group : *groups) {
        if (!group.is_array()) throw Error(Errc::script_error, "groups must be index arrays");
        std::vector<size_t> members;
        for (const auto& m : group) {
          members.push_back(require_node(json{{"node", m}}, "node", scenario.options.nodes));
        }
        e.groups.push_back(std::move(members));
      }
      scenario.script.push_back(std::move(e));
    } else if (op == "heal") {
      scenario.script.push_back(HealEvent{});
    } else {
      throw Error(Errc::script_error, "unknown op '" + op + "'");
    }
  }
  return scenario;
}

Scenario Scenario::from_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error(Errc::io_error, "cannot open scenario file " + path);
  std::ostringstream buffer;
  buffer << in.rdbuf();
  return from_json(buffer.str());
}

RunResult run_scenario(const Scenario& scenario) {
  Simulation sim(scenario.options);
  RunResult result;
  Metrics& metrics = result.metrics;

  int resolution_events = 0;
  auto note_convergence = [&] {
    if (metrics.resolution_rounds_to_convergence < 0 && sim.chains_equal()) {
      metrics.resolution_rounds_to_convergence = resolution_events;
    }
  };
  note_convergence();  // single-node networks converge at round zero

  for (const Event& event : scenario.script) {
    std::visit(
        [&](const auto& e) {
          using T = std::decay_t<decltype(e)>;
          if constexpr (std::is_same_v<T, SubmitTxEvent>) {
            sim.submit_tx(e.node, e.sender, e.recipient, e.mac, e.action);
          } else if constexpr (std::is_same_v<T, ForgeEvent>) {
            sim.forge(e.node);
          } else if constexpr (std::is_same_v<T, ResolveEvent>) {
            sim.resolve(e.node);
            ++resolution_events;
          } else if constexpr (std::is_same_v<T, ResolveRoundEvent>) {
            sim.resolve_round();
            ++resolution_events;
          } else if constexpr (std::is_same_v<T, ResolveUntilFixpointEvent>) {
            for (size_t round = 1; round <= e.max_rounds; ++round) {
              const size_t adoptions = sim.resolve_round();
              ++resolution_events;
              note_convergence();
              if (adoptions == 0) break;
            }
          } else if constexpr (std::is_same_v<T, PartitionEvent>) {
            sim.partition(e.groups);
          } else if constexpr (std::is_same_v<T, HealEvent>) {
            sim.heal();
          }
        },
        event);
    note_convergence();
  }

  metrics.chain_lengths = sim.chain_lengths();
  metrics.chains_equal = sim.chains_equal();
  metrics.acl_equality = sim.acls_equal();
  for (size_t i = 0; i < sim.size(); ++i) {
    metrics.mining_attempts_by_node.push_back(sim.mining_attempts(i));
    metrics.validation_hashes_by_node.push_back(sim.validation_hashes(i));
    metrics.mining_attempts_total += sim.mining_attempts(i);
    result.chains.push_back(sim.node(i).chain_snapshot());
    result.acls.push_back(sim.node(i).acl_snapshot());
  }
  return result;
}

std::string Metrics::to_csv() const {
  std::ostringstream out;
  out << "node,chain_length,mining_attempts,validation_hashes\n";
  for (size_t i = 0; i < chain_lengths.size(); ++i) {
    out << i << "," << chain_lengths[i] << "," << mining_attempts_by_node[i] << ","
        << validation_hashes_by_node[i] << "\n";
  }
  return out.str();
}

CostTable measure_linear_cost(const std::vector<size_t>& tx_counts, Difficulty difficulty,
                              size_t nodes, const std::vector<std::uint64_t>& seeds) {
  if (nodes < 2) throw Error(Errc::script_error, "linear-cost runs need at least 2 nodes");
  CostTable table;
  std::uint64_t total_attempts = 0;
  std::uint64_t total_blocks = 0;

  for (const std::uint64_t seed : seeds) {
    std::mt19937_64 rng(seed);
    const size_t warmup = static_cast<size_t>(rng() % 64);

    for (const size_t blocks : tx_counts) {
      Simulation::Options options;
      options.nodes = nodes;
      options.difficulty = difficulty.leading_zero_hex_digits();
      options.seed = seed;
      Simulation sim(options);

      std::uint64_t mac_counter = (seed << 16) & 0xffffffff;
      for (size_t i = 0; i < warmup; ++i) {
        sim.submit_tx(0, "issuer", "network", cost_mac(mac_counter++), "allow");
        sim.forge(0);
      }

      const std::uint64_t before_mining = sim.mining_attempts(0);
      for (size_t i = 0; i < blocks; ++i) {
        sim.submit_tx(0, "issuer", "network", cost_mac(mac_counter++), "allow");
        sim.forge(0);
      }

      sim.resolve_round();

      CostRow row;
      row.seed = seed;
      row.blocks = blocks;
      row.warmup_blocks = warmup;
      row.chain_length = sim.node(0).chain_length();
      row.mining_attempts = sim.mining_attempts(0) - before_mining;
      row.validation_hashes = sim.validation_hashes(1);  // all non-issuers do equal work
      table.rows.push_back(row);

      total_attempts += row.mining_attempts;
      total_blocks += blocks;
    }
  }

  table.mean_attempts_per_block =
      total_blocks == 0 ? 0.0 : static_cast<double>(total_attempts) / total_blocks;

  // Least-squares fit of per-B mean attempts against B.
  std::map<size_t, std::pair<double, size_t>> by_blocks;
  for (const CostRow& row : table.rows) {
    auto& [sum, count] = by_blocks[row.blocks];
    sum += static_cast<double>(row.mining_attempts);
    ++count;
  }
  const size_t n = by_blocks.size();
  if (n >= 2) {
    double sx = 0, sy = 0, sxx = 0, sxy = 0;
    for (const auto& [b, agg] : by_blocks) {
      const double x = static_cast<double>(b);
      const double y = agg.first / static_cast<double>(agg.second);
      sx += x;
      sy += y;
      sxx += x * x;
      sxy += x * y;
    }
    const double dn = static_cast<double>(n);
    const double slope = (dn * sxy - sx * sy) / (dn * sxx - sx * sx);
    const double intercept = (sy - slope * sx) / dn;
    double ss_res = 0, ss_tot = 0;
    const double mean_y = sy / dn;
    for (const auto& [b, agg] : by_blocks) {
      const double x = static_cast<double>(b);
      const double y = agg.first / static_cast<double>(agg.second);
      const double fit = slope * x + intercept;
      ss_res += (y - fit) * (y - fit);
      ss_tot += (y - mean_y) * (y - mean_y);
    }
    table.r_squared = ss_tot == 0 ? 1.0 : 1.0 - ss_res / ss_tot;
  }
  return table;
}

std::string CostTable::to_csv() const {
  std::ostringstream out;
  out << "seed,blocks,warmup_blocks,chain_length,mining_attempts,validation_hashes\n";
  for (const CostRow& row : rows) {
    out << row.seed << "," << row.blocks << "," << row.warmup_blocks << "," << row.chain_length
        << "," << row.mining_attempts << "," << row.validation_hashes << "\n";
  }
  return out.str();
}

ConvergenceResult run_to_convergence(Simulation& sim, size_t max_rounds) {
  ConvergenceResult result;
  if (sim.chains_equal()) {
    result.converged = true;
    return result;
  }
  for (size_t round = 1; round <= max_rounds; ++round) {
    const size_t adoptions = sim.resolve_round();
    result.rounds = round;
    if (sim.chains_equal()) {
      result.converged = true;
      return result;
    }
    if (adoptions == 0) {
      // Rounds are deterministic, so an unproductive round can never be
      // followed by a productive one.
      result.stalemate = true;
      return result;
    }
  }
  return result;
}

}  // namespace redes::netsim
