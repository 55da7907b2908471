#include <cstdlib>
#include <fstream>
#include <iostream>
#include <memory>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <httplib.h>
#include <json.hpp>

#include "redes/codec.hpp"
#include "redes/errors.hpp"
#include "redes/http_service.hpp"
#include "redes/netsim.hpp"
#include "redes/node_core.hpp"

namespace {

using nlohmann::json;

struct ClientOptions {
  std::string target = "http://127.0.0.1:5000";
  std::string token;
  bool json_output = false;
};

std::unique_ptr<httplib::Client> make_client(const ClientOptions& options) {
  auto client = std::make_unique<httplib::Client>(options.target);
  client->set_connection_timeout(5, 0);
  client->set_read_timeout(10, 0);
  if (!options.token.empty()) {
    client->set_default_headers({{"Authorization", "Bearer " + options.token}});
  }
  return client;
}

int fail(const std::string& message) {
  std::cerr << "error: " << message << "\n";
  return 1;
}

int fail_http(const httplib::Result& res, const std::string& what) {
  if (!res) return fail(what + ": no response (is the node running?)");
  return fail(what + ": HTTP " + std::to_string(res->status) + " " + res->body);
}

json parse_response(const std::string& body) {
  json j = json::parse(body, nullptr, false);
  if (j.is_discarded()) throw redes::Error(redes::Errc::parse_error, "malformed response");
  return j;
}

int run_node(const std::string& config_path) {
  redes::NodeConfig config;
  try {
    config = redes::load_config(config_path);
  } catch (const redes::Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }

  std::unique_ptr<redes::ActuatorBackend> backend;
  if (config.backend == "command") {
    backend = std::make_unique<redes::CommandTemplateBackend>(
        config.templates, [](const std::string& command) { return std::system(command.c_str()); });
  } else {
    backend = std::make_unique<redes::SimulatedFirewall>();
  }

  std::unique_ptr<redes::NodeCore> core;
  try {
    core = std::make_unique<redes::NodeCore>(config, std::move(backend));
  } catch (const redes::Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return e.code() == redes::Errc::io_error ? 2 : 1;
  }

  std::cout << "node_id " << core->node_id() << "\n"
            << "listening on " << config.host << ":" << config.port << "\n"
            << "chain length " << core->chain_length() << "\n";

  redes::HttpService service(*core);
  if (!service.run()) {
    return fail("cannot bind " + config.host + ":" + std::to_string(config.port));
  }
  return 0;
}

int peers_command(const ClientOptions& options, const std::string& verb,
                  const std::vector<std::string>& addresses) {
  json body{{"nodes", addresses}};
  auto client = make_client(options);
  const std::string path = verb == "add" ? "/nodes/register" : "/nodes/remove";
  auto res = client->Post(path, body.dump(), "application/json");
  if (!res || (res->status != 200 && res->status != 201)) return fail_http(res, "peers " + verb);
  if (options.json_output) {
    std::cout << res->body << "\n";
    return 0;
  }
  const json reply = parse_response(res->body);
  std::cout << "peers total: " << reply.at("total").get<size_t>() << "\n";
  if (reply.contains("not_found") && !reply["not_found"].empty()) {
    std::cout << "not found:";
    for (const auto& a : reply["not_found"]) std::cout << " " << a.get<std::string>();
    std::cout << "\n";
  }
  return 0;
}

int tx_submit(const ClientOptions& options, const std::string& sender,
              const std::string& recipient, const std::string& mac, const std::string& action) {
  json body{{"sender", sender}, {"recipient", recipient}, {"mac", mac}, {"action", action}};
  auto client = make_client(options);
  auto res = client->Post("/transactions/new", body.dump(), "application/json");
  if (!res || res->status != 201) return fail_http(res, "tx submit");
  if (options.json_output) {
    std::cout << res->body << "\n";
    return 0;
  }
  const json reply = parse_response(res->body);
  std::cout << "queued for block " << reply.at("block_index_hint").get<std::uint64_t>() << "\n";
  return 0;
}

int block_forge(const ClientOptions& options) {
  auto client = make_client(options);
  auto res = client->Post("/blocks/new", "", "application/json");
  if (!res || res->status != 201) return fail_http(res, "block forge");
  if (options.json_output) {
    std::cout << res->body << "\n";
    return 0;
  }
  const json reply = parse_response(res->body);
  const redes::Block block = redes::parse_block_json(reply.at("block").dump());
  std::cout << "index " << block.index << "\n"
            << "hash " << redes::canonical_hash(block) << "\n"
            << "attempts " << reply.at("attempts").get<std::uint64_t>() << "\n";
  return 0;
}

int chain_show(const ClientOptions& options, bool verify) {
  auto client = make_client(options);
  auto res = client->Get("/chain");
  if (!res || res->status != 200) return fail_http(res, "chain show");

  redes::Chain chain;
  try {
    chain = redes::parse_chain_response(res->body);
  } catch (const redes::Error& e) {
    return fail(std::string("chain response unusable: ") + e.what());
  }

  if (options.json_output) {
    std::cout << res->body << "\n";
  } else {
    std::cout << "length " << chain.length() << "\n";
    for (const auto& block : chain.blocks) {
      std::cout << "  #" << block.index << " " << redes::canonical_hash(block).substr(0, 16)
                << "… txs " << block.transactions.size() << "\n";
    }
  }

  if (verify) {
    auto status = client->Get("/status");
    if (!status || status->status != 200) return fail_http(status, "chain verify");
    const int difficulty = parse_response(status->body).at("difficulty").get<int>();
    const bool ok = redes::valid_chain(chain, redes::Difficulty(difficulty));
    std::cout << (ok ? "PASS" : "FAIL") << "\n";
    return ok ? 0 : 1;
  }
  return 0;
}

int resolve(const ClientOptions& options) {
  auto client = make_client(options);
  auto res = client->Get("/nodes/resolve");
  if (!res || res->status != 200) return fail_http(res, "resolve");
  if (options.json_output) {
    std::cout << res->body << "\n";
    return 0;
  }
  const json reply = parse_response(res->body);
  const json& report = reply.at("report");
  std::cout << "replaced " << (reply.at("replaced").get<bool>() ? "yes" : "no") << "\n"
            << "length " << reply.at("length").get<size_t>() << "\n"
            << "peers queried " << report.at("peers_queried").get<size_t>() << ", unreachable "
            << report.at("peers_unreachable").get<size_t>() << ", invalid "
            << report.at("peers_invalid_chain").get<size_t>() << "\n";
  if (!report.at("adopted_from").is_null()) {
    std::cout << "adopted from " << report["adopted_from"].get<std::string>() << "\n";
  }
  return 0;
}

bool write_file(const std::string& path, const std::string& content) {
  std::ofstream out(path, std::ios::trunc);
  return static_cast<bool>(out << content);
}

int sim_run(const std::string& scenario_path, const std::string& csv_path, bool json_output) {
  redes::netsim::Scenario scenario;
  try {
    scenario = redes::netsim::Scenario::from_file(scenario_path);
  } catch (const redes::Error& e) {
    return fail(e.what());
  }
  const redes::netsim::RunResult result = redes::netsim::run_scenario(scenario);
  const redes::netsim::Metrics& m = result.metrics;

  if (!csv_path.empty() && !write_file(csv_path, m.to_csv())) {
    return fail("cannot write " + csv_path);
  }

  if (json_output) {
    json lengths = json::array();
    for (size_t l : m.chain_lengths) lengths.push_back(l);
    std::cout << json{{"chains_equal", m.chains_equal},
                      {"acl_equality", m.acl_equality},
                      {"chain_lengths", lengths},
                      {"mining_attempts_total", m.mining_attempts_total},
                      {"resolution_rounds_to_convergence", m.resolution_rounds_to_convergence}}
                     .dump()
              << "\n";
    return 0;
  }

  std::cout << "nodes: " << m.chain_lengths.size() << "\n" << "chain lengths:";
  for (size_t l : m.chain_lengths) std::cout << " " << l;
  std::cout << "\n"
            << "chains_equal: " << (m.chains_equal ? "true" : "false") << "\n"
            << "acl_equality: " << (m.acl_equality ? "true" : "false") << "\n"
            << "mining attempts total: " << m.mining_attempts_total << "\n"
            << "resolution rounds to convergence: " << m.resolution_rounds_to_convergence
            << "\n";
  return 0;
}

int sim_cost(const std::vector<size_t>& blocks, size_t seeds, int difficulty, size_t nodes,
             const std::string& csv_path, bool json_output) {
  std::vector<std::uint64_t> seed_list;
  for (size_t s = 0; s < seeds; ++s) seed_list.push_back(s + 1);
  redes::netsim::CostTable table;
  try {
    table = redes::netsim::measure_linear_cost(blocks, redes::Difficulty(difficulty), nodes,
                                               seed_list);
  } catch (const redes::Error& e) {
    return fail(e.what());
  }

  if (!csv_path.empty() && !write_file(csv_path, table.to_csv())) {
    return fail("cannot write " + csv_path);
  }

  if (json_output) {
    std::cout << json{{"r_squared", table.r_squared},
                      {"mean_attempts_per_block", table.mean_attempts_per_block},
                      {"rows", table.rows.size()}}
                     .dump()
              << "\n";
  } else {
    std::cout << "rows: " << table.rows.size() << "\n"
              << "mean attempts per block: " << table.mean_attempts_per_block << "\n"
              << "linear fit r_squared: " << table.r_squared << "\n";
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"redes - permissioned blockchain node for wireless access federation"};
  app.require_subcommand(1);

  ClientOptions client_options;
  if (const char* env_target = std::getenv("REDES_TARGET")) client_options.target = env_target;
  if (const char* env_token = std::getenv("REDES_TOKEN")) client_options.token = env_token;
  app.add_option("--target,-t", client_options.target, "node base URL");
  app.add_option("--token", client_options.token, "bearer token for guarded endpoints");
  app.add_flag("--json", client_options.json_output, "machine-readable output");

  // node run
  auto* node_cmd = app.add_subcommand("node", "run a node");
  node_cmd->require_subcommand(1);
  auto* node_run = node_cmd->add_subcommand("run", "start the HTTP service");
  std::string config_path;
  node_run->add_option("--config", config_path, "JSON config file")->required();

  // peers add/remove
  auto* peers_cmd = app.add_subcommand("peers", "manage the peer registry");
  peers_cmd->require_subcommand(1);
  std::vector<std::string> peer_addresses;
  auto* peers_add = peers_cmd->add_subcommand("add", "register peer addresses");
  peers_add->add_option("addresses", peer_addresses, "peer URLs")->required();
  auto* peers_remove = peers_cmd->add_subcommand("remove", "remove peer addresses");
  peers_remove->add_option("addresses", peer_addresses, "peer URLs")->required();

  // tx submit
  auto* tx_cmd = app.add_subcommand("tx", "transactions");
  tx_cmd->require_subcommand(1);
  auto* tx_submit_cmd = tx_cmd->add_subcommand("submit", "queue a transaction");
  std::string sender, recipient, mac, action;
  tx_submit_cmd->add_option("--sender", sender)->required();
  tx_submit_cmd->add_option("--recipient", recipient)->required();
  tx_submit_cmd->add_option("--mac", mac)->required();
  tx_submit_cmd->add_option("--action", action)->required();

  // block forge
  auto* block_cmd = app.add_subcommand("block", "blocks");
  block_cmd->require_subcommand(1);
  auto* block_forge_cmd = block_cmd->add_subcommand("forge", "mine the pending pool");

  // chain show
  auto* chain_cmd = app.add_subcommand("chain", "chain inspection");
  chain_cmd->require_subcommand(1);
  auto* chain_show_cmd = chain_cmd->add_subcommand("show", "print the chain");
  bool verify = false;
  chain_show_cmd->add_flag("--verify", verify, "re-validate the chain locally");

  // resolve
  auto* resolve_cmd = app.add_subcommand("resolve", "trigger consensus");

  // sim
  auto* sim_cmd = app.add_subcommand("sim", "deterministic simulations");
  sim_cmd->require_subcommand(1);
  auto* sim_run_cmd = sim_cmd->add_subcommand("run", "run a scenario file");
  std::string scenario_path, csv_path;
  sim_run_cmd->add_option("scenario", scenario_path, "scenario JSON file")->required();
  sim_run_cmd->add_option("--csv", csv_path, "write per-node metrics CSV");
  auto* sim_cost_cmd = sim_cmd->add_subcommand("cost", "measure hashing cost vs block count");
  std::vector<size_t> cost_blocks{1, 2, 4, 8, 16};
  size_t cost_seeds = 10;
  int cost_difficulty = 2;
  size_t cost_nodes = 3;
  sim_cost_cmd->add_option("--blocks", cost_blocks, "block counts to measure");
  sim_cost_cmd->add_option("--seeds", cost_seeds, "number of seeds");
  sim_cost_cmd->add_option("--difficulty", cost_difficulty, "proof difficulty");
  sim_cost_cmd->add_option("--nodes", cost_nodes, "network size");
  sim_cost_cmd->add_option("--csv", csv_path, "write cost table CSV");

  CLI11_PARSE(app, argc, argv);

  try {
    if (node_run->parsed()) return run_node(config_path);
    if (peers_add->parsed()) return peers_command(client_options, "add", peer_addresses);
    if (peers_remove->parsed()) return peers_command(client_options, "remove", peer_addresses);
    if (tx_submit_cmd->parsed()) {
      return tx_submit(client_options, sender, recipient, mac, action);
    }
    if (block_forge_cmd->parsed()) return block_forge(client_options);
    if (chain_show_cmd->parsed()) return chain_show(client_options, verify);
    if (resolve_cmd->parsed()) return resolve(client_options);
    if (sim_run_cmd->parsed()) {
      return sim_run(scenario_path, csv_path, client_options.json_output);
    }
    if (sim_cost_cmd->parsed()) {
      return sim_cost(cost_blocks, cost_seeds, cost_difficulty, cost_nodes, csv_path,
                      client_options.json_output);
    }
  } catch (const redes::Error& e) {
    return fail(e.what());
  } catch (const std::exception& e) {
    return fail(e.what());
  }

  std::cerr << app.help();
  return 1;
}
