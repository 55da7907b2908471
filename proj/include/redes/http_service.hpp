#pragma once

#include <memory>
#include <string>
#include <thread>

#include "redes/consensus.hpp"
#include "redes/node_core.hpp"

namespace redes {

/// A ChainFetcher that issues GET /chain over HTTP with the given per-peer
/// timeout. Unreachable peers and malformed responses both yield nullopt.
ChainFetcher http_chain_fetcher(int timeout_seconds = 2);

/// Exposes a NodeCore over the HTTP JSON wire contract.
class HttpService {
 public:
  explicit HttpService(NodeCore& core);
  ~HttpService();

  HttpService(const HttpService&) = delete;
  HttpService& operator=(const HttpService&) = delete;

  /// Blocking listen on the configured host/port. Returns false if the
  /// socket could not be bound.
  bool run();

  /// Binds an ephemeral port on 127.0.0.1 and serves from a background
  /// thread. Returns the bound port. Test harness entry point.
  int start_background();
  void stop();

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

}  // namespace redes
