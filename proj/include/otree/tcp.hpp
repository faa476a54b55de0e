#pragma once

#include <chrono>
#include <cstdint>
#include <memory>
#include <string>
#include <vector>

#include "otree/transport.hpp"

namespace otree {

struct TcpAddress {
  std::string host = "127.0.0.1";
  std::uint16_t port = 0;
};

// Parses "host:port".
TcpAddress parse_address(const std::string& text);

struct TcpOptions {
  // How long to keep retrying connections to lower-numbered endpoints.
  std::chrono::milliseconds connect_timeout = std::chrono::seconds(60);
  std::chrono::milliseconds recv_timeout = std::chrono::minutes(30);
};

// Full mesh between `addresses` (three parties, optionally the enclave as the
// fourth). Endpoint `self` listens on its own address, accepts the higher
// endpoints and connects to the lower ones. Frames are a 4-byte big-endian
// length followed by the payload.
std::unique_ptr<Channel> connect_mesh(int self, const std::vector<TcpAddress>& addresses,
                                      const TcpOptions& opt = {});

}  // namespace otree
