#include "otree/tcp.hpp"

#include <array>
#include <condition_variable>
#include <deque>
#include <mutex>
#include <thread>

#include <boost/asio.hpp>

#include "otree/errors.hpp"

namespace otree {

namespace asio = boost::asio;
using asio::ip::tcp;

namespace {

class TcpChannel : public Channel {
 public:
  TcpChannel(int self, std::size_t endpoints, std::chrono::milliseconds recv_timeout)
      : self_(self), recv_timeout_(recv_timeout), peers_(endpoints) {}

  ~TcpChannel() override {
    for (auto& p : peers_) {
      if (!p.socket) continue;
      boost::system::error_code ec;
      p.socket->shutdown(tcp::socket::shutdown_both, ec);
      p.socket->close(ec);
    }
    for (auto& p : peers_) {
      if (p.reader.joinable()) p.reader.join();
    }
  }

  asio::io_context& io() { return io_; }

  void attach(int peer, std::unique_ptr<tcp::socket> socket) {
    Peer& p = peers_[static_cast<std::size_t>(peer)];
    p.socket = std::move(socket);
    p.reader = std::thread([this, peer] { read_loop(peer); });
  }

  int self() const override { return self_; }

  void send(int to, Bytes payload) override {
    Peer& p = peer(to);
    if (payload.size() > 0xffffffffu) throw TransportError("frame too large");
    const auto n = static_cast<std::uint32_t>(payload.size());
    const std::array<std::uint8_t, 4> len{static_cast<std::uint8_t>(n >> 24), static_cast<std::uint8_t>(n >> 16),
                                          static_cast<std::uint8_t>(n >> 8), static_cast<std::uint8_t>(n)};
    std::lock_guard lock(p.write_mu);
    boost::system::error_code ec;
    asio::write(*p.socket, std::array<asio::const_buffer, 2>{asio::buffer(len), asio::buffer(payload)}, ec);
    if (ec) throw TransportError("send to " + endpoint_label(to) + " failed: " + ec.message());
  }

  Bytes recv(int from) override {
    Peer& p = peer(from);
    std::unique_lock lock(mu_);
    if (!cv_.wait_for(lock, recv_timeout_, [&] { return !p.queue.empty() || p.closed; })) {
      throw TransportError("timed out waiting for " + endpoint_label(from));
    }
    if (p.queue.empty()) throw TransportError(endpoint_label(from) + " disconnected: " + p.reason);
    Bytes out = std::move(p.queue.front());
    p.queue.pop_front();
    return out;
  }

 private:
  struct Peer {
    std::unique_ptr<tcp::socket> socket;
    std::thread reader;
    std::mutex write_mu;
    std::deque<Bytes> queue;
    bool closed = false;
    std::string reason;
  };

  Peer& peer(int id) {
    if (id < 0 || static_cast<std::size_t>(id) >= peers_.size() || id == self_ ||
        !peers_[static_cast<std::size_t>(id)].socket) {
      throw UsageError("no connection to endpoint " + std::to_string(id));
    }
    return peers_[static_cast<std::size_t>(id)];
  }

  void read_loop(int id) {
    Peer& p = peers_[static_cast<std::size_t>(id)];
    boost::system::error_code ec;
    for (;;) {
      std::array<std::uint8_t, 4> len{};
      asio::read(*p.socket, asio::buffer(len), ec);
      if (ec) break;
      const std::size_t n = (std::size_t{len[0]} << 24) | (std::size_t{len[1]} << 16) | (std::size_t{len[2]} << 8) |
                            std::size_t{len[3]};
      Bytes body(n);
      asio::read(*p.socket, asio::buffer(body), ec);
      if (ec) break;
      {
        std::lock_guard lock(mu_);
        p.queue.push_back(std::move(body));
      }
      cv_.notify_all();
    }
    {
      std::lock_guard lock(mu_);
      p.closed = true;
      p.reason = ec.message();
    }
    cv_.notify_all();
  }

  asio::io_context io_;
  int self_;
  std::chrono::milliseconds recv_timeout_;
  std::vector<Peer> peers_;
  std::mutex mu_;
  std::condition_variable cv_;
};

}  // namespace

TcpAddress parse_address(const std::string& text) {
  const auto colon = text.rfind(':');
  if (colon == std::string::npos || colon + 1 == text.size()) throw ConfigError("expected host:port, got '" + text + "'");
  TcpAddress a;
  a.host = colon == 0 ? "127.0.0.1" : text.substr(0, colon);
  try {
    const unsigned long port = std::stoul(text.substr(colon + 1));
    if (port == 0 || port > 65535) throw std::out_of_range("port");
    a.port = static_cast<std::uint16_t>(port);
  } catch (const std::logic_error&) {
    throw ConfigError("bad port in '" + text + "'");
  }
  return a;
}

std::unique_ptr<Channel> connect_mesh(int self, const std::vector<TcpAddress>& addresses, const TcpOptions& opt) {
  if (addresses.size() < 3 || addresses.size() > 4) throw ConfigError("a mesh needs three or four endpoints");
  if (self < 0 || static_cast<std::size_t>(self) >= addresses.size()) throw ConfigError("endpoint index out of range");
  auto channel = std::make_unique<TcpChannel>(self, addresses.size(), opt.recv_timeout);
  asio::io_context& io = channel->io();
  const int n = static_cast<int>(addresses.size());

  tcp::acceptor acceptor(io);
  if (self + 1 < n) {
    const auto& me = addresses[static_cast<std::size_t>(self)];
    tcp::endpoint ep(asio::ip::make_address(me.host == "localhost" ? "127.0.0.1" : me.host), me.port);
    acceptor.open(ep.protocol());
    acceptor.set_option(tcp::acceptor::reuse_address(true));
    boost::system::error_code ec;
    acceptor.bind(ep, ec);
    if (ec) throw TransportError("cannot listen on port " + std::to_string(me.port) + ": " + ec.message());
    acceptor.listen();
  }

  const auto deadline = std::chrono::steady_clock::now() + opt.connect_timeout;
  for (int peer = 0; peer < self; ++peer) {
    const auto& addr = addresses[static_cast<std::size_t>(peer)];
    tcp::resolver resolver(io);
    for (;;) {
      auto socket = std::make_unique<tcp::socket>(io);
      boost::system::error_code ec;
      asio::connect(*socket, resolver.resolve(addr.host, std::to_string(addr.port), ec), ec);
      if (!ec) {
        const std::uint8_t hello = static_cast<std::uint8_t>(self);
        asio::write(*socket, asio::buffer(&hello, 1), ec);
        if (ec) throw TransportError("handshake with " + endpoint_label(peer) + " failed");
        socket->set_option(tcp::no_delay(true));
        channel->attach(peer, std::move(socket));
        break;
      }
      if (std::chrono::steady_clock::now() > deadline) {
        throw TransportError("cannot reach " + endpoint_label(peer) + " at " + addr.host + ":" +
                             std::to_string(addr.port));
      }
      std::this_thread::sleep_for(std::chrono::milliseconds(100));
    }
  }
  if (acceptor.is_open()) acceptor.non_blocking(true);
  std::vector<bool> seen(addresses.size(), false);
  for (int pending = n - 1 - self; pending > 0;) {
    auto socket = std::make_unique<tcp::socket>(io);
    boost::system::error_code ec;
    acceptor.accept(*socket, ec);
    if (ec == asio::error::would_block || ec == asio::error::try_again) {
      if (std::chrono::steady_clock::now() > deadline) throw TransportError("timed out waiting for peers to connect");
      std::this_thread::sleep_for(std::chrono::milliseconds(50));
      continue;
    }
    if (ec) throw TransportError("accept failed: " + ec.message());
    socket->non_blocking(false);
    std::uint8_t hello = 0;
    asio::read(*socket, asio::buffer(&hello, 1), ec);
    if (ec || hello <= self || hello >= n || seen[hello]) throw TransportError("unexpected endpoint id in handshake");
    seen[hello] = true;
    socket->set_option(tcp::no_delay(true));
    channel->attach(hello, std::move(socket));
    --pending;
  }
  return channel;
}

}  // namespace otree
