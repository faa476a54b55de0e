#include "otree/transport.hpp"

#include <algorithm>
#include <set>

#include "otree/errors.hpp"

namespace otree {

std::string PartyId::label() const { return "P" + std::to_string(index_ + 1); }

std::string endpoint_label(int endpoint) {
  return endpoint == kEnclaveEndpoint ? "E" : std::to_string(endpoint + 1);
}

class InProcChannel : public Channel {
 public:
  InProcChannel(std::shared_ptr<InProcHub> hub, int id) : hub_(std::move(hub)), id_(id) {}
  int self() const override { return id_; }
  void send(int to, Bytes payload) override { hub_->push(id_, to, std::move(payload)); }
  Bytes recv(int from) override { return hub_->pop(from, id_); }

 private:
  std::shared_ptr<InProcHub> hub_;
  int id_;
};

InProcHub::InProcHub(int endpoints, std::chrono::milliseconds timeout)
    : endpoints_(endpoints), timeout_(timeout), boxes_(static_cast<std::size_t>(endpoints * endpoints)) {}

std::unique_ptr<Channel> InProcHub::endpoint(int id) {
  if (id < 0 || id >= endpoints_) throw UsageError("endpoint id out of range");
  return std::make_unique<InProcChannel>(shared_from_this(), id);
}

void InProcHub::abort(const std::string& reason) {
  {
    std::lock_guard lock(mu_);
    if (aborted_) return;
    aborted_ = true;
    abort_reason_ = reason;
  }
  cv_.notify_all();
}

void InProcHub::push(int from, int to, Bytes payload) {
  if (to < 0 || to >= endpoints_ || to == from) throw UsageError("invalid message destination");
  {
    std::lock_guard lock(mu_);
    boxes_[static_cast<std::size_t>(from * endpoints_ + to)].queue.push_back(std::move(payload));
  }
  cv_.notify_all();
}

Bytes InProcHub::pop(int from, int to) {
  if (from < 0 || from >= endpoints_ || from == to) throw UsageError("invalid message source");
  std::unique_lock lock(mu_);
  auto& box = boxes_[static_cast<std::size_t>(from * endpoints_ + to)];
  const bool ready = cv_.wait_for(lock, timeout_, [&] { return aborted_ || !box.queue.empty(); });
  if (!box.queue.empty()) {
    Bytes out = std::move(box.queue.front());
    box.queue.pop_front();
    return out;
  }
  if (aborted_) throw TransportError("session aborted: " + abort_reason_);
  if (!ready) {
    throw TransportError("timed out waiting for " + endpoint_label(from) + " at " + endpoint_label(to));
  }
  throw TransportError("spurious wakeup without payload");
}

std::vector<ShapeEntry> transcript_shape(const std::vector<const Transcript*>& parts) {
  std::vector<ShapeEntry> shape;
  for (const Transcript* t : parts) {
    for (const auto& r : t->records()) shape.push_back({r.round, r.sender, r.receiver, r.bytes});
  }
  std::sort(shape.begin(), shape.end());
  return shape;
}

std::uint64_t Metrics::total_bytes() const {
  std::uint64_t total = 0;
  for (const auto& [pair, bytes] : bytes_per_pair) total += bytes;
  return total;
}

PhaseCost Metrics::phase_total(std::string_view needle) const {
  const std::string key = "/" + std::string(needle) + "/";
  PhaseCost out;
  for (const auto& [tag, cost] : per_phase) {
    if (("/" + tag + "/").find(key) != std::string::npos) {
      out.rounds += cost.rounds;
      out.bytes += cost.bytes;
    }
  }
  return out;
}

nlohmann::json Metrics::to_json() const {
  nlohmann::json j;
  j["rounds"] = rounds;
  j["bytes_per_pair"] = nlohmann::json::object();
  for (const auto& [pair, bytes] : bytes_per_pair) j["bytes_per_pair"][pair] = bytes;
  j["per_phase"] = nlohmann::json::object();
  for (const auto& [tag, cost] : per_phase) {
    j["per_phase"][tag] = {{"rounds", cost.rounds}, {"bytes", cost.bytes}};
  }
  j["total_bytes"] = total_bytes();
  return j;
}

Metrics summarize(const std::vector<const Transcript*>& parts) {
  Metrics m;
  std::set<std::uint64_t> rounds;
  std::map<std::string, std::set<std::uint64_t>> phase_rounds;
  for (const Transcript* t : parts) {
    for (const auto& r : t->records()) {
      rounds.insert(r.round);
      m.bytes_per_pair[endpoint_label(r.sender) + "->" + endpoint_label(r.receiver)] += r.bytes;
      m.per_phase[r.tag].bytes += r.bytes;
      phase_rounds[r.tag].insert(r.round);
    }
  }
  m.rounds = rounds.size();
  for (auto& [tag, set] : phase_rounds) m.per_phase[tag].rounds = set.size();
  return m;
}

Comm::Comm(std::unique_ptr<Channel> channel) : channel_(std::move(channel)) {}

std::map<int, Bytes> Comm::exchange_round(std::vector<std::pair<int, Bytes>> outgoing,
                                          const std::vector<int>& from) {
  std::map<int, Bytes> incoming;
  if (outgoing.empty() && from.empty()) return incoming;
  const std::uint64_t round = rounds_++;
  for (auto& [to, payload] : outgoing) {
    transcript_.append({round, self(), to, payload.size(), phase_});
    channel_->send(to, std::move(payload));
  }
  for (int peer : from) incoming[peer] = channel_->recv(peer);
  return incoming;
}

void Comm::push_phase(std::string name) {
  phase_stack_.push_back(std::move(name));
  phase_.clear();
  for (std::size_t i = 0; i < phase_stack_.size(); ++i) {
    if (i) phase_ += '/';
    phase_ += phase_stack_[i];
  }
}

void Comm::pop_phase() {
  if (phase_stack_.empty()) return;
  phase_stack_.pop_back();
  phase_.clear();
  for (std::size_t i = 0; i < phase_stack_.size(); ++i) {
    if (i) phase_ += '/';
    phase_ += phase_stack_[i];
  }
}

}  // namespace otree
