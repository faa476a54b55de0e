#pragma once

#include <chrono>
#include <condition_variable>
#include <cstdint>
#include <deque>
#include <map>
#include <memory>
#include <mutex>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

namespace otree {

using Bytes = std::vector<std::uint8_t>;

inline constexpr int kNumParties = 3;
inline constexpr int kEnclaveEndpoint = 3;

// Zero-based party index; P_{i+1} and P_{i-1} wrap mod 3. label() is 1-based.
class PartyId {
 public:
  constexpr explicit PartyId(int index) : index_(index) {}
  constexpr int index() const { return index_; }
  constexpr PartyId next() const { return PartyId((index_ + 1) % kNumParties); }
  constexpr PartyId prev() const { return PartyId((index_ + 2) % kNumParties); }
  std::string label() const;
  friend constexpr bool operator==(PartyId a, PartyId b) { return a.index_ == b.index_; }

 private:
  int index_;
};

std::string endpoint_label(int endpoint);

// Point-to-point byte channel between up to four endpoints (three parties and
// the enclave). Messages between a fixed pair are delivered in order.
class Channel {
 public:
  virtual ~Channel() = default;
  virtual int self() const = 0;
  virtual void send(int to, Bytes payload) = 0;
  virtual Bytes recv(int from) = 0;
};

// Shared mailboxes for endpoints running as threads of one process.
class InProcHub : public std::enable_shared_from_this<InProcHub> {
 public:
  explicit InProcHub(int endpoints = kNumParties + 1,
                     std::chrono::milliseconds timeout = std::chrono::minutes(30));

  std::unique_ptr<Channel> endpoint(int id);

  // Wakes all blocked receivers with a TransportError; used when one engine fails.
  void abort(const std::string& reason);

 private:
  friend class InProcChannel;
  struct Mailbox {
    std::deque<Bytes> queue;
  };
  void push(int from, int to, Bytes payload);
  Bytes pop(int from, int to);

  int endpoints_;
  std::chrono::milliseconds timeout_;
  std::mutex mu_;
  std::condition_variable cv_;
  std::vector<Mailbox> boxes_;
  bool aborted_ = false;
  std::string abort_reason_;
};

struct TranscriptRecord {
  std::uint64_t round;
  int sender;
  int receiver;
  std::uint64_t bytes;
  std::string tag;

  friend bool operator==(const TranscriptRecord&, const TranscriptRecord&) = default;
};

// Payload-free record of every message an endpoint sent.
class Transcript {
 public:
  void append(TranscriptRecord r) { records_.push_back(std::move(r)); }
  const std::vector<TranscriptRecord>& records() const { return records_; }
  std::size_t size() const { return records_.size(); }

 private:
  std::vector<TranscriptRecord> records_;
};

struct ShapeEntry {
  std::uint64_t round;
  int sender;
  int receiver;
  std::uint64_t bytes;
  friend bool operator==(const ShapeEntry&, const ShapeEntry&) = default;
  friend auto operator<=>(const ShapeEntry&, const ShapeEntry&) = default;
};

// Merged, sorted (round, sender, receiver, bytes) sequence of several transcripts.
std::vector<ShapeEntry> transcript_shape(const std::vector<const Transcript*>& parts);

struct PhaseCost {
  std::uint64_t rounds = 0;
  std::uint64_t bytes = 0;
};

struct Metrics {
  std::uint64_t rounds = 0;
  std::map<std::string, std::uint64_t> bytes_per_pair;
  std::map<std::string, PhaseCost> per_phase;

  std::uint64_t total_bytes() const;
  // Sum over phases whose '/'-separated tag contains `needle` as a run of whole components.
  PhaseCost phase_total(std::string_view needle) const;
  nlohmann::json to_json() const;
};

Metrics summarize(const std::vector<const Transcript*>& parts);

// One endpoint's view of the network: synchronous rounds plus accounting.
class Comm {
 public:
  explicit Comm(std::unique_ptr<Channel> channel);

  int self() const { return channel_->self(); }

  // Sends every outgoing payload, then blocks for one payload from each peer in
  // `from`. A call with no traffic leaves the round counter unchanged.
  std::map<int, Bytes> exchange_round(std::vector<std::pair<int, Bytes>> outgoing,
                                      const std::vector<int>& from);

  std::uint64_t rounds() const { return rounds_; }
  // Aligns an endpoint that does not take part in every round (the enclave)
  // with the parties' round numbering.
  void set_round(std::uint64_t round) { rounds_ = round; }
  const Transcript& transcript() const { return transcript_; }

  void push_phase(std::string name);
  void pop_phase();
  const std::string& phase() const { return phase_; }

  Channel& channel() { return *channel_; }

 private:
  std::unique_ptr<Channel> channel_;
  Transcript transcript_;
  std::uint64_t rounds_ = 0;
  std::vector<std::string> phase_stack_;
  std::string phase_;
};

class PhaseScope {
 public:
  PhaseScope(Comm& comm, std::string name) : comm_(comm) { comm_.push_phase(std::move(name)); }
  ~PhaseScope() { comm_.pop_phase(); }
  PhaseScope(const PhaseScope&) = delete;
  PhaseScope& operator=(const PhaseScope&) = delete;

 private:
  Comm& comm_;
};

}  // namespace otree
