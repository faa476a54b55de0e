#pragma once

#include <cstdint>
#include <memory>
#include <optional>
#include <span>
#include <vector>

#include "otree/material.hpp"
#include "otree/prg.hpp"
#include "otree/ring.hpp"
#include "otree/transport.hpp"

namespace otree {

// Everything one computing party owns during an execution: its identity, its
// network endpoint, the pairwise PRG streams and its slice of dealer material.
class Party {
 public:
  Party(PartyId id, std::unique_ptr<Channel> channel, MaterialSource& material,
        std::uint64_t local_seed);

  PartyId id() const { return id_; }
  Comm& comm() { return comm_; }
  MaterialSource& material() { return material_; }
  Prg& local_prg() { return local_; }

  // Samples seed_{i,i+1}, sends it to P_{i+1} and receives seed_{i-1,i}. One round.
  void setup_seeds();
  // Installs pairwise seeds directly (tests and deterministic file-mode runs).
  void install_seeds(const Seed& with_next, const Seed& with_prev);

  // n words from the stream shared by parties i and j; this party must be one of them.
  std::vector<u64> common_prg(PartyId i, PartyId j, std::size_t n);

  // alpha_i = F(seed_{i,i+1}) - F(seed_{i-1,i}); the three values sum to zero.
  std::vector<u64> zero_shares(const Ring& ring, std::size_t n);
  std::vector<u64> zero_xor_shares(u64 mask, std::size_t n);

  // Verifies replication consistency after each gadget when enabled (costs a round).
  bool debug_checks = false;
  // Whether an enclave endpoint is reachable in this session.
  bool enclave_attached = false;

 private:
  Prg& stream_with(PartyId other);

  PartyId id_;
  Comm comm_;
  MaterialSource& material_;
  Prg local_;
  std::optional<Prg> next_;
  std::optional<Prg> prev_;
};

}  // namespace otree
