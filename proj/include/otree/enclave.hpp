#pragma once

#include <array>
#include <atomic>
#include <cstdint>
#include <optional>
#include <vector>

#include "otree/prg.hpp"
#include "otree/ring.hpp"
#include "otree/shares.hpp"
#include "otree/transport.hpp"

namespace otree {

// Plaintext inputs of the heuristic step for one tree level, as the enclave
// sees them after reconstruction. Layouts follow the training state:
// counters are nodes blocks of 3 x 2m, gamma is nodes blocks of m.
struct HeuristicInput {
  unsigned level = 0;
  std::size_t nodes = 0;
  std::size_t features = 0;
  bool last = false;
  std::uint64_t filler_seed = 0;
  std::vector<u64> counters;
  std::vector<u64> gamma;
  std::vector<u64> types;
  std::vector<u64> fallback;
};

struct HeuristicOutput {
  std::vector<u64> decision;     // feature index, filler, or label on the last level
  std::vector<u64> gamma;        // split feature cleared
  std::vector<u64> types;        // 0 when the node splits, unchanged otherwise
  std::vector<u64> child_types;  // 1 below a split, 2 below a leaf or dummy
  std::vector<u64> labels;       // majority label, the fallback when empty
  std::vector<u64> split;        // 1 when the node splits
};

// Exact rational Gini argmin with full scans and mask-based selection only.
// The control flow depends on the sizes alone.
HeuristicOutput oblivious_heuristic(const HeuristicInput& in);

// Mask-based primitives used inside the enclave.
inline u64 oselect(bool cond, u64 a, u64 b) {
  const u64 m = u64{0} - static_cast<u64>(cond);
  return (a & m) | (b & ~m);
}
// n1 / d1 < n2 / d2 for positive denominators.
inline bool oless(unsigned __int128 n1, unsigned __int128 d1, unsigned __int128 n2, unsigned __int128 d2) {
  return n1 * d2 < n2 * d1;
}

using AeadKey = std::array<std::uint8_t, 32>;

// Per-party channel key derived from a setup secret shared with the enclave.
AeadKey enclave_key(std::uint64_t setup_secret, int party);
// AES-256-GCM; frame = nonce(12) || ciphertext || tag(16).
Bytes seal(const AeadKey& key, const std::array<std::uint8_t, 12>& nonce, const Bytes& plain);
// Throws IntegrityError when authentication fails.
Bytes unseal(const AeadKey& key, const Bytes& frame);

struct EnclaveOptions {
  std::uint64_t prg_seed = 0;
  // Seals every frame when set; the in-process test mode leaves it empty.
  std::optional<std::uint64_t> setup_secret;
};

// Request kinds; a session sends one heuristic request per level.
enum class EnclaveOp : std::uint8_t { kHeuristic = 1, kShutdown = 2 };

// Serves requests on the enclave endpoint until a shutdown request arrives,
// `done` is set, or the channel closes.
void serve_enclave(Comm& comm, const std::atomic<bool>& done, const EnclaveOptions& opt);

// Wire helpers shared by the party-side client and the service.
struct EnclaveHeader {
  EnclaveOp op = EnclaveOp::kHeuristic;
  bool last = false;
  std::uint32_t level = 0;
  std::uint64_t nodes = 0;
  std::uint64_t features = 0;
  std::uint64_t filler_seed = 0;
  std::uint64_t round = 0;
};
Bytes encode_header(const EnclaveHeader& h);
EnclaveHeader decode_header(const Bytes& in, std::size_t& pos);

// Party side: sends this party's shares of `inputs` (counters, gamma, types,
// fallback labels) and returns its shares of the HeuristicOutput fields in
// declaration order. Two rounds.
std::vector<AShareVec> enclave_call(Comm& comm, int party, const EnclaveHeader& h,
                                    const std::vector<const AShareVec*>& inputs, const std::optional<AeadKey>& key,
                                    Prg& nonce_prg);
// Every party sends one shutdown frame; the service exits after the third.
void enclave_shutdown(Comm& comm, const std::optional<AeadKey>& key, Prg& nonce_prg);

}  // namespace otree
