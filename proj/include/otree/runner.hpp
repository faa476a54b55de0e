#pragma once

#include <array>
#include <atomic>
#include <cstdint>
#include <functional>
#include <memory>
#include <type_traits>

#include "otree/material.hpp"
#include "otree/party.hpp"
#include "otree/transport.hpp"

namespace otree {

// What an in-process session leaves behind besides the per-party results.
struct SessionTrace {
  std::array<Transcript, 3> transcripts;
  std::array<MaterialCounts, 3> consumed;
  Transcript enclave_transcript;

  Metrics metrics() const;
  // Shape of the three parties' transcripts plus the enclave's.
  std::vector<ShapeEntry> shape() const;
};

struct SessionConfig {
  std::uint64_t seed = 1;
  bool debug_checks = false;
  // Optional per-party material; a lazy dealer seeded from `seed` is used otherwise.
  std::array<MaterialSource*, 3> material{nullptr, nullptr, nullptr};
  // Runs on the enclave endpoint until `done` becomes true or the hub closes.
  std::function<void(Comm&, const std::atomic<bool>& done)> enclave;
};

// Runs `fn` once per party on its own thread over an in-process hub. Pairwise
// seeds are derived from the session seed, so no setup round is spent. The
// first failure aborts the hub and is rethrown after all threads join.
void run_session(const SessionConfig& cfg, const std::function<void(Party&)>& fn, SessionTrace& trace);

template <typename R>
struct SessionResult {
  std::array<R, 3> out;
  SessionTrace trace;
};

template <typename F>
auto run_parties(const SessionConfig& cfg, F&& fn) {
  using R = std::invoke_result_t<F&, Party&>;
  static_assert(!std::is_void_v<R>, "use run_session for functions without results");
  SessionResult<R> res;
  run_session(cfg, [&](Party& p) { res.out[static_cast<std::size_t>(p.id().index())] = fn(p); }, res.trace);
  return res;
}

}  // namespace otree
