#pragma once

#include <array>
#include <random>
#include <vector>

#include <doctest.h>

#include "otree/runner.hpp"
#include "otree/rss.hpp"
#include "otree/shares.hpp"

namespace otree::test {

// Plaintext view of a sharing: x = x_0 + x_1 + x_2, where party i holds x_i first.
inline std::vector<u64> open(const std::array<AShareVec, 3>& s) {
  std::vector<u64> out(s[0].size());
  for (std::size_t k = 0; k < out.size(); ++k) {
    out[k] = s[0].ring.add(s[0].ring.add(s[0].a[k], s[1].a[k]), s[2].a[k]);
  }
  return out;
}

inline std::vector<u64> open(const std::array<BShareVec, 3>& s) {
  std::vector<u64> out(s[0].size());
  for (std::size_t k = 0; k < out.size(); ++k) out[k] = (s[0].a[k] ^ s[1].a[k] ^ s[2].a[k]) & s[0].mask();
  return out;
}

template <typename S>
bool replicated(const std::array<S, 3>& s) {
  for (int i = 0; i < 3; ++i) {
    if (s[i].b != s[(i + 1) % 3].a) return false;
  }
  return true;
}

inline std::vector<u64> random_words(std::mt19937_64& rng, std::size_t n, u64 mask) {
  std::vector<u64> out(n);
  for (auto& v : out) v = rng() & mask;
  return out;
}

inline SessionConfig seeded(std::uint64_t seed) {
  SessionConfig cfg;
  cfg.seed = seed;
  return cfg;
}

}  // namespace otree::test

namespace otree::test {

// Party 0 deals `values`; the others learn only their shares.
inline AShareVec deal(Party& p, const Ring& ring, const std::vector<u64>& values) {
  return share_a(p, ring, 0, p.id().index() == 0 ? std::span<const u64>(values) : std::span<const u64>(),
                 values.size());
}

inline BShareVec deal_b(Party& p, unsigned width, const std::vector<u64>& values) {
  return share_b(p, width, 0, p.id().index() == 0 ? std::span<const u64>(values) : std::span<const u64>(),
                 values.size());
}

}  // namespace otree::test
