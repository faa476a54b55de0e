#pragma once

#include <cstddef>

#include "otree/material.hpp"
#include "otree/party.hpp"
#include "otree/shares.hpp"

namespace otree {

struct OaaOptions {
  // Width of the ring the index comparisons run in; 0 keeps the index ring.
  // Indices are compared modulo 2^index_bits, so every valid index must fit.
  unsigned index_bits = 0;
  // Ceiling on eq lanes in flight; larger batches run in equal public-size chunks.
  std::size_t max_lanes = std::size_t{1} << 22;
};

// Z[j] = W[U[j]] by a linear scan: every j compares U[j] with every position,
// converts the hit flags to arithmetic shares and sums the selected entries.
// An index outside [0, |W|) yields 0.
AShareVec oaa(Party& p, const AShareVec& w, const AShareVec& u, const OaaOptions& opt = {});

// Z[j] = rows[j * width + U[j]]: each lookup scans its own row.
AShareVec oaa_rows(Party& p, const AShareVec& rows, std::size_t width, const AShareVec& u,
                   const OaaOptions& opt = {});

// Dealer material for `lookups` scans over `width` entries in Z_{2^l}.
MaterialCounts oaa_material(unsigned l, const OaaOptions& opt, unsigned index_l, std::size_t lookups,
                            std::size_t width);

}  // namespace otree
