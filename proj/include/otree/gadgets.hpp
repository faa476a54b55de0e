#pragma once

#include <span>
#include <vector>

#include "otree/material.hpp"
#include "otree/party.hpp"
#include "otree/rss.hpp"

namespace otree {

// [x = y] per element. Opens c = (x - y) + r with an edaBit r, then ANDs the
// l bits of ~(c ^ r) with a balanced tree: 1 + ceil(log2 l) rounds, 2l - 1 bits.
BShareVec eq(Party& p, const AShareVec& x, const AShareVec& y);
BShareVec eq_public(Party& p, const AShareVec& x, std::span<const u64> c);

// Most significant bit of x, i.e. [x < 0] in the two's-complement view.
BShareVec msb(Party& p, const AShareVec& x);

// Unsigned [x < y] over the whole ring.
BShareVec lt(Party& p, const AShareVec& x, const AShareVec& y);
BShareVec lt_public(Party& p, const AShareVec& x, std::span<const u64> c);

// Unsigned [x < y] when both operands are below 2^(l-1); one msb, no fix-up round.
BShareVec lt_bounded(Party& p, const AShareVec& x, const AShareVec& y);
BShareVec lt_bounded_public(Party& p, const AShareVec& x, std::span<const u64> c);

// [c < r] for public c and shared r, both w-bit; r may carry higher bits, which are ignored.
BShareVec public_less_than_shared(Party& p, std::span<const u64> c, const BShareVec& r, unsigned w);

// Single boolean bits to arithmetic shares in `ring`, one daBit each. One round.
AShareVec b2a(Party& p, const BShareVec& b, const Ring& ring);

// W1 where I = 0, W2 where I = 1.
AShareVec select_share(Party& p, const AShareVec& w1, const AShareVec& w2, const BShareVec& i);
// Same with the selector already in arithmetic form.
AShareVec select_arith(Party& p, const AShareVec& w1, const AShareVec& w2, const AShareVec& bit);

// floor(x / 2^k) + e with e in {0, 1}; requires |x| < 2^(l-2) in the signed view. One round.
AShareVec truncate(Party& p, const AShareVec& x, unsigned k);
AShareVec truncate(Party& p, const AShareVec& x, std::span<const unsigned> k);

// Fixed-point P / Q with tau fractional bits. Requires 1 <= Q and P, Q < 2^(l - tau - 2).
AShareVec division(Party& p, const AShareVec& num, const AShareVec& den, unsigned tau);

// Parameters derived from (l, tau); exposed for the plaintext model in tests.
struct DivisionParams {
  unsigned bound_bits;  // B: operands are below 2^B
  unsigned frac_bits;   // f: working precision of the reciprocal
  unsigned iterations;
};
DivisionParams division_params(unsigned ring_bits, unsigned tau);

// Index of the smallest masked-in score in each of `groups` consecutive runs.
// Masked-out scores are replaced by 2^(tau+1) and ties go to the lower index,
// so an all-masked group yields 0. Scores must stay below 2^(l-1).
AShareVec argmin_masked(Party& p, const AShareVec& scores, const AShareVec& mask, std::size_t groups,
                        unsigned tau, const Ring& index_ring);

// Dealer material the gadgets above consume for a batch of n elements in Z_{2^l}.
MaterialCounts eq_material(unsigned l, std::size_t n);
MaterialCounts msb_material(unsigned l, std::size_t n);
MaterialCounts b2a_material(unsigned l, std::size_t n);
MaterialCounts trunc_material(unsigned l, std::size_t n);
MaterialCounts division_material(unsigned l, unsigned tau, std::size_t n);
MaterialCounts argmin_material(unsigned score_l, unsigned index_l, std::size_t groups, std::size_t width);

}  // namespace otree
