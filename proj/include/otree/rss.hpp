#pragma once

#include <span>
#include <vector>

#include "otree/party.hpp"
#include "otree/shares.hpp"

namespace otree {

// Replicated secret sharing over Z_{2^l} (arithmetic) and bit words (boolean).
// Party i holds components (i, i+1); public constants enter through component 0,
// which P1 holds first and P3 holds second.

// `owner` supplies `values`; the others pass an empty span and the same n. One round.
AShareVec share_a(Party& p, const Ring& ring, int owner, std::span<const u64> values, std::size_t n);
BShareVec share_b(Party& p, unsigned width, int owner, std::span<const u64> values, std::size_t n);

// Every party learns the secrets. One round, l bits sent per party per element.
std::vector<u64> reconstruct_a(Party& p, const AShareVec& s);
std::vector<u64> reconstruct_b(Party& p, const BShareVec& s);

// Shares of public values with zero randomness.
AShareVec public_a(const Party& p, const Ring& ring, std::span<const u64> values);
AShareVec public_a(const Party& p, const Ring& ring, std::size_t n, u64 value);
BShareVec public_b(const Party& p, unsigned width, std::size_t n, u64 value);

// alpha * x + beta with no communication.
AShareVec linear(const Party& p, u64 alpha, const AShareVec& x, u64 beta);
AShareVec add(const AShareVec& x, const AShareVec& y);
AShareVec sub(const AShareVec& x, const AShareVec& y);
AShareVec add_public(const Party& p, const AShareVec& x, std::span<const u64> c);
AShareVec scale(const AShareVec& x, u64 c);
AShareVec scale(const AShareVec& x, std::span<const u64> c);
// Reduces shares into a narrower ring; exact because 2^l' divides 2^l.
AShareVec downcast(const AShareVec& x, const Ring& narrower);

// Element-wise product, one round. Resharing is blinded with pairwise zero shares.
AShareVec mul(Party& p, const AShareVec& x, const AShareVec& y);
// Several independent products, possibly over different rings, in one round.
std::vector<AShareVec> mul_batch(Party& p, const std::vector<std::pair<const AShareVec*, const AShareVec*>>& pairs);

// out[r*K + k] = sum_i A[i*R + r] * B[i*K + k]; one round with R*K reshared values,
// the cross terms are accumulated locally before resharing.
AShareVec matmul_tn(Party& p, const AShareVec& A, const AShareVec& B, std::size_t rows,
                    std::size_t a_cols, std::size_t b_cols);

BShareVec xor_b(const BShareVec& x, const BShareVec& y);
BShareVec xor_public(const Party& p, const BShareVec& x, u64 c);
BShareVec xor_public(const Party& p, const BShareVec& x, std::span<const u64> c);
BShareVec not_b(const Party& p, const BShareVec& x);
BShareVec and_public(const BShareVec& x, u64 c);
BShareVec and_b(Party& p, const BShareVec& x, const BShareVec& y);
BShareVec or_b(Party& p, const BShareVec& x, const BShareVec& y);

// Debug aid: P_i sends x_{i+1} to P_{i+1}, which compares it with its own x_{i+1}.
void check_replication(Party& p, const AShareVec& s);
void check_replication(Party& p, const BShareVec& s);

}  // namespace otree
