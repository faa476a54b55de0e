#include "otree/party.hpp"

#include <cstring>

#include "otree/errors.hpp"

namespace otree {

Party::Party(PartyId id, std::unique_ptr<Channel> channel, MaterialSource& material,
             std::uint64_t local_seed)
    : id_(id),
      comm_(std::move(channel)),
      material_(material),
      local_(derive_seed(local_seed, "party-local", static_cast<std::uint64_t>(id.index()))) {}

void Party::setup_seeds() {
  PhaseScope scope(comm_, "setup");
  const Seed mine = local_.next_seed();
  auto in = comm_.exchange_round({{id_.next().index(), Bytes(mine.begin(), mine.end())}},
                                 {id_.prev().index()});
  const Bytes& theirs = in.at(id_.prev().index());
  if (theirs.size() != 16) throw TransportError("malformed seed message");
  Seed prev{};
  std::memcpy(prev.data(), theirs.data(), 16);
  install_seeds(mine, prev);
}

void Party::install_seeds(const Seed& with_next, const Seed& with_prev) {
  next_.emplace(with_next);
  prev_.emplace(with_prev);
}

Prg& Party::stream_with(PartyId other) {
  if (!next_ || !prev_) throw UsageError("pairwise seeds not set up");
  if (other == id_.next()) return *next_;
  if (other == id_.prev()) return *prev_;
  throw UsageError("no pairwise stream between a party and itself");
}

std::vector<u64> Party::common_prg(PartyId i, PartyId j, std::size_t n) {
  if (i == j) throw UsageError("common_prg needs two distinct parties");
  if (!(i == id_) && !(j == id_)) throw UsageError("party does not hold this pairwise seed");
  Prg& prg = stream_with(i == id_ ? j : i);
  std::vector<u64> out(n);
  prg.fill(out);
  return out;
}

std::vector<u64> Party::zero_shares(const Ring& ring, std::size_t n) {
  std::vector<u64> from_next(n), from_prev(n);
  stream_with(id_.next()).fill(from_next);
  stream_with(id_.prev()).fill(from_prev);
  for (std::size_t k = 0; k < n; ++k) from_next[k] = ring.sub(from_next[k], from_prev[k]);
  return from_next;
}

std::vector<u64> Party::zero_xor_shares(u64 mask, std::size_t n) {
  std::vector<u64> from_next(n), from_prev(n);
  stream_with(id_.next()).fill(from_next);
  stream_with(id_.prev()).fill(from_prev);
  for (std::size_t k = 0; k < n; ++k) from_next[k] = (from_next[k] ^ from_prev[k]) & mask;
  return from_next;
}

}  // namespace otree
