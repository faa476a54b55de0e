#include "otree/rss.hpp"

#include "otree/errors.hpp"

namespace otree {

namespace {

void require_same(const AShareVec& x, const AShareVec& y) {
  if (!(x.ring == y.ring)) throw ConfigError("ring width mismatch between operands");
  if (x.size() != y.size()) throw UsageError("operand length mismatch");
}

void require_same(const BShareVec& x, const BShareVec& y) {
  if (x.width != y.width) throw ConfigError("boolean width mismatch between operands");
  if (x.size() != y.size()) throw UsageError("operand length mismatch");
}

// Sends `words` to P_{i-1} and returns what P_{i+1} sent.
std::vector<u64> send_prev_recv_next(Party& p, std::span<const u64> words, unsigned width) {
  const int prev = p.id().prev().index();
  const int next = p.id().next().index();
  auto in = p.comm().exchange_round({{prev, pack_words(words, width)}}, {next});
  return unpack_words(in.at(next), words.size(), width);
}

std::vector<u64> send_next_recv_prev(Party& p, std::span<const u64> words, unsigned width) {
  const int prev = p.id().prev().index();
  const int next = p.id().next().index();
  auto in = p.comm().exchange_round({{next, pack_words(words, width)}}, {prev});
  return unpack_words(in.at(prev), words.size(), width);
}

template <typename Split>
void deal_input(Party& p, int owner, std::size_t n, unsigned width, std::vector<u64>& a,
                std::vector<u64>& b, Split&& split) {
  const int me = p.id().index();
  if (me == owner) {
    std::array<std::vector<u64>, 3> comp;
    for (auto& c : comp) c.resize(n);
    split(comp);
    std::vector<std::pair<int, Bytes>> out;
    for (int q = 0; q < kNumParties; ++q) {
      if (q == owner) continue;
      std::vector<u64> pair(comp[q]);
      pair.insert(pair.end(), comp[(q + 1) % 3].begin(), comp[(q + 1) % 3].end());
      out.emplace_back(q, pack_words(pair, width));
    }
    p.comm().exchange_round(std::move(out), {});
    a = std::move(comp[me]);
    b = std::move(comp[(me + 1) % 3]);
  } else {
    auto in = p.comm().exchange_round({}, {owner});
    auto words = unpack_words(in.at(owner), 2 * n, width);
    a.assign(words.begin(), words.begin() + static_cast<std::ptrdiff_t>(n));
    b.assign(words.begin() + static_cast<std::ptrdiff_t>(n), words.end());
  }
}

}  // namespace

AShareVec share_a(Party& p, const Ring& ring, int owner, std::span<const u64> values, std::size_t n) {
  if (owner < 0 || owner >= kNumParties) throw UsageError("share owner out of range");
  if (p.id().index() == owner && values.size() != n) throw UsageError("owner must supply n values");
  AShareVec out(ring, 0);
  deal_input(p, owner, n, ring.bits(), out.a, out.b, [&](std::array<std::vector<u64>, 3>& c) {
    for (std::size_t k = 0; k < n; ++k) {
      c[0][k] = p.local_prg().next() & ring.mask();
      c[1][k] = p.local_prg().next() & ring.mask();
      c[2][k] = ring.sub(ring.sub(ring.reduce(values[k]), c[0][k]), c[1][k]);
    }
  });
  return out;
}

BShareVec share_b(Party& p, unsigned width, int owner, std::span<const u64> values, std::size_t n) {
  if (owner < 0 || owner >= kNumParties) throw UsageError("share owner out of range");
  if (p.id().index() == owner && values.size() != n) throw UsageError("owner must supply n values");
  BShareVec out(width, 0);
  const u64 mask = out.mask();
  deal_input(p, owner, n, width, out.a, out.b, [&](std::array<std::vector<u64>, 3>& c) {
    for (std::size_t k = 0; k < n; ++k) {
      c[0][k] = p.local_prg().next() & mask;
      c[1][k] = p.local_prg().next() & mask;
      c[2][k] = (values[k] ^ c[0][k] ^ c[1][k]) & mask;
    }
  });
  return out;
}

std::vector<u64> reconstruct_a(Party& p, const AShareVec& s) {
  auto missing = send_next_recv_prev(p, s.a, s.ring.bits());
  for (std::size_t k = 0; k < s.size(); ++k) {
    missing[k] = s.ring.add(s.ring.add(s.a[k], s.b[k]), missing[k]);
  }
  return missing;
}

std::vector<u64> reconstruct_b(Party& p, const BShareVec& s) {
  auto missing = send_next_recv_prev(p, s.a, s.width);
  for (std::size_t k = 0; k < s.size(); ++k) missing[k] = (s.a[k] ^ s.b[k] ^ missing[k]) & s.mask();
  return missing;
}

AShareVec public_a(const Party& p, const Ring& ring, std::span<const u64> values) {
  AShareVec out(ring, values.size());
  const int me = p.id().index();
  for (std::size_t k = 0; k < values.size(); ++k) {
    if (me == 0) out.a[k] = ring.reduce(values[k]);
    if (me == 2) out.b[k] = ring.reduce(values[k]);
  }
  return out;
}

AShareVec public_a(const Party& p, const Ring& ring, std::size_t n, u64 value) {
  std::vector<u64> v(n, value);
  return public_a(p, ring, v);
}

BShareVec public_b(const Party& p, unsigned width, std::size_t n, u64 value) {
  BShareVec out(width, n);
  const u64 v = value & out.mask();
  const int me = p.id().index();
  if (me == 0) std::fill(out.a.begin(), out.a.end(), v);
  if (me == 2) std::fill(out.b.begin(), out.b.end(), v);
  return out;
}

AShareVec linear(const Party& p, u64 alpha, const AShareVec& x, u64 beta) {
  AShareVec out = scale(x, alpha);
  const int me = p.id().index();
  const Ring& r = x.ring;
  for (std::size_t k = 0; k < out.size(); ++k) {
    if (me == 0) out.a[k] = r.add(out.a[k], beta);
    if (me == 2) out.b[k] = r.add(out.b[k], beta);
  }
  return out;
}

AShareVec add(const AShareVec& x, const AShareVec& y) {
  require_same(x, y);
  AShareVec out(x.ring, x.size());
  for (std::size_t k = 0; k < x.size(); ++k) {
    out.a[k] = x.ring.add(x.a[k], y.a[k]);
    out.b[k] = x.ring.add(x.b[k], y.b[k]);
  }
  return out;
}

AShareVec sub(const AShareVec& x, const AShareVec& y) {
  require_same(x, y);
  AShareVec out(x.ring, x.size());
  for (std::size_t k = 0; k < x.size(); ++k) {
    out.a[k] = x.ring.sub(x.a[k], y.a[k]);
    out.b[k] = x.ring.sub(x.b[k], y.b[k]);
  }
  return out;
}

AShareVec add_public(const Party& p, const AShareVec& x, std::span<const u64> c) {
  if (c.size() != x.size()) throw UsageError("public operand length mismatch");
  AShareVec out = x;
  const int me = p.id().index();
  for (std::size_t k = 0; k < x.size(); ++k) {
    if (me == 0) out.a[k] = x.ring.add(out.a[k], c[k]);
    if (me == 2) out.b[k] = x.ring.add(out.b[k], c[k]);
  }
  return out;
}

AShareVec scale(const AShareVec& x, u64 c) {
  AShareVec out(x.ring, x.size());
  for (std::size_t k = 0; k < x.size(); ++k) {
    out.a[k] = x.ring.mul(x.a[k], c);
    out.b[k] = x.ring.mul(x.b[k], c);
  }
  return out;
}

AShareVec scale(const AShareVec& x, std::span<const u64> c) {
  if (c.size() != x.size()) throw UsageError("public operand length mismatch");
  AShareVec out(x.ring, x.size());
  for (std::size_t k = 0; k < x.size(); ++k) {
    out.a[k] = x.ring.mul(x.a[k], c[k]);
    out.b[k] = x.ring.mul(x.b[k], c[k]);
  }
  return out;
}

AShareVec downcast(const AShareVec& x, const Ring& narrower) {
  if (narrower.bits() > x.ring.bits()) throw ConfigError("downcast needs a narrower ring");
  AShareVec out(narrower, x.size());
  for (std::size_t k = 0; k < x.size(); ++k) {
    out.a[k] = narrower.reduce(x.a[k]);
    out.b[k] = narrower.reduce(x.b[k]);
  }
  return out;
}

AShareVec mul(Party& p, const AShareVec& x, const AShareVec& y) {
  require_same(x, y);
  const Ring& r = x.ring;
  auto z = p.zero_shares(r, x.size());
  for (std::size_t k = 0; k < x.size(); ++k) {
    const u64 t = x.a[k] * y.a[k] + x.b[k] * y.a[k] + x.a[k] * y.b[k];
    z[k] = r.add(t, z[k]);
  }
  AShareVec out(r, 0);
  out.b = send_prev_recv_next(p, z, r.bits());
  out.a = std::move(z);
  if (p.debug_checks) check_replication(p, out);
  return out;
}

std::vector<AShareVec> mul_batch(Party& p,
                                 const std::vector<std::pair<const AShareVec*, const AShareVec*>>& pairs) {
  std::vector<std::vector<u64>> z(pairs.size());
  Bytes payload;
  for (std::size_t i = 0; i < pairs.size(); ++i) {
    const AShareVec& x = *pairs[i].first;
    const AShareVec& y = *pairs[i].second;
    require_same(x, y);
    const Ring& r = x.ring;
    z[i] = p.zero_shares(r, x.size());
    for (std::size_t k = 0; k < x.size(); ++k) {
      z[i][k] = r.add(x.a[k] * y.a[k] + x.b[k] * y.a[k] + x.a[k] * y.b[k], z[i][k]);
    }
    Bytes part = pack_words(z[i], r.bits());
    payload.insert(payload.end(), part.begin(), part.end());
  }
  const int prev = p.id().prev().index();
  const int next = p.id().next().index();
  auto in = p.comm().exchange_round({{prev, std::move(payload)}}, {next});
  const Bytes& got = in.at(next);
  std::vector<AShareVec> out;
  std::size_t offset = 0;
  for (std::size_t i = 0; i < pairs.size(); ++i) {
    const Ring& r = pairs[i].first->ring;
    const std::size_t len = (z[i].size() * r.bits() + 7) / 8;
    if (offset + len > got.size()) throw TransportError("short batched product payload");
    Bytes part(got.begin() + static_cast<std::ptrdiff_t>(offset),
               got.begin() + static_cast<std::ptrdiff_t>(offset + len));
    offset += len;
    AShareVec v(r, 0);
    v.b = unpack_words(part, z[i].size(), r.bits());
    v.a = std::move(z[i]);
    out.push_back(std::move(v));
  }
  if (offset != got.size()) throw TransportError("oversized batched product payload");
  return out;
}

AShareVec matmul_tn(Party& p, const AShareVec& A, const AShareVec& B, std::size_t rows,
                    std::size_t a_cols, std::size_t b_cols) {
  if (!(A.ring == B.ring)) throw ConfigError("ring width mismatch between operands");
  if (A.size() != rows * a_cols || B.size() != rows * b_cols) throw UsageError("matmul shape mismatch");
  const Ring& r = A.ring;
  std::vector<u64> acc(a_cols * b_cols, 0);
  for (std::size_t i = 0; i < rows; ++i) {
    const u64* aa = A.a.data() + i * a_cols;
    const u64* ab = A.b.data() + i * a_cols;
    const u64* ba = B.a.data() + i * b_cols;
    const u64* bb = B.b.data() + i * b_cols;
    for (std::size_t c = 0; c < a_cols; ++c) {
      const u64 x0 = aa[c], x1 = ab[c];
      if (x0 == 0 && x1 == 0) continue;
      u64* row = acc.data() + c * b_cols;
      const u64 xs = x0 + x1;
      for (std::size_t k = 0; k < b_cols; ++k) row[k] += xs * ba[k] + x0 * bb[k];
    }
  }
  auto z = p.zero_shares(r, acc.size());
  for (std::size_t k = 0; k < acc.size(); ++k) z[k] = r.add(r.reduce(acc[k]), z[k]);
  AShareVec out(r, 0);
  out.b = send_prev_recv_next(p, z, r.bits());
  out.a = std::move(z);
  return out;
}

BShareVec xor_b(const BShareVec& x, const BShareVec& y) {
  require_same(x, y);
  BShareVec out(x.width, x.size());
  for (std::size_t k = 0; k < x.size(); ++k) {
    out.a[k] = x.a[k] ^ y.a[k];
    out.b[k] = x.b[k] ^ y.b[k];
  }
  return out;
}

BShareVec xor_public(const Party& p, const BShareVec& x, u64 c) {
  BShareVec out = x;
  c &= x.mask();
  const int me = p.id().index();
  for (std::size_t k = 0; k < x.size(); ++k) {
    if (me == 0) out.a[k] ^= c;
    if (me == 2) out.b[k] ^= c;
  }
  return out;
}

BShareVec xor_public(const Party& p, const BShareVec& x, std::span<const u64> c) {
  if (c.size() != x.size()) throw UsageError("public operand length mismatch");
  BShareVec out = x;
  const int me = p.id().index();
  for (std::size_t k = 0; k < x.size(); ++k) {
    if (me == 0) out.a[k] ^= c[k] & x.mask();
    if (me == 2) out.b[k] ^= c[k] & x.mask();
  }
  return out;
}

BShareVec not_b(const Party& p, const BShareVec& x) { return xor_public(p, x, x.mask()); }

BShareVec and_public(const BShareVec& x, u64 c) {
  BShareVec out = x;
  for (std::size_t k = 0; k < x.size(); ++k) {
    out.a[k] &= c;
    out.b[k] &= c;
  }
  return out;
}

BShareVec and_b(Party& p, const BShareVec& x, const BShareVec& y) {
  require_same(x, y);
  const u64 mask = x.mask();
  auto z = p.zero_xor_shares(mask, x.size());
  for (std::size_t k = 0; k < x.size(); ++k) {
    z[k] ^= ((x.a[k] & y.a[k]) ^ (x.b[k] & y.a[k]) ^ (x.a[k] & y.b[k])) & mask;
  }
  BShareVec out(x.width, 0);
  out.b = send_prev_recv_next(p, z, x.width);
  out.a = std::move(z);
  if (p.debug_checks) check_replication(p, out);
  return out;
}

BShareVec or_b(Party& p, const BShareVec& x, const BShareVec& y) {
  return xor_b(xor_b(x, y), and_b(p, x, y));
}

void check_replication(Party& p, const AShareVec& s) {
  PhaseScope scope(p.comm(), "debug");
  auto theirs = send_next_recv_prev(p, s.b, s.ring.bits());
  // P_{i-1} sent its second component x_i, which must equal our first.
  for (std::size_t k = 0; k < s.size(); ++k) {
    if (theirs[k] != s.a[k]) throw IntegrityError("replicated arithmetic shares are inconsistent");
  }
}

void check_replication(Party& p, const BShareVec& s) {
  PhaseScope scope(p.comm(), "debug");
  auto theirs = send_next_recv_prev(p, s.b, s.width);
  for (std::size_t k = 0; k < s.size(); ++k) {
    if (theirs[k] != s.a[k]) throw IntegrityError("replicated boolean shares are inconsistent");
  }
}

}  // namespace otree
