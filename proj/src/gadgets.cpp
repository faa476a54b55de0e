#include "otree/gadgets.hpp"

#include <cmath>

#include "otree/errors.hpp"
#include "otree/material.hpp"

namespace otree {

namespace {

unsigned pow2_ceil(unsigned w) {
  unsigned out = 1;
  while (out < w) out <<= 1;
  return out;
}

u64 low_mask(unsigned w) { return w >= 64 ? ~u64{0} : ((u64{1} << w) - 1); }

// Gathers the even-indexed bits of v into the low half.
u64 even_bits(u64 v) {
  v &= 0x5555555555555555ULL;
  v = (v | (v >> 1)) & 0x3333333333333333ULL;
  v = (v | (v >> 2)) & 0x0f0f0f0f0f0f0f0fULL;
  v = (v | (v >> 4)) & 0x00ff00ff00ff00ffULL;
  v = (v | (v >> 8)) & 0x0000ffff0000ffffULL;
  v = (v | (v >> 16)) & 0x00000000ffffffffULL;
  return v;
}

u64 odd_bits(u64 v) { return even_bits(v >> 1); }

u64 pow2(unsigned k) { return k >= 64 ? 0 : (u64{1} << k); }

template <typename F>
BShareVec map_b(const BShareVec& x, unsigned width, F f) {
  BShareVec out(width, x.size());
  const u64 m = out.mask();
  for (std::size_t k = 0; k < x.size(); ++k) {
    out.a[k] = f(x.a[k]) & m;
    out.b[k] = f(x.b[k]) & m;
  }
  return out;
}

BShareVec and_tree(Party& p, BShareVec w) {
  while (w.width > 1) {
    const unsigned k = w.width / 2;
    const u64 mk = low_mask(k);
    BShareVec hi = map_b(w, k, [k](u64 v) { return v >> k; });
    BShareVec lo = map_b(w, k, [mk](u64 v) { return v & mk; });
    w = and_b(p, hi, lo);
  }
  return w;
}

// Shares of [opened d == 0] given c = d + r and r's bits.
BShareVec zero_test(Party& p, const AShareVec& d) {
  const std::size_t n = d.size();
  const Ring& ring = d.ring;
  EdaBits eda = take_edabits(p.material(), ring, n);
  const auto c = reconstruct_a(p, add(d, eda.r));
  const unsigned width = pow2_ceil(ring.bits());
  BShareVec r = map_b(eda.bits, width, [](u64 v) { return v; });
  std::vector<u64> not_c(n);
  for (std::size_t k = 0; k < n; ++k) not_c[k] = ~c[k];
  return and_tree(p, xor_public(p, r, not_c));
}

}  // namespace

BShareVec eq(Party& p, const AShareVec& x, const AShareVec& y) {
  if (x.size() != y.size()) throw UsageError("eq operand length mismatch");
  if (x.empty()) return BShareVec(1, 0);
  PhaseScope scope(p.comm(), "eq");
  return zero_test(p, sub(x, y));
}

BShareVec eq_public(Party& p, const AShareVec& x, std::span<const u64> c) {
  if (x.size() != c.size()) throw UsageError("eq operand length mismatch");
  if (x.empty()) return BShareVec(1, 0);
  PhaseScope scope(p.comm(), "eq");
  std::vector<u64> neg(c.size());
  for (std::size_t k = 0; k < c.size(); ++k) neg[k] = x.ring.neg(c[k]);
  return zero_test(p, add_public(p, x, neg));
}

BShareVec public_less_than_shared(Party& p, std::span<const u64> c, const BShareVec& r, unsigned w) {
  const std::size_t n = r.size();
  if (c.size() != n) throw UsageError("comparison operand length mismatch");
  if (w == 0 || n == 0) return public_b(p, 1, n, 0);
  const unsigned width = pow2_ceil(w);
  const u64 m = low_mask(w);
  // Per bit: g = r & ~c (r decides), q = ~(r ^ c) (equal so far, keep looking lower).
  BShareVec r_low = map_b(r, width, [m](u64 v) { return v & m; });
  std::vector<u64> not_c(n), c_low(n);
  for (std::size_t k = 0; k < n; ++k) {
    c_low[k] = c[k] & m;
    not_c[k] = ~c_low[k];
  }
  BShareVec g = r_low;
  for (std::size_t k = 0; k < n; ++k) {
    g.a[k] &= not_c[k];
    g.b[k] &= not_c[k];
  }
  BShareVec q = xor_public(p, r_low, not_c);

  // Each step merges adjacent bit pairs (2i+1, 2i), the higher one taking precedence.
  while (g.width > 1) {
    const unsigned k = g.width / 2;
    BShareVec g_hi = map_b(g, k, odd_bits);
    BShareVec g_lo = map_b(g, k, even_bits);
    BShareVec q_hi = map_b(q, k, odd_bits);
    if (k == 1) {
      g = xor_b(g_hi, and_b(p, q_hi, g_lo));
      break;
    }
    // (q_hi & g_lo) and (q_hi & q_lo) share one round as the two halves of a word.
    BShareVec lhs(g.width, n), rhs(g.width, n);
    for (std::size_t e = 0; e < n; ++e) {
      const u64 qa = odd_bits(q.a[e]), qb = odd_bits(q.b[e]);
      lhs.a[e] = qa | (qa << k);
      lhs.b[e] = qb | (qb << k);
      rhs.a[e] = even_bits(g.a[e]) | (even_bits(q.a[e]) << k);
      rhs.b[e] = even_bits(g.b[e]) | (even_bits(q.b[e]) << k);
    }
    const u64 mk = low_mask(k);
    BShareVec z = and_b(p, lhs, rhs);
    g = xor_b(g_hi, map_b(z, k, [mk](u64 v) { return v & mk; }));
    q = map_b(z, k, [k](u64 v) { return v >> k; });
  }
  return g;
}

BShareVec msb(Party& p, const AShareVec& x) {
  const std::size_t n = x.size();
  if (n == 0) return BShareVec(1, 0);
  PhaseScope scope(p.comm(), "msb");
  const Ring& ring = x.ring;
  const unsigned l = ring.bits();
  EdaBits eda = take_edabits(p.material(), ring, n);
  const auto c = reconstruct_a(p, add(x, eda.r));
  // x = c - r; its top bit is c_{l-1} ^ r_{l-1} ^ borrow out of the low l-1 bits.
  BShareVec borrow = public_less_than_shared(p, c, eda.bits, l - 1);
  BShareVec top = map_b(eda.bits, 1, [l](u64 v) { return v >> (l - 1); });
  std::vector<u64> c_top(n);
  for (std::size_t k = 0; k < n; ++k) c_top[k] = c[k] >> (l - 1);
  return xor_public(p, xor_b(borrow, top), c_top);
}

BShareVec lt_bounded(Party& p, const AShareVec& x, const AShareVec& y) {
  if (x.size() != y.size()) throw UsageError("lt operand length mismatch");
  PhaseScope scope(p.comm(), "lt");
  return msb(p, sub(x, y));
}

BShareVec lt_bounded_public(Party& p, const AShareVec& x, std::span<const u64> c) {
  if (x.size() != c.size()) throw UsageError("lt operand length mismatch");
  PhaseScope scope(p.comm(), "lt");
  std::vector<u64> neg(c.size());
  for (std::size_t k = 0; k < c.size(); ++k) neg[k] = x.ring.neg(c[k]);
  return msb(p, add_public(p, x, neg));
}

// With a = msb(x), b = msb(y), s = msb(x - y): x < y is b when a != b, else s.
BShareVec lt(Party& p, const AShareVec& x, const AShareVec& y) {
  if (x.size() != y.size()) throw UsageError("lt operand length mismatch");
  const std::size_t n = x.size();
  if (n == 0) return BShareVec(1, 0);
  PhaseScope scope(p.comm(), "lt");
  AShareVec d = sub(x, y);
  BShareVec all = msb(p, concat({&x, &y, &d}));
  BShareVec a = all.slice(0, n), b = all.slice(n, n), s = all.slice(2 * n, n);
  return xor_b(s, and_b(p, xor_b(a, b), xor_b(b, s)));
}

BShareVec lt_public(Party& p, const AShareVec& x, std::span<const u64> c) {
  if (x.size() != c.size()) throw UsageError("lt operand length mismatch");
  const std::size_t n = x.size();
  if (n == 0) return BShareVec(1, 0);
  PhaseScope scope(p.comm(), "lt");
  std::vector<u64> neg(n), b(n);
  for (std::size_t k = 0; k < n; ++k) {
    neg[k] = x.ring.neg(c[k]);
    b[k] = (x.ring.reduce(c[k]) >> (x.ring.bits() - 1)) & 1;
  }
  AShareVec d = add_public(p, x, neg);
  BShareVec all = msb(p, concat({&x, &d}));
  BShareVec a = all.slice(0, n), s = all.slice(n, n);
  return xor_b(s, and_b(p, xor_public(p, a, b), xor_public(p, s, b)));
}

AShareVec b2a(Party& p, const BShareVec& b, const Ring& ring) {
  if (b.width != 1) throw UsageError("b2a expects single-bit shares");
  const std::size_t n = b.size();
  if (n == 0) return AShareVec(ring, 0);
  PhaseScope scope(p.comm(), "b2a");
  DaBits da = take_dabits(p.material(), ring, n);
  const auto e = reconstruct_b(p, xor_b(b, da.bit));
  // b = e ^ r, so b = r when e = 0 and 1 - r when e = 1.
  AShareVec out(ring, n);
  const int me = p.id().index();
  for (std::size_t k = 0; k < n; ++k) {
    if (e[k]) {
      out.a[k] = ring.add(ring.neg(da.r.a[k]), me == 0 ? 1 : 0);
      out.b[k] = ring.add(ring.neg(da.r.b[k]), me == 2 ? 1 : 0);
    } else {
      out.a[k] = da.r.a[k];
      out.b[k] = da.r.b[k];
    }
  }
  return out;
}

AShareVec select_arith(Party& p, const AShareVec& w1, const AShareVec& w2, const AShareVec& bit) {
  if (w1.size() != w2.size() || w1.size() != bit.size()) throw UsageError("select length mismatch");
  return add(w1, mul(p, bit, sub(w2, w1)));
}

AShareVec select_share(Party& p, const AShareVec& w1, const AShareVec& w2, const BShareVec& i) {
  if (w1.size() != w2.size() || w1.size() != i.size()) throw UsageError("select length mismatch");
  PhaseScope scope(p.comm(), "select");
  return select_arith(p, w1, w2, b2a(p, i, w1.ring));
}

AShareVec truncate(Party& p, const AShareVec& x, unsigned k) {
  std::vector<unsigned> ks(x.size(), k);
  return truncate(p, x, ks);
}

// With x' = x + 2^(l-2) in [0, 2^(l-1)) and c = x' + r opened, the addition
// wrapped exactly when r_{l-1} = 1 and c_{l-1} = 0, so no comparison is needed.
AShareVec truncate(Party& p, const AShareVec& x, std::span<const unsigned> k) {
  const std::size_t n = x.size();
  if (k.size() != n) throw UsageError("truncate shift count mismatch");
  const Ring& ring = x.ring;
  const unsigned l = ring.bits();
  if (l < 3) throw ConfigError("truncation needs a ring of at least 3 bits");
  for (unsigned s : k) {
    if (s > l - 2) throw UsageError("truncation shift exceeds ring headroom");
  }
  if (n == 0) return AShareVec(ring, 0);
  PhaseScope scope(p.comm(), "trunc");
  TruncBits tb = take_truncbits(p.material(), ring, n);
  AShareVec r(ring, n);
  for (unsigned j = 0; j < l; ++j) {
    for (std::size_t e = 0; e < n; ++e) {
      r.a[e] = ring.add(r.a[e], tb.bit_shares[j].a[e] << j);
      r.b[e] = ring.add(r.b[e], tb.bit_shares[j].b[e] << j);
    }
  }
  const u64 offset = pow2(l - 2);
  const auto c = reconstruct_a(p, add(linear(p, 1, x, offset), r));

  AShareVec out(ring, n);
  const int me = p.id().index();
  for (std::size_t e = 0; e < n; ++e) {
    const unsigned s = k[e];
    u64 ra = 0, rb = 0;
    for (unsigned j = s; j < l; ++j) {
      ra += tb.bit_shares[j].a[e] << (j - s);
      rb += tb.bit_shares[j].b[e] << (j - s);
    }
    u64 oa = ring.neg(ra), ob = ring.neg(rb);
    if (((c[e] >> (l - 1)) & 1) == 0) {
      oa = ring.add(oa, ring.mul(tb.bit_shares[l - 1].a[e], pow2(l - s)));
      ob = ring.add(ob, ring.mul(tb.bit_shares[l - 1].b[e], pow2(l - s)));
    }
    const u64 pub = ring.sub(c[e] >> s, pow2(l - 2 - s));
    if (me == 0) oa = ring.add(oa, pub);
    if (me == 2) ob = ring.add(ob, pub);
    out.a[e] = oa;
    out.b[e] = ob;
  }
  return out;
}

DivisionParams division_params(unsigned ring_bits, unsigned tau) {
  if (tau + 4 >= ring_bits) throw ConfigError("precision must satisfy tau < l - 4 for division");
  DivisionParams dp;
  dp.bound_bits = ring_bits - tau - 2;
  dp.frac_bits = std::min((ring_bits - 4) / 2, dp.bound_bits);
  if (dp.frac_bits < 2) throw ConfigError("ring too narrow for division");
  unsigned lg = 0;
  while ((1u << lg) < tau) ++lg;
  dp.iterations = lg + 2;
  return dp;
}

// Normalizes both operands to B bits by their shared bit lengths, refines a
// reciprocal of the normalized denominator with Newton steps, and restores the
// exponent kP - kQ through a one-hot over its possible values.
AShareVec division(Party& p, const AShareVec& num, const AShareVec& den, unsigned tau) {
  if (!(num.ring == den.ring)) throw ConfigError("division operands in different rings");
  if (num.size() != den.size()) throw UsageError("division operand length mismatch");
  const Ring& ring = num.ring;
  const std::size_t n = num.size();
  const DivisionParams dp = division_params(ring.bits(), tau);
  const unsigned B = dp.bound_bits, f = dp.frac_bits;
  if (n == 0) return AShareVec(ring, 0);
  PhaseScope scope(p.comm(), "division");

  // c[j] = [x >= 2^j]: den for j = 1..B-1, num for j = 0..B-1.
  std::vector<const AShareVec*> parts;
  std::vector<u64> bounds;
  for (unsigned j = 1; j < B; ++j) {
    parts.push_back(&den);
    bounds.insert(bounds.end(), n, pow2(j));
  }
  for (unsigned j = 0; j < B; ++j) {
    parts.push_back(&num);
    bounds.insert(bounds.end(), n, pow2(j));
  }
  AShareVec ge = b2a(p, not_b(p, lt_bounded_public(p, concat(parts), bounds)), ring);
  auto den_bit = [&](unsigned j) { return ge.slice((j - 1) * n, n); };
  auto num_bit = [&](unsigned j) { return ge.slice((B - 1 + j) * n, n); };

  // Scale factors 2^(B - bitlen): S = c0 * 2^(B-1) - sum_{j>=1} c_j * 2^(B-1-j).
  AShareVec sq = public_a(p, ring, n, pow2(B - 1));
  AShareVec sp = scale(num_bit(0), pow2(B - 1));
  AShareVec kq = public_a(p, ring, n, 1);
  AShareVec kp = num_bit(0);
  for (unsigned j = 1; j < B; ++j) {
    AShareVec cq = den_bit(j), cp = num_bit(j);
    sq = sub(sq, scale(cq, pow2(B - 1 - j)));
    sp = sub(sp, scale(cp, pow2(B - 1 - j)));
    kq = add(kq, cq);
    kp = add(kp, cp);
  }
  auto norm = mul_batch(p, {{&den, &sq}, {&num, &sp}});
  AShareVec scaled = truncate(p, concat({&norm[0], &norm[1]}), B - f);
  AShareVec q = scaled.slice(0, n);
  AShareVec pn = scaled.slice(n, n);

  // w0 = 2.9142 - 2q, then w <- w * (2 - q * w).
  const u64 w0 = static_cast<u64>(std::llround(2.9142 * static_cast<double>(pow2(f))));
  AShareVec w = linear(p, ring.neg(2), q, w0);
  for (unsigned it = 0; it < dp.iterations; ++it) {
    AShareVec qw = truncate(p, mul(p, q, w), f);
    AShareVec e = linear(p, ring.neg(1), qw, pow2(f + 1));
    w = truncate(p, mul(p, w, e), f);
  }
  AShareVec r = truncate(p, mul(p, pn, w), f);

  // P/Q * 2^tau = r * 2^t with t = (kP - kQ) + tau - f.
  const unsigned s = ring.bits() - 3 - f;
  const int t_lo = -static_cast<int>(s);
  AShareVec expo = sub(kp, kq);
  std::vector<int> shifts;
  std::vector<const AShareVec*> copies;
  std::vector<u64> values;
  for (int v = -static_cast<int>(B); v < static_cast<int>(B); ++v) {
    const int t = v + static_cast<int>(tau) - static_cast<int>(f);
    if (t < t_lo) continue;
    shifts.push_back(t);
    copies.push_back(&expo);
    values.insert(values.end(), n, ring.from_signed(v));
  }
  AShareVec onehot = b2a(p, eq_public(p, concat(copies), values), ring);
  AShareVec pos(ring, n), neg(ring, n);
  for (std::size_t i = 0; i < shifts.size(); ++i) {
    AShareVec hot = onehot.slice(i * n, n);
    if (shifts[i] >= 0) {
      pos = add(pos, scale(hot, pow2(static_cast<unsigned>(shifts[i]))));
    } else {
      neg = add(neg, scale(hot, pow2(static_cast<unsigned>(shifts[i] + static_cast<int>(s)))));
    }
  }
  auto prod = mul_batch(p, {{&r, &pos}, {&r, &neg}});
  return add(prod[0], truncate(p, prod[1], s));
}

AShareVec argmin_masked(Party& p, const AShareVec& scores, const AShareVec& mask, std::size_t groups,
                        unsigned tau, const Ring& index_ring) {
  if (scores.size() != mask.size()) throw UsageError("argmin score/mask length mismatch");
  if (groups == 0) return AShareVec(index_ring, 0);
  if (scores.size() % groups != 0) throw UsageError("argmin groups do not divide the input");
  if (scores.ring.bits() > index_ring.bits()) throw ConfigError("index ring narrower than score ring");
  const Ring& sr = scores.ring;
  std::size_t width = scores.size() / groups;
  if (width == 0) throw UsageError("argmin over empty groups");
  PhaseScope scope(p.comm(), "argmin");

  const u64 big = pow2(tau + 1);
  AShareVec s = linear(p, 1, mul(p, mask, linear(p, 1, scores, sr.neg(big))), big);
  AShareVec idx(index_ring, 0);
  {
    std::vector<u64> pos(scores.size());
    for (std::size_t i = 0; i < pos.size(); ++i) pos[i] = i % width;
    idx = public_a(p, index_ring, pos);
  }

  while (width > 1) {
    const std::size_t pairs = width / 2;
    const bool odd = width % 2 == 1;
    const std::size_t total = groups * pairs;
    AShareVec sa(sr, total), sb(sr, total), ia(index_ring, total), ib(index_ring, total);
    for (std::size_t g = 0; g < groups; ++g) {
      for (std::size_t j = 0; j < pairs; ++j) {
        const std::size_t dst = g * pairs + j, src = g * width + 2 * j;
        sa.a[dst] = s.a[src], sa.b[dst] = s.b[src];
        sb.a[dst] = s.a[src + 1], sb.b[dst] = s.b[src + 1];
        ia.a[dst] = idx.a[src], ia.b[dst] = idx.b[src];
        ib.a[dst] = idx.a[src + 1], ib.b[dst] = idx.b[src + 1];
      }
    }
    // Take the right element only when strictly smaller.
    AShareVec take_i = b2a(p, lt_bounded(p, sb, sa), index_ring);
    AShareVec take_s = downcast(take_i, sr);
    AShareVec ds = sub(sb, sa), di = sub(ib, ia);
    auto moved = mul_batch(p, {{&take_s, &ds}, {&take_i, &di}});
    AShareVec ws = add(sa, moved[0]);
    AShareVec wi = add(ia, moved[1]);

    const std::size_t next = pairs + (odd ? 1 : 0);
    AShareVec ns(sr, groups * next), ni(index_ring, groups * next);
    for (std::size_t g = 0; g < groups; ++g) {
      for (std::size_t j = 0; j < pairs; ++j) {
        const std::size_t dst = g * next + j, src = g * pairs + j;
        ns.a[dst] = ws.a[src], ns.b[dst] = ws.b[src];
        ni.a[dst] = wi.a[src], ni.b[dst] = wi.b[src];
      }
      if (odd) {
        const std::size_t dst = g * next + pairs, src = g * width + width - 1;
        ns.a[dst] = s.a[src], ns.b[dst] = s.b[src];
        ni.a[dst] = idx.a[src], ni.b[dst] = idx.b[src];
      }
    }
    s = std::move(ns);
    idx = std::move(ni);
    width = next;
  }
  return idx;
}

namespace {

MaterialCounts single(CorrelationKind kind, unsigned l, std::size_t n) {
  MaterialCounts c;
  if (n > 0) c[{kind, l}] = n;
  return c;
}

}  // namespace

MaterialCounts eq_material(unsigned l, std::size_t n) { return single(CorrelationKind::kEdaBit, l, n); }

MaterialCounts msb_material(unsigned l, std::size_t n) { return single(CorrelationKind::kEdaBit, l, n); }

MaterialCounts b2a_material(unsigned l, std::size_t n) { return single(CorrelationKind::kDaBit, l, n); }

MaterialCounts trunc_material(unsigned l, std::size_t n) { return single(CorrelationKind::kTruncBits, l, n); }

MaterialCounts division_material(unsigned l, unsigned tau, std::size_t n) {
  MaterialCounts c;
  if (n == 0) return c;
  const DivisionParams dp = division_params(l, tau);
  const unsigned B = dp.bound_bits, f = dp.frac_bits;
  const int s = static_cast<int>(l - 3 - f);
  std::size_t hot = 0;
  for (int v = -static_cast<int>(B); v < static_cast<int>(B); ++v) {
    if (v + static_cast<int>(tau) - static_cast<int>(f) >= -s) ++hot;
  }
  add_counts(c, msb_material(l, (2 * B - 1) * n));
  add_counts(c, b2a_material(l, (2 * B - 1) * n));
  add_counts(c, trunc_material(l, (4 + 2 * dp.iterations) * n));
  add_counts(c, eq_material(l, hot * n));
  add_counts(c, b2a_material(l, hot * n));
  return c;
}

MaterialCounts argmin_material(unsigned score_l, unsigned index_l, std::size_t groups, std::size_t width) {
  MaterialCounts c;
  if (groups == 0) return c;
  while (width > 1) {
    const std::size_t pairs = width / 2;
    add_counts(c, msb_material(score_l, groups * pairs));
    add_counts(c, b2a_material(index_l, groups * pairs));
    width = pairs + width % 2;
  }
  return c;
}

}  // namespace otree
