#include "otree/train.hpp"

#include <algorithm>
#include <bit>

#include "otree/errors.hpp"
#include "otree/gadgets.hpp"
#include "otree/rss.hpp"

namespace otree {

namespace {

const Ring kR64(64);
const Ring kR32(32);

// out[k] = x[idx[k]]
AShareVec gather(const AShareVec& x, const std::vector<std::size_t>& idx) {
  AShareVec out(x.ring, idx.size());
  for (std::size_t k = 0; k < idx.size(); ++k) {
    out.a[k] = x.a[idx[k]];
    out.b[k] = x.b[idx[k]];
  }
  return out;
}

// Each element repeated `times` times in place.
AShareVec repeat_each(const AShareVec& x, std::size_t times) {
  std::vector<std::size_t> idx;
  idx.reserve(x.size() * times);
  for (std::size_t k = 0; k < x.size(); ++k) idx.insert(idx.end(), times, k);
  return gather(x, idx);
}

AShareVec constant(const Party& p, std::size_t n, u64 v) { return public_a(p, kR64, n, v); }

// Blocks of `block` elements, each duplicated for the two children.
AShareVec duplicate_blocks(const AShareVec& x, std::size_t block) {
  std::vector<std::size_t> idx;
  idx.reserve(2 * x.size());
  for (std::size_t k = 0; k * block < x.size(); ++k) {
    for (int child = 0; child < 2; ++child) {
      for (std::size_t j = 0; j < block; ++j) idx.push_back(k * block + j);
    }
  }
  return gather(x, idx);
}

unsigned bit_length(u64 v) { return static_cast<unsigned>(std::bit_width(v)); }

// Shift applied to P and Q so both fit the division bound.
unsigned gini_scale(std::size_t rows, unsigned tau) {
  const unsigned bound = division_params(kR32.bits(), tau).bound_bits;
  const u64 max_q = static_cast<u64>(rows) * static_cast<u64>(rows);
  const unsigned bits = bit_length(max_q);
  return bits >= bound ? bits - bound + 1 : 0;
}

std::vector<u64> positions(std::size_t groups, std::size_t width) {
  std::vector<u64> pos(groups * width);
  for (std::size_t k = 0; k < pos.size(); ++k) pos[k] = k % width;
  return pos;
}

AShareVec level_types(const TrainContext& ctx) { return ctx.F.slice(ctx.level_begin(), ctx.nodes()); }

// Count of features still available per node.
AShareVec available(const TrainContext& ctx) {
  const std::size_t n = ctx.nodes(), m = ctx.m;
  AShareVec out(kR64, n);
  for (std::size_t k = 0; k < n; ++k) {
    for (std::size_t f = 0; f < m; ++f) {
      out.a[k] += ctx.gamma.a[k * m + f];
      out.b[k] += ctx.gamma.b[k * m + f];
    }
  }
  return out;
}

// Column (row r, feature f, value j) of every node's counter block.
AShareVec counter_column(const TrainContext& ctx, std::size_t row, std::size_t feature, unsigned value) {
  const std::size_t n = ctx.nodes(), width = 6 * ctx.m;
  std::vector<std::size_t> idx(n);
  for (std::size_t k = 0; k < n; ++k) idx[k] = k * width + counter_index(ctx.m, row, feature, value);
  return gather(ctx.counters, idx);
}

// Reveals only whether any node of the level splits.
bool reveal_any(Party& p, const AShareVec& split) {
  AShareVec sum(kR64, 1);
  for (std::size_t k = 0; k < split.size(); ++k) {
    sum.a[0] += split.a[k];
    sum.b[0] += split.b[k];
  }
  const std::vector<u64> zero{0};
  return reconstruct_b(p, eq_public(p, downcast(sum, kR32), zero))[0] == 0;
}

void check_config(const SharedDataset& data, const SecureTrainConfig& cfg) {
  if (data.cols < 2) throw ConfigError("a dataset needs at least one feature and a label");
  if (data.cells.size() != data.rows * data.cols) throw ConfigError("dataset shares do not match its shape");
  if (!(data.cells.ring == kR64)) throw ConfigError("dataset shares must be in Z_2^64");
  if (data.rows == 0) throw ConfigError("dataset has no rows");
  if (data.rows >= (std::size_t{1} << 24)) throw ConfigError("at most 2^24 - 1 samples are supported");
  if (cfg.tau + 4 >= kR32.bits()) throw ConfigError("precision must satisfy tau < 28");
  if (cfg.max_lanes == 0) throw ConfigError("lane ceiling must be positive");
}

}  // namespace

TrainContext start_training(Party& p, const SharedDataset& data, const SecureTrainConfig& cfg) {
  check_config(data, cfg);
  TrainContext ctx;
  ctx.data = &data;
  ctx.m = data.features();
  const std::size_t n = data.rows, m = ctx.m;
  ctx.T = constant(p, 1, 0);
  ctx.F = constant(p, 1, kLeaf);
  ctx.member = constant(p, n, 0);
  ctx.counters = constant(p, 6 * m, 0);
  ctx.gamma = constant(p, m, 1);
  ctx.fallback = constant(p, 1, 0);

  std::vector<std::size_t> xi, yi;
  for (std::size_t r = 0; r < n; ++r) {
    for (std::size_t f = 0; f < m; ++f) xi.push_back(r * data.cols + f);
    yi.push_back(r * data.cols + m);
  }
  ctx.x = gather(data.cells, xi);
  ctx.y = gather(data.cells, yi);
  PhaseScope scope(p.comm(), "setup");
  ctx.xy = mul(p, ctx.x, repeat_each(ctx.y, m));
  return ctx;
}

void ol_partition(Party& p, TrainContext& ctx, const SecureTrainConfig& cfg) {
  if (ctx.level == 0) return;
  PhaseScope scope(p.comm(), "ol_partition");
  OaaOptions opt;
  opt.index_bits = 32;
  opt.max_lanes = cfg.max_lanes;
  AShareVec tval = oaa(p, ctx.T.slice(0, ctx.level_begin()), ctx.member, opt);
  AShareVec dval = oaa_rows(p, ctx.x, ctx.m, tval, opt);
  ctx.member = linear(p, 1, add(linear(p, 2, ctx.member, 0), dval), 1);
}

void ol_count(Party& p, TrainContext& ctx, const SecureTrainConfig& cfg) {
  PhaseScope scope(p.comm(), "ol_count");
  const std::size_t n = ctx.nodes(), m = ctx.m, rows = ctx.data->rows;
  const std::size_t cols = 1 + 2 * m;

  // S[k] = (sum LCF, sum LCF*y, sum LCF*x_f, sum LCF*x_f*y) per node.
  AShareVec sums(kR64, n * cols);
  AShareVec ones(kR64, n);
  const std::size_t per_chunk = std::max<std::size_t>(1, cfg.max_lanes / n);
  const auto pos = positions(per_chunk, n);
  std::vector<u64> offset(1, kR32.neg(ctx.level_begin()));
  for (std::size_t i0 = 0; i0 < rows; i0 += per_chunk) {
    const std::size_t count = std::min(per_chunk, rows - i0);
    AShareVec rel = add_public(p, downcast(ctx.member.slice(i0, count), kR32), std::vector<u64>(count, offset[0]));
    AShareVec lanes = repeat_each(rel, n);
    AShareVec lcf =
        b2a(p, eq_public(p, lanes, std::span<const u64>(pos.data(), count * n)), kR64);
    AShareVec rhs(kR64, 0);
    {
      std::vector<std::size_t> idx;
      AShareVec yc = ctx.y.slice(i0, count), xc = ctx.x.slice(i0 * m, count * m),
                xyc = ctx.xy.slice(i0 * m, count * m);
      AShareVec all = concat({&yc, &xc, &xyc});
      for (std::size_t r = 0; r < count; ++r) {
        idx.push_back(r);
        for (std::size_t f = 0; f < m; ++f) idx.push_back(count + r * m + f);
        for (std::size_t f = 0; f < m; ++f) idx.push_back(count + count * m + r * m + f);
      }
      rhs = gather(all, idx);
    }
    AShareVec prod = matmul_tn(p, lcf, rhs, count, n, cols);
    sums = add(sums, prod);
    for (std::size_t r = 0; r < count; ++r) {
      for (std::size_t k = 0; k < n; ++k) {
        ones.a[k] += lcf.a[r * n + k];
        ones.b[k] += lcf.b[r * n + k];
      }
    }
  }

  // Only candidate nodes (F = 1) take the new counts.
  const std::vector<u64> leaf(n, kLeaf);
  AShareVec is_leaf = b2a(p, eq_public(p, downcast(level_types(ctx), kR32), leaf), kR64);
  AShareVec all = concat({&ones, &sums});
  std::vector<std::size_t> mask_idx;
  for (std::size_t k = 0; k < n; ++k) mask_idx.push_back(k);
  for (std::size_t k = 0; k < n; ++k) mask_idx.insert(mask_idx.end(), cols, k);
  AShareVec masked = mul(p, gather(is_leaf, mask_idx), all);

  const std::size_t width = 6 * m;
  AShareVec delta(kR64, n * width);
  for (std::size_t k = 0; k < n; ++k) {
    const u64 s1a = masked.a[k], s1b = masked.b[k];
    const std::size_t base = n + k * cols;
    const u64 sla = masked.a[base], slb = masked.b[base];
    for (std::size_t f = 0; f < m; ++f) {
      const u64 sda = masked.a[base + 1 + f], sdb = masked.b[base + 1 + f];
      const u64 sdla = masked.a[base + 1 + m + f], sdlb = masked.b[base + 1 + m + f];
      auto set = [&](std::size_t row, unsigned v, u64 va, u64 vb) {
        delta.a[k * width + counter_index(m, row, f, v)] = va;
        delta.b[k * width + counter_index(m, row, f, v)] = vb;
      };
      set(0, 1, sda, sdb);
      set(0, 0, s1a - sda, s1b - sdb);
      set(2, 1, sdla, sdlb);
      set(2, 0, sla - sdla, slb - sdlb);
      set(1, 1, sda - sdla, sdb - sdlb);
      set(1, 0, s1a - sda - sla + sdla, s1b - sdb - slb + sdlb);
    }
  }
  ctx.counters = add(ctx.counters, delta);
}

HcResult ohc_mpc(Party& p, const TrainContext& ctx, const SecureTrainConfig& cfg) {
  PhaseScope scope(p.comm(), "hc_mpc");
  const std::size_t n = ctx.nodes(), m = ctx.m;
  const std::size_t begin = ctx.level_begin();
  AShareVec psi0 = add(counter_column(ctx, 1, 0, 0), counter_column(ctx, 1, 0, 1));
  AShareVec psi1 = add(counter_column(ctx, 2, 0, 0), counter_column(ctx, 2, 0, 1));
  AShareVec total = add(psi0, psi1);
  AShareVec psi0s = downcast(psi0, kR32), psi1s = downcast(psi1, kR32);
  BShareVec maj_bit = lt_bounded(p, psi0s, psi1s);

  HcResult out;
  if (ctx.last) {
    BShareVec empty = eq_public(p, downcast(total, kR32), std::vector<u64>(n, 0));
    BShareVec both = concat({&maj_bit, &empty});
    AShareVec arith = b2a(p, both, kR64);
    AShareVec maj = arith.slice(0, n), zn = arith.slice(n, n);
    AShareVec diff = sub(ctx.fallback, maj);
    out.labels = add(maj, mul(p, zn, diff));
    out.decision = out.labels;
    out.gamma = ctx.gamma;
    out.types = level_types(ctx);
    out.child_types = constant(p, n, kDummy);
    out.split = constant(p, n, 0);
    return out;
  }

  // P_j and Q_j for every (node, feature, value) lane.
  const std::size_t lanes = n * m * 2;
  std::vector<std::size_t> i0, i1, i2, it0, it1;
  const std::size_t width = 6 * m;
  for (std::size_t k = 0; k < n; ++k) {
    for (std::size_t f = 0; f < m; ++f) {
      for (unsigned j = 0; j < 2; ++j) {
        i0.push_back(k * width + counter_index(m, 0, f, j));
        i1.push_back(k * width + counter_index(m, 1, f, j));
        i2.push_back(k * width + counter_index(m, 2, f, j));
        it0.push_back(k * width + counter_index(m, 0, f, 0));
        it1.push_back(k * width + counter_index(m, 0, f, 1));
      }
    }
  }
  AShareVec c0 = gather(ctx.counters, i0), c1 = gather(ctx.counters, i1), c2 = gather(ctx.counters, i2);
  AShareVec tot = add(gather(ctx.counters, it0), gather(ctx.counters, it1));
  auto sq = mul_batch(p, {{&c0, &c0}, {&c1, &c1}, {&c2, &c2}, {&c0, &tot}});
  AShareVec P = sub(sub(sq[0], sq[1]), sq[2]);
  AShareVec Q = sq[3];
  if (const unsigned s = gini_scale(ctx.data->rows, cfg.tau); s > 0) {
    AShareVec scaled = truncate(p, concat({&P, &Q}), s);
    P = scaled.slice(0, lanes);
    Q = scaled.slice(lanes, lanes);
  }
  AShareVec p32 = downcast(P, kR32), q32 = downcast(Q, kR32);

  // Zero tests: psi0, psi1, total, available features, F = 1, Q.
  AShareVec used = available(ctx);
  AShareVec types = level_types(ctx);
  std::vector<u64> targets(5 * n, 0);
  std::fill(targets.begin() + static_cast<std::ptrdiff_t>(4 * n), targets.end(), kLeaf);
  targets.resize(5 * n + lanes, 0);
  AShareVec probe = concat({&psi0, &psi1, &total, &used, &types});
  AShareVec probe32 = downcast(probe, kR32);
  probe32.append(q32);
  BShareVec z = eq_public(p, probe32, targets);
  BShareVec z0 = z.slice(0, n), z1 = z.slice(n, n), zn = z.slice(2 * n, n), none = z.slice(3 * n, n);
  BShareVec cand = z.slice(4 * n, n), zq = z.slice(5 * n, lanes);

  // split = candidate and not (pure or empty or out of features).
  BShareVec nz0 = not_b(p, z0), nz1 = not_b(p, z1), nnone = not_b(p, none);
  BShareVec halves = and_b(p, concat({&cand, &nz1}), concat({&nz0, &nnone}));
  BShareVec split_bit = and_b(p, halves.slice(0, n), halves.slice(n, n));

  AShareVec arith = b2a(p, concat({&maj_bit, &zn, &split_bit, &zq}), kR64);
  AShareVec maj = arith.slice(0, n), zn_a = arith.slice(n, n), split = arith.slice(2 * n, n);
  AShareVec zq_a = downcast(arith.slice(3 * n, lanes), kR32);

  // Empty value branches divide by 1 and are then zeroed.
  AShareVec ratio = division(p, p32, add(q32, zq_a), cfg.tau);
  AShareVec diff = sub(ctx.fallback, maj);
  auto prods = mul_batch(p, {{&zn_a, &diff}, {&zq_a, &ratio}});
  out.labels = add(maj, prods[0]);
  AShareVec term = sub(ratio, prods[1]);
  AShareVec score(kR32, n * m);
  for (std::size_t k = 0; k < n * m; ++k) {
    score.a[k] = kR32.add(term.a[2 * k], term.a[2 * k + 1]);
    score.b[k] = kR32.add(term.b[2 * k], term.b[2 * k + 1]);
  }
  AShareVec best = argmin_masked(p, score, downcast(ctx.gamma, kR32), n, cfg.tau, kR64);

  std::vector<u64> fillers(n);
  for (std::size_t k = 0; k < n; ++k) fillers[k] = filler_feature(cfg.tree.seed, begin + k, m);
  AShareVec filler = public_a(p, kR64, fillers);
  AShareVec hit = b2a(p, eq_public(p, downcast(repeat_each(best, m), kR32), positions(n, m)), kR64);
  AShareVec split_rep = repeat_each(split, m);
  AShareVec moved = sub(best, filler);
  auto upd = mul_batch(p, {{&split, &moved}, {&hit, &split_rep}});
  out.decision = add(filler, upd[0]);
  out.gamma = sub(ctx.gamma, upd[1]);
  out.types = sub(types, split);
  out.child_types = linear(p, kR64.neg(1), split, kDummy);
  out.split = split;
  return out;
}

HcResult ohc_tee(Party& p, const TrainContext& ctx, const SecureTrainConfig& cfg) {
  if (!p.enclave_attached) throw ConfigError("the tee heuristic needs an enclave endpoint");
  PhaseScope scope(p.comm(), "hc_tee");
  EnclaveHeader h;
  h.op = EnclaveOp::kHeuristic;
  h.last = ctx.last;
  h.level = ctx.level;
  h.nodes = ctx.nodes();
  h.features = ctx.m;
  h.filler_seed = cfg.tree.seed;
  h.round = p.comm().rounds();
  std::optional<AeadKey> key;
  if (cfg.enclave_secret) key = enclave_key(*cfg.enclave_secret, p.id().index());
  AShareVec types = level_types(ctx);
  auto res = enclave_call(p.comm(), p.id().index(), h, {&ctx.counters, &ctx.gamma, &types, &ctx.fallback}, key,
                          p.local_prg());
  if (res.size() != 6) throw IntegrityError("enclave reply has the wrong number of outputs");
  HcResult out;
  out.decision = std::move(res[0]);
  out.gamma = std::move(res[1]);
  out.types = std::move(res[2]);
  out.child_types = std::move(res[3]);
  out.labels = std::move(res[4]);
  out.split = std::move(res[5]);
  return out;
}

void ons(Party& p, TrainContext& ctx, const HcResult& hc) {
  PhaseScope scope(p.comm(), "ons");
  const std::size_t n = ctx.nodes(), m = ctx.m, begin = ctx.level_begin();
  for (std::size_t k = 0; k < n; ++k) {
    ctx.T.a[begin + k] = hc.decision.a[k];
    ctx.T.b[begin + k] = hc.decision.b[k];
    ctx.F.a[begin + k] = hc.types.a[k];
    ctx.F.b[begin + k] = hc.types.b[k];
  }
  ctx.gamma = hc.gamma;
  if (ctx.last) return;

  AShareVec internal = b2a(p, eq_public(p, downcast(hc.types, kR32), std::vector<u64>(n, kInternal)), kR64);
  AShareVec keep = linear(p, kR64.neg(1), internal, 1);
  AShareVec kept = mul(p, repeat_each(keep, 6 * m), ctx.counters);
  ctx.counters = duplicate_blocks(kept, 6 * m);
  ctx.gamma = duplicate_blocks(hc.gamma, m);
  ctx.fallback = duplicate_blocks(hc.labels, 1);
  AShareVec child = duplicate_blocks(hc.child_types, 1);
  ctx.F.append(child);
  ctx.T.append(constant(p, 2 * n, 0));
  ++ctx.level;
}

SecureTree odtt(Party& p, const SharedDataset& data, const SecureTrainConfig& cfg) {
  PhaseScope scope(p.comm(), "train");
  TrainContext ctx = start_training(p, data, cfg);
  const unsigned levels = max_levels(cfg.tree, data.cols);
  if (levels == 0 || levels > kMaxDepth) throw ResourceError("unsupported tree depth " + std::to_string(levels));
  for (unsigned h = 0; h < levels; ++h) {
    PhaseScope level(p.comm(), "level" + std::to_string(h));
    ctx.last = h + 1 == levels;
    ol_partition(p, ctx, cfg);
    ol_count(p, ctx, cfg);
    HcResult hc = cfg.path == HcPath::kTee ? ohc_tee(p, ctx, cfg) : ohc_mpc(p, ctx, cfg);
    if (!ctx.last && cfg.tree.policy == DepthPolicy::kUntilNoSplit && !reveal_any(p, hc.split)) {
      ctx.last = true;
      hc.decision = hc.labels;
    }
    if (cfg.observe) {
      PhaseScope debug(p.comm(), "debug");
      LevelSnapshot snap;
      snap.level = h;
      snap.counters = reconstruct_a(p, ctx.counters);
      snap.gamma = reconstruct_a(p, ctx.gamma);
      for (u64 v : reconstruct_a(p, level_types(ctx))) snap.F.push_back(static_cast<std::uint8_t>(v));
      snap.decision = reconstruct_a(p, hc.decision);
      cfg.observe(p.id().index(), snap);
    }
    ons(p, ctx, hc);
    if (ctx.last) break;
  }
  SecureTree out;
  out.depth = ctx.level + 1;
  out.T = std::move(ctx.T);
  out.F = std::move(ctx.F);
  return out;
}

TreeState reveal_tree(Party& p, const SecureTree& t) {
  TreeState out;
  out.depth = t.depth;
  out.T = reconstruct_a(p, t.T);
  for (u64 v : reconstruct_a(p, t.F)) out.F.push_back(static_cast<std::uint8_t>(v));
  return out;
}

MaterialCounts training_material(std::size_t rows, std::size_t d, const SecureTrainConfig& cfg) {
  MaterialCounts c;
  const std::size_t m = d - 1;
  const unsigned levels = max_levels(cfg.tree, d);
  OaaOptions opt;
  opt.index_bits = 32;
  opt.max_lanes = cfg.max_lanes;
  for (unsigned h = 0; h < levels; ++h) {
    const bool last = h + 1 == levels;
    const std::size_t n = std::size_t{1} << h;
    if (h > 0) {
      add_counts(c, oaa_material(64, opt, 64, rows, n - 1));
      add_counts(c, oaa_material(64, opt, 64, rows, m));
    }
    add_counts(c, eq_material(32, rows * n + n));
    add_counts(c, b2a_material(64, rows * n + n));
    if (cfg.path == HcPath::kMpc) {
      add_counts(c, msb_material(32, n));
      if (last) {
        add_counts(c, eq_material(32, n));
        add_counts(c, b2a_material(64, 2 * n));
      } else {
        const std::size_t lanes = 2 * n * m;
        if (gini_scale(rows, cfg.tau) > 0) add_counts(c, trunc_material(64, 2 * lanes));
        add_counts(c, eq_material(32, 5 * n + lanes));
        add_counts(c, b2a_material(64, 3 * n + lanes));
        add_counts(c, division_material(32, cfg.tau, lanes));
        add_counts(c, argmin_material(32, 64, n, m));
        add_counts(c, eq_material(32, n * m));
        add_counts(c, b2a_material(64, n * m));
      }
    }
    if (!last) {
      if (cfg.tree.policy == DepthPolicy::kUntilNoSplit) add_counts(c, eq_material(32, 1));
      add_counts(c, eq_material(32, n));
      add_counts(c, b2a_material(64, n));
    }
  }
  return c;
}

}  // namespace otree
