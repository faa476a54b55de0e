#include "otree/oaa.hpp"

#include <algorithm>

#include "otree/errors.hpp"
#include "otree/gadgets.hpp"
#include "otree/rss.hpp"

namespace otree {

namespace {

// `row_of(j)` gives the offset of lookup j's row inside `table`.
template <typename RowOf>
AShareVec scan(Party& p, const AShareVec& table, std::size_t width, const AShareVec& u,
               const OaaOptions& opt, RowOf row_of) {
  const std::size_t n = u.size();
  if (width == 0) throw UsageError("oblivious access into an empty array");
  const unsigned bits = opt.index_bits == 0 ? u.ring.bits() : opt.index_bits;
  if (bits > u.ring.bits()) throw ConfigError("index comparison ring wider than the index ring");
  const Ring eq_ring(bits);
  const Ring& ring = table.ring;
  PhaseScope scope(p.comm(), "oaa");

  AShareVec out(ring, n);
  const std::size_t per_chunk = std::max<std::size_t>(1, opt.max_lanes / width);
  std::vector<u64> positions;
  for (std::size_t j0 = 0; j0 < n; j0 += per_chunk) {
    const std::size_t count = std::min(per_chunk, n - j0);
    const std::size_t lanes = count * width;
    AShareVec idx(eq_ring, lanes), vals(ring, lanes);
    positions.resize(lanes);
    for (std::size_t j = 0; j < count; ++j) {
      const u64 ua = eq_ring.reduce(u.a[j0 + j]), ub = eq_ring.reduce(u.b[j0 + j]);
      const std::size_t row = row_of(j0 + j);
      for (std::size_t k = 0; k < width; ++k) {
        const std::size_t lane = j * width + k;
        idx.a[lane] = ua;
        idx.b[lane] = ub;
        positions[lane] = k;
        vals.a[lane] = table.a[row + k];
        vals.b[lane] = table.b[row + k];
      }
    }
    AShareVec hit = b2a(p, eq_public(p, idx, positions), ring);
    AShareVec picked = mul(p, hit, vals);
    for (std::size_t j = 0; j < count; ++j) {
      u64 sa = 0, sb = 0;
      for (std::size_t k = 0; k < width; ++k) {
        sa += picked.a[j * width + k];
        sb += picked.b[j * width + k];
      }
      out.a[j0 + j] = ring.reduce(sa);
      out.b[j0 + j] = ring.reduce(sb);
    }
  }
  return out;
}

}  // namespace

AShareVec oaa(Party& p, const AShareVec& w, const AShareVec& u, const OaaOptions& opt) {
  return scan(p, w, w.size(), u, opt, [](std::size_t) { return std::size_t{0}; });
}

AShareVec oaa_rows(Party& p, const AShareVec& rows, std::size_t width, const AShareVec& u,
                   const OaaOptions& opt) {
  if (rows.size() != u.size() * width) throw UsageError("row table does not match the lookup count");
  return scan(p, rows, width, u, opt, [width](std::size_t j) { return j * width; });
}

MaterialCounts oaa_material(unsigned l, const OaaOptions& opt, unsigned index_l, std::size_t lookups,
                            std::size_t width) {
  MaterialCounts c;
  const unsigned bits = opt.index_bits == 0 ? index_l : opt.index_bits;
  add_counts(c, eq_material(bits, lookups * width));
  add_counts(c, b2a_material(l, lookups * width));
  return c;
}

}  // namespace otree
