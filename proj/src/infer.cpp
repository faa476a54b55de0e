#include "otree/infer.hpp"

#include "otree/errors.hpp"
#include "otree/oaa.hpp"
#include "otree/rss.hpp"

namespace otree {

namespace {

OaaOptions scan_options(const InferOptions& opt) {
  OaaOptions o;
  o.index_bits = 32;
  o.max_lanes = opt.max_lanes;
  return o;
}

}  // namespace

AShareVec odti(Party& p, const AShareVec& tree, const AShareVec& queries, std::size_t features, unsigned depth,
               const InferOptions& opt) {
  if (depth == 0 || depth > 30) throw ConfigError("tree depth must be in [1, 30]");
  if (tree.size() != (std::size_t{1} << depth) - 1) throw ConfigError("tree size does not match its depth");
  if (features == 0 || queries.size() % features != 0) throw ConfigError("query shares do not match the feature count");
  if (tree.ring.bits() != 64 || queries.ring.bits() != 64) throw ConfigError("tree and query shares must be in Z_2^64");
  if (opt.max_lanes == 0) throw ConfigError("lane ceiling must be positive");
  PhaseScope scope(p.comm(), "infer");
  const std::size_t n = queries.size() / features;
  const OaaOptions o = scan_options(opt);
  AShareVec idx = public_a(p, tree.ring, n, 0);
  AShareVec val;
  for (unsigned h = 0; h < depth; ++h) {
    // Indices of level h lie below 2^{h+1} - 1.
    val = oaa(p, tree.slice(0, (std::size_t{2} << h) - 1), idx, o);
    if (h + 1 == depth) break;
    AShareVec bit = oaa_rows(p, queries, features, val, o);
    idx = linear(p, 1, add(linear(p, 2, idx, 0), bit), 1);
  }
  return val;
}

MaterialCounts inference_material(std::size_t queries, std::size_t features, unsigned depth,
                                  const InferOptions& opt) {
  MaterialCounts c;
  const OaaOptions o = scan_options(opt);
  for (unsigned h = 0; h < depth; ++h) {
    add_counts(c, oaa_material(64, o, 64, queries, (std::size_t{2} << h) - 1));
    if (h + 1 < depth) add_counts(c, oaa_material(64, o, 64, queries, features));
  }
  return c;
}

}  // namespace otree
