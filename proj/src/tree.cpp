#include "otree/tree.hpp"

#include <fstream>
#include <new>
#include <string>

#include "otree/errors.hpp"
#include "otree/prg.hpp"

namespace otree {

TreeState init_tree(unsigned depth) {
  if (depth == 0) throw ConfigError("tree depth must be at least 1");
  if (depth > kMaxDepth) {
    throw ResourceError("tree depth " + std::to_string(depth) + " needs 2^" + std::to_string(depth) +
                        " - 1 nodes; the limit is depth " + std::to_string(kMaxDepth));
  }
  TreeState t;
  t.depth = depth;
  const std::size_t n = (std::size_t{1} << depth) - 1;
  try {
    t.T.assign(n, 0);
    t.F.assign(n, kLeaf);
  } catch (const std::bad_alloc&) {
    throw ResourceError("cannot allocate a tree of depth " + std::to_string(depth));
  }
  return t;
}

std::vector<u64> init_counters(std::size_t d) {
  if (d < 2) throw ConfigError("a dataset needs at least one feature and a label");
  return std::vector<u64>(3 * 2 * (d - 1), 0);
}

Rational plaintext_gini(std::span<const u64> c, std::size_t m, std::size_t feature) {
  const u64 total = c[counter_index(m, 0, feature, 0)] + c[counter_index(m, 0, feature, 1)];
  if (total == 0) return Rational(2);
  Rational sum(0);
  for (unsigned j = 0; j < 2; ++j) {
    const u64 n = c[counter_index(m, 0, feature, j)];
    if (n == 0) continue;
    const u64 n0 = c[counter_index(m, 1, feature, j)];
    const u64 n1 = c[counter_index(m, 2, feature, j)];
    using boost::multiprecision::cpp_int;
    const cpp_int p = cpp_int(n) * n - cpp_int(n0) * n0 - cpp_int(n1) * n1;
    const cpp_int q = cpp_int(n) * total;
    sum += Rational(p, q);
  }
  return sum;
}

u64 filler_feature(std::uint64_t seed, std::size_t node, std::size_t m) {
  Prg prg(derive_seed(seed, "filler", node));
  return prg.next() % m;
}

unsigned max_levels(const TrainOptions& opt, std::size_t d) {
  switch (opt.policy) {
    case DepthPolicy::kFixed:
      return opt.depth;
    case DepthPolicy::kUntilNoSplit:
    case DepthPolicy::kFeatureCount:
      return static_cast<unsigned>(d);
  }
  return opt.depth;
}

TreeState plaintext_train(const Dataset& data, const TrainOptions& opt,
                          const std::function<void(const LevelSnapshot&)>& observe) {
  const std::size_t m = data.features();
  if (m == 0) throw ConfigError("a dataset needs at least one feature and a label");
  const unsigned levels = max_levels(opt, data.cols);
  TreeState tree = init_tree(levels);
  const std::size_t width = 6 * m;

  std::vector<std::size_t> member(data.rows, 0);
  std::vector<u64> counters(width, 0);
  std::vector<u64> gamma(m, 1);
  std::vector<u64> fallback(1, 0);

  for (unsigned h = 0; h < levels; ++h) {
    const bool last = h + 1 == levels;
    const std::size_t begin = tree.level_begin(h);
    const std::size_t nodes = std::size_t{1} << h;

    if (h > 0) {
      for (std::size_t r = 0; r < data.rows; ++r) {
        member[r] = 2 * member[r] + 1 + data.at(r, tree.T[member[r]]);
      }
    }
    for (std::size_t k = 0; k < nodes; ++k) {
      if (tree.F[begin + k] == kLeaf) std::fill_n(counters.begin() + static_cast<std::ptrdiff_t>(k * width), width, 0);
    }
    for (std::size_t r = 0; r < data.rows; ++r) {
      const std::size_t k = member[r] - begin;
      if (tree.F[begin + k] != kLeaf) continue;
      u64* c = &counters[k * width];
      const unsigned y = data.label(r);
      for (std::size_t f = 0; f < m; ++f) {
        const unsigned v = data.at(r, f);
        ++c[counter_index(m, 0, f, v)];
        ++c[counter_index(m, 1 + y, f, v)];
      }
    }

    LevelSnapshot snap;
    if (observe) {
      snap.level = h;
      snap.counters = counters;
      snap.gamma = gamma;
      snap.F.assign(tree.F.begin() + static_cast<std::ptrdiff_t>(begin),
                    tree.F.begin() + static_cast<std::ptrdiff_t>(begin + nodes));
    }

    std::vector<u64> resolved(nodes);
    std::vector<bool> split(nodes, false);
    bool any_split = false;
    for (std::size_t k = 0; k < nodes; ++k) {
      const u64* c = &counters[k * width];
      const u64 psi0 = c[counter_index(m, 1, 0, 0)] + c[counter_index(m, 1, 0, 1)];
      const u64 psi1 = c[counter_index(m, 2, 0, 0)] + c[counter_index(m, 2, 0, 1)];
      resolved[k] = psi0 + psi1 == 0 ? fallback[k] : (psi0 < psi1 ? 1 : 0);
      if (last) {
        tree.T[begin + k] = resolved[k];
        continue;
      }
      u64 used = 0;
      for (std::size_t f = 0; f < m; ++f) used += gamma[k * m + f];
      const bool leaf = psi0 == 0 || psi1 == 0 || used == 0;
      if (tree.F[begin + k] == kLeaf && !leaf) {
        split[k] = any_split = true;
        std::size_t best = m;
        Rational best_score;
        for (std::size_t f = 0; f < m; ++f) {
          if (!gamma[k * m + f]) continue;
          Rational g = plaintext_gini(std::span<const u64>(c, width), m, f);
          if (best == m || g < best_score) {
            best = f;
            best_score = g;
          }
        }
        tree.T[begin + k] = best;
        tree.F[begin + k] = kInternal;
        gamma[k * m + best] = 0;
      } else {
        tree.T[begin + k] = filler_feature(opt.seed, begin + k, m);
      }
    }

    if (!last && opt.policy == DepthPolicy::kUntilNoSplit && !any_split) {
      for (std::size_t k = 0; k < nodes; ++k) tree.T[begin + k] = resolved[k];
      tree.depth = h + 1;
      tree.T.resize(begin + nodes);
      tree.F.resize(begin + nodes);
      if (observe) {
        snap.decision = resolved;
        observe(snap);
      }
      return tree;
    }
    if (observe) {
      snap.decision.assign(tree.T.begin() + static_cast<std::ptrdiff_t>(begin),
                           tree.T.begin() + static_cast<std::ptrdiff_t>(begin + nodes));
      observe(snap);
    }
    if (last) break;

    std::vector<u64> next_counters(2 * nodes * width, 0);
    std::vector<u64> next_gamma(2 * nodes * m);
    std::vector<u64> next_fallback(2 * nodes);
    const std::size_t child_begin = tree.level_begin(h + 1);
    for (std::size_t k = 0; k < nodes; ++k) {
      for (std::size_t s = 0; s < 2; ++s) {
        const std::size_t child = 2 * k + s;
        tree.F[child_begin + child] = split[k] ? kLeaf : kDummy;
        next_fallback[child] = resolved[k];
        std::copy_n(gamma.begin() + static_cast<std::ptrdiff_t>(k * m), m,
                    next_gamma.begin() + static_cast<std::ptrdiff_t>(child * m));
        if (!split[k]) {
          std::copy_n(counters.begin() + static_cast<std::ptrdiff_t>(k * width), width,
                      next_counters.begin() + static_cast<std::ptrdiff_t>(child * width));
        }
      }
    }
    counters = std::move(next_counters);
    gamma = std::move(next_gamma);
    fallback = std::move(next_fallback);
  }
  return tree;
}

u64 plaintext_infer(const TreeState& tree, std::span<const std::uint8_t> x) {
  if (tree.depth == 0 || tree.T.size() != (std::size_t{1} << tree.depth) - 1) {
    throw IntegrityError("tree arrays do not match its depth");
  }
  std::size_t i = 0;
  for (unsigned step = 0; step + 1 < tree.depth; ++step) {
    const u64 f = tree.T[i];
    if (f >= x.size()) {
      throw IntegrityError("node " + std::to_string(i) + " tests feature " + std::to_string(f) + " of " +
                           std::to_string(x.size()));
    }
    i = 2 * i + 1 + x[f];
  }
  return tree.T[i];
}

void validate_tree(const TreeState& tree, std::size_t m) {
  auto fail = [](std::size_t i, const std::string& what) {
    throw IntegrityError("node " + std::to_string(i) + ": " + what);
  };
  if (tree.depth == 0 || tree.depth > kMaxDepth) throw IntegrityError("invalid depth");
  const std::size_t n = (std::size_t{1} << tree.depth) - 1;
  if (tree.T.size() != n || tree.F.size() != n) throw IntegrityError("|T| or |F| differs from 2^H - 1");
  const std::size_t last_begin = tree.level_begin(tree.depth - 1);
  if (tree.F[0] == kDummy) fail(0, "root is a dummy");
  for (std::size_t i = 0; i < n; ++i) {
    if (tree.F[i] > kDummy) fail(i, "type " + std::to_string(tree.F[i]));
    if (i >= last_begin) {
      if (tree.F[i] == kInternal) fail(i, "internal node on the last level");
      if (tree.T[i] > 1) fail(i, "label " + std::to_string(tree.T[i]));
      continue;
    }
    if (tree.T[i] >= m) fail(i, "feature " + std::to_string(tree.T[i]) + " out of range");
    for (std::size_t c : {2 * i + 1, 2 * i + 2}) {
      if (tree.F[i] == kInternal && tree.F[c] == kDummy) fail(c, "dummy child of an internal node");
      if (tree.F[i] != kInternal && tree.F[c] != kDummy) fail(c, "non-dummy child of a leaf or dummy");
    }
  }
}

nlohmann::json tree_to_json(const TreeState& tree) {
  nlohmann::json j;
  j["depth"] = tree.depth;
  j["T"] = tree.T;
  std::vector<int> f(tree.F.begin(), tree.F.end());
  j["F"] = f;
  return j;
}

TreeState tree_from_json(const nlohmann::json& j) {
  TreeState t;
  try {
    t.depth = j.at("depth").get<unsigned>();
    t.T = j.at("T").get<std::vector<u64>>();
    for (int f : j.at("F").get<std::vector<int>>()) t.F.push_back(static_cast<std::uint8_t>(f));
  } catch (const nlohmann::json::exception& e) {
    throw IngestionError(std::string("malformed tree JSON: ") + e.what());
  }
  return t;
}

void write_tree_json(const std::filesystem::path& path, const TreeState& tree) {
  std::ofstream out(path);
  if (!out) throw IngestionError("cannot write " + path.string());
  out << tree_to_json(tree).dump() << '\n';
}

TreeState read_tree_json(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IngestionError("cannot open " + path.string());
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    throw IngestionError(std::string("malformed tree JSON: ") + e.what());
  }
  return tree_from_json(j);
}

double accuracy(const TreeState& tree, const Dataset& data) {
  if (data.rows == 0) return 0;
  std::size_t hits = 0;
  const auto x = data.feature_matrix();
  const std::size_t m = data.features();
  for (std::size_t r = 0; r < data.rows; ++r) {
    hits += plaintext_infer(tree, std::span<const std::uint8_t>(&x[r * m], m)) == data.label(r) ? 1 : 0;
  }
  return static_cast<double>(hits) / static_cast<double>(data.rows);
}

}  // namespace otree
