#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <span>
#include <vector>

#include <boost/multiprecision/cpp_int.hpp>
#include <json.hpp>

#include "otree/dataset.hpp"
#include "otree/ring.hpp"

namespace otree {

using Rational = boost::multiprecision::cpp_rational;

enum NodeType : std::uint8_t { kInternal = 0, kLeaf = 1, kDummy = 2 };

// Complete binary tree in heap order: the children of node i are 2i+1 and 2i+2.
// Internal nodes hold a feature index, last-level nodes hold a label and
// leaf/dummy nodes above the last level hold a filler feature.
struct TreeState {
  unsigned depth = 0;
  std::vector<u64> T;
  std::vector<std::uint8_t> F;

  std::size_t size() const { return T.size(); }
  std::size_t level_begin(unsigned h) const { return (std::size_t{1} << h) - 1; }
  friend bool operator==(const TreeState&, const TreeState&) = default;
};

inline constexpr unsigned kMaxDepth = 30;

// |T| = 2^H - 1 with every F leaf-typed and T zeroed.
// Throws ResourceError when H exceeds kMaxDepth.
TreeState init_tree(unsigned depth);

// Counter array of one node: rows 0..2 of 2m columns, row-major.
// Row 0 counts samples per (feature, value), rows 1 and 2 split those by label.
std::vector<u64> init_counters(std::size_t d);
inline std::size_t counter_index(std::size_t m, std::size_t row, std::size_t feature, unsigned value) {
  return row * 2 * m + 2 * feature + value;
}

// Reduced Gini score of `feature`: sum over j of P_j / Q_j with
//   P_j = C[0][2i+j]^2 - C[1][2i+j]^2 - C[2][2i+j]^2
//   Q_j = C[0][2i+j] * (C[0][2i] + C[0][2i+1])
// A value with no samples contributes 0; a node with no samples scores 2.
Rational plaintext_gini(std::span<const u64> counters, std::size_t m, std::size_t feature);

// Public filler feature for a non-split node above the last level.
u64 filler_feature(std::uint64_t seed, std::size_t node, std::size_t m);

enum class DepthPolicy {
  kFixed,         // exactly `depth` levels
  kUntilNoSplit,  // stop after the first level where no node splits, at most d levels
  kFeatureCount,  // d levels
};

struct TrainOptions {
  DepthPolicy policy = DepthPolicy::kFixed;
  unsigned depth = 4;
  std::uint64_t seed = 1;
};

// Number of levels the policy allows for a dataset with d columns.
unsigned max_levels(const TrainOptions& opt, std::size_t d);

// Per-level state of the reference trainer, reported after each level's
// heuristic step and before the children are set up.
struct LevelSnapshot {
  unsigned level = 0;
  std::vector<u64> counters;    // n_h blocks of 3 * 2m
  std::vector<u64> gamma;       // n_h blocks of m, before the split clears a feature
  std::vector<std::uint8_t> F;  // level-h node types before the heuristic step
  std::vector<u64> decision;    // T entries written at this level
};

TreeState plaintext_train(const Dataset& data, const TrainOptions& opt,
                          const std::function<void(const LevelSnapshot&)>& observe = {});

// Follows 2i+1+x[T[i]] for depth-1 steps and returns the label found there.
// Throws IntegrityError on a feature index outside x.
u64 plaintext_infer(const TreeState& tree, std::span<const std::uint8_t> x);

// Throws IntegrityError describing the first violated structural rule.
void validate_tree(const TreeState& tree, std::size_t m);

nlohmann::json tree_to_json(const TreeState& tree);
TreeState tree_from_json(const nlohmann::json& j);
void write_tree_json(const std::filesystem::path& path, const TreeState& tree);
TreeState read_tree_json(const std::filesystem::path& path);

// Fraction of rows whose label the tree predicts.
double accuracy(const TreeState& tree, const Dataset& data);

}  // namespace otree
