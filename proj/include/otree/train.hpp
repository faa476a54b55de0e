#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <optional>

#include "otree/enclave.hpp"
#include "otree/material.hpp"
#include "otree/oaa.hpp"
#include "otree/party.hpp"
#include "otree/shares.hpp"
#include "otree/tree.hpp"

namespace otree {

// Shares of an N x d binary dataset in Z_{2^64}, row-major, label last.
struct SharedDataset {
  AShareVec cells;
  std::size_t rows = 0;
  std::size_t cols = 0;
  std::size_t features() const { return cols - 1; }
};

enum class HcPath { kMpc, kTee };

struct SecureTrainConfig {
  TrainOptions tree;
  HcPath path = HcPath::kTee;
  unsigned tau = kDefaultPrecision;
  // Lane ceiling shared by the scans and the per-node membership tests.
  std::size_t max_lanes = std::size_t{1} << 20;
  // Seals enclave frames with a key derived from this secret when set.
  std::optional<std::uint64_t> enclave_secret;
  // Test hook: reconstructs each level's state and reports it. Costs extra rounds.
  std::function<void(int party, const LevelSnapshot&)> observe;
};

// Shared tree plus the number of levels actually trained.
struct SecureTree {
  unsigned depth = 0;
  AShareVec T;
  AShareVec F;
};

// Everything the level-wise protocols read and update. All shares are in Z_{2^64}.
struct TrainContext {
  const SharedDataset* data = nullptr;
  std::size_t m = 0;
  unsigned level = 0;
  bool last = false;
  AShareVec T;         // heap prefix through the current level
  AShareVec F;
  AShareVec member;    // M: heap index of each sample's node
  AShareVec counters;  // n_h blocks of 3 x 2m
  AShareVec gamma;     // n_h blocks of m
  AShareVec fallback;  // per-node label used when the node is empty
  AShareVec x;         // N x m feature columns
  AShareVec y;         // N labels
  AShareVec xy;        // x[i][k] * y[i], computed once

  std::size_t nodes() const { return std::size_t{1} << level; }
  std::size_t level_begin() const { return nodes() - 1; }
};

// Outputs of the heuristic step for the current level (see HeuristicOutput).
struct HcResult {
  AShareVec decision;
  AShareVec gamma;
  AShareVec types;
  AShareVec child_types;
  AShareVec labels;
  AShareVec split;
};

// Sets up level 0: M = 0, T = 0, F = [1], empty counters, all features available.
TrainContext start_training(Party& p, const SharedDataset& data, const SecureTrainConfig& cfg);

// M = 2M + D[i][T[M]] + 1 through two oblivious scans. Skipped at level 0.
void ol_partition(Party& p, TrainContext& ctx, const SecureTrainConfig& cfg);
// Adds every sample's masked contribution to the counters of the level's candidate nodes.
void ol_count(Party& p, TrainContext& ctx, const SecureTrainConfig& cfg);
HcResult ohc_mpc(Party& p, const TrainContext& ctx, const SecureTrainConfig& cfg);
HcResult ohc_tee(Party& p, const TrainContext& ctx, const SecureTrainConfig& cfg);
// Writes the level's decisions and types, then sets up the next level's
// counters (zero below internal nodes, inherited otherwise), masks and labels.
void ons(Party& p, TrainContext& ctx, const HcResult& hc);

// Level-wise driver. With the tee path the reconstructed tree equals plaintext_train.
SecureTree odtt(Party& p, const SharedDataset& data, const SecureTrainConfig& cfg);

// Reconstructs a shared tree; every party learns it.
TreeState reveal_tree(Party& p, const SecureTree& t);

// Exact dealer material odtt consumes for the fixed-depth policy.
MaterialCounts training_material(std::size_t rows, std::size_t d, const SecureTrainConfig& cfg);

}  // namespace otree
