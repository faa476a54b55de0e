#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <span>

#include "otree/dataset.hpp"
#include "otree/infer.hpp"
#include "otree/material.hpp"
#include "otree/share_file.hpp"
#include "otree/train.hpp"

namespace otree {

// Replicated Z_{2^64} sharing of a matrix of public shape; file p holds (x_p, x_{p+1}).
std::array<ShareFile, 3> share_matrix(std::span<const u64> values, std::size_t rows, std::size_t cols,
                                      std::uint64_t seed);
std::array<ShareFile, 3> share_dataset(const Dataset& d, std::uint64_t seed);
// Query features only; any label column is dropped by the caller.
std::array<ShareFile, 3> share_queries(const Dataset& d, std::uint64_t seed);

// Plaintext matrix behind three share files; checks replication.
std::vector<u64> reconstruct_files(const std::array<ShareFile, 3>& files);

// One party's view of a dataset share file as training input.
SharedDataset load_shared_dataset(const ShareFile& f);

// Exact counts for training on N_D x d followed by inference on N_I queries.
struct Workload {
  std::size_t train_rows = 0;
  std::size_t cols = 0;
  std::size_t queries = 0;
  SecureTrainConfig train;
  InferOptions infer;
};
MaterialCounts estimate_material(const Workload& w);

// Writes one dealer file per party.
void gen_material(const MaterialCounts& counts, std::uint64_t seed, const std::array<std::filesystem::path, 3>& paths);

}  // namespace otree
