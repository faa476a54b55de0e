#pragma once

#include <cstddef>

#include "otree/material.hpp"
#include "otree/party.hpp"
#include "otree/shares.hpp"

namespace otree {

struct InferOptions {
  // Ceiling on eq lanes in flight per scan.
  std::size_t max_lanes = std::size_t{1} << 20;
};

// Labels for N_I queries (row-major, `features` columns) against a shared heap
// tree of `depth` levels, all in Z_{2^64}. Runs exactly `depth` iterations of two scans.
AShareVec odti(Party& p, const AShareVec& tree, const AShareVec& queries, std::size_t features, unsigned depth,
               const InferOptions& opt = {});

MaterialCounts inference_material(std::size_t queries, std::size_t features, unsigned depth,
                                  const InferOptions& opt = {});

}  // namespace otree
