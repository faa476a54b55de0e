#include <random>

#include "harness.hpp"
#include "oracles.hpp"
#include "otree/errors.hpp"
#include "support.hpp"

using namespace otree;
using harness::secure_train;

namespace {

SecureTrainConfig config(HcPath path, unsigned depth, std::uint64_t seed) {
  SecureTrainConfig cfg;
  cfg.path = path;
  cfg.tree.depth = depth;
  cfg.tree.seed = seed;
  return cfg;
}

Dataset from_rows(const std::vector<std::vector<std::uint8_t>>& rows) {
  Dataset d;
  d.rows = rows.size();
  d.cols = rows[0].size();
  for (const auto& r : rows) d.cells.insert(d.cells.end(), r.begin(), r.end());
  return d;
}

}  // namespace

TEST_CASE("partition routes samples to the child their feature selects") {
  const Dataset d = from_rows({{0, 1, 0}, {1, 0, 1}, {1, 1, 0}, {0, 0, 1}});
  auto res = run_parties(harness::session(1, false), [&](Party& p) {
    SharedDataset data = harness::deal_dataset(p, d);
    SecureTrainConfig cfg;
    TrainContext ctx = start_training(p, data, cfg);
    ctx.level = 1;
    ctx.T = public_a(p, Ring(64), 3, 0);
    ctx.F = public_a(p, Ring(64), 3, kLeaf);
    ol_partition(p, ctx, cfg);
    auto first = reconstruct_a(p, ctx.member);
    // Root tests feature 1, both children test feature 0.
    ctx.member = public_a(p, Ring(64), 4, 0);
    ctx.T = public_a(p, Ring(64), std::vector<u64>{1, 0, 0, 0, 0, 0, 0});
    ol_partition(p, ctx, cfg);
    ctx.level = 2;
    ol_partition(p, ctx, cfg);
    return std::pair{first, reconstruct_a(p, ctx.member)};
  });
  CHECK(res.out[0].first == std::vector<u64>{1, 2, 2, 1});
  CHECK(res.out[0].second == std::vector<u64>{5, 4, 6, 3});
}

TEST_CASE("root counters match the counter array definition") {
  const Dataset d = from_rows({{0, 1, 0}, {1, 0, 1}, {1, 1, 0}, {0, 0, 1}, {1, 1, 1}});
  auto res = run_parties(harness::session(2, false), [&](Party& p) {
    SharedDataset data = harness::deal_dataset(p, d);
    SecureTrainConfig cfg;
    TrainContext ctx = start_training(p, data, cfg);
    ol_count(p, ctx, cfg);
    return reconstruct_a(p, ctx.counters);
  });
  const std::size_t m = 2;
  std::vector<u64> want = init_counters(3);
  for (std::size_t r = 0; r < d.rows; ++r) {
    for (std::size_t f = 0; f < m; ++f) {
      const unsigned v = d.at(r, f);
      ++want[counter_index(m, 0, f, v)];
      ++want[counter_index(m, 1 + d.label(r), f, v)];
    }
  }
  CHECK(res.out[0] == want);
}

TEST_CASE("counting with a tiny lane ceiling gives the same counters") {
  std::mt19937_64 rng(3);
  const Dataset d = harness::random_dataset(rng, 60, 5);
  for (std::size_t lanes : {std::size_t{1}, std::size_t{7}, std::size_t{1} << 20}) {
    SecureTrainConfig cfg = config(HcPath::kTee, 3, 9);
    cfg.max_lanes = lanes;
    const auto run = secure_train(d, cfg, 4);
    CHECK(run.tree == plaintext_train(d, cfg.tree));
  }
}

TEST_CASE("tee training equals the reference level by level") {
  std::mt19937_64 rng(5);
  for (int trial = 0; trial < 12; ++trial) {
    const std::size_t rows = 1 + rng() % 120, cols = 2 + rng() % 6;
    const unsigned depth = 1 + static_cast<unsigned>(rng() % 5);
    const Dataset d = harness::random_dataset(rng, rows, cols);
    const SecureTrainConfig cfg = config(HcPath::kTee, depth, rng());
    std::vector<LevelSnapshot> want;
    const TreeState plain = plaintext_train(d, cfg.tree, [&](const LevelSnapshot& s) { want.push_back(s); });
    const auto run = secure_train(d, cfg, 100 + trial, true);
    REQUIRE(run.tree == plain);
    REQUIRE(run.levels.size() == want.size());
    for (std::size_t h = 0; h < want.size(); ++h) {
      CHECK(run.levels[h].counters == want[h].counters);
      CHECK(run.levels[h].gamma == want[h].gamma);
      CHECK(run.levels[h].F == want[h].F);
      CHECK(run.levels[h].decision == want[h].decision);
    }
    validate_tree(run.tree, d.features());
  }
}

TEST_CASE("tee training over sealed enclave frames") {
  std::mt19937_64 rng(6);
  const Dataset d = harness::random_dataset(rng, 50, 5);
  SecureTrainConfig cfg = config(HcPath::kTee, 3, 17);
  cfg.enclave_secret = 0xfeedu;
  SessionConfig s;
  s.seed = 7;
  s.enclave = [](Comm& c, const std::atomic<bool>& done) {
    EnclaveOptions opt;
    opt.prg_seed = 3;
    opt.setup_secret = 0xfeedu;
    serve_enclave(c, done, opt);
  };
  auto res = run_parties(s, [&](Party& p) {
    SharedDataset data = harness::deal_dataset(p, d);
    return reveal_tree(p, odtt(p, data, cfg));
  });
  CHECK(res.out[0] == plaintext_train(d, cfg.tree));
}

TEST_CASE("depth policies match the reference") {
  std::mt19937_64 rng(8);
  for (int trial = 0; trial < 6; ++trial) {
    const Dataset d = harness::random_dataset(rng, 40 + rng() % 40, 3 + rng() % 3);
    for (DepthPolicy policy : {DepthPolicy::kUntilNoSplit, DepthPolicy::kFeatureCount}) {
      SecureTrainConfig cfg = config(HcPath::kTee, 0, rng());
      cfg.tree.policy = policy;
      const auto run = secure_train(d, cfg, 200 + trial);
      CHECK(run.tree == plaintext_train(d, cfg.tree));
    }
  }
}

TEST_CASE("a pure dataset gives a single-level tree under the stop policy") {
  const Dataset d = from_rows({{0, 1, 1}, {1, 0, 1}, {1, 1, 1}});
  SecureTrainConfig cfg = config(HcPath::kTee, 0, 1);
  cfg.tree.policy = DepthPolicy::kUntilNoSplit;
  const auto run = secure_train(d, cfg, 9);
  CHECK(run.tree.depth == 1);
  CHECK(run.tree.T == std::vector<u64>{1});
}

TEST_CASE("mpc training tracks the exact Gini choice") {
  std::mt19937_64 rng(10);
  const Rational gap(1, 128);
  std::size_t checked = 0;
  for (int trial = 0; trial < 4; ++trial) {
    const Dataset d = harness::random_dataset(rng, 80 + rng() % 80, 4 + rng() % 3);
    const SecureTrainConfig cfg = config(HcPath::kMpc, 4, rng());
    const auto run = secure_train(d, cfg, 300 + trial, true);
    validate_tree(run.tree, d.features());
    for (std::size_t h = 0; h + 1 < run.levels.size(); ++h) {
      const auto agree = oracle::split_agreement(run.levels[h], d.features(), gap);
      checked += agree.checked;
      CHECK(agree.mismatched == 0);
    }
    const TreeState plain = plaintext_train(d, cfg.tree);
    CHECK(accuracy(run.tree, d) >= accuracy(plain, d) - 0.04);
  }
  CHECK(checked > 0);
}

TEST_CASE("mpc training on clear-cut data equals the reference") {
  const Dataset d = synthetic_dataset(11, 128, 5, 2, 0.0);
  const SecureTrainConfig cfg = config(HcPath::kMpc, 3, 5);
  CHECK(secure_train(d, cfg, 12).tree == plaintext_train(d, cfg.tree));
}

TEST_CASE("training transcripts depend only on public sizes") {
  std::mt19937_64 rng(13);
  for (HcPath path : {HcPath::kMpc, HcPath::kTee}) {
    const SecureTrainConfig cfg = config(path, 3, 21);
    const Dataset a = harness::random_dataset(rng, 40, 4);
    const Dataset b = harness::random_dataset(rng, 40, 4);
    const auto ra = secure_train(a, cfg, 14), rb = secure_train(b, cfg, 15);
    CHECK(ra.trace.shape() == rb.trace.shape());
  }
}

TEST_CASE("material estimate equals consumption") {
  std::mt19937_64 rng(16);
  const Dataset d = harness::random_dataset(rng, 256, 6);
  for (HcPath path : {HcPath::kTee, HcPath::kMpc}) {
    const SecureTrainConfig cfg = config(path, 4, 3);
    const auto run = secure_train(d, cfg, 17);
    const MaterialCounts want = training_material(d.rows, d.cols, cfg);
    for (int p = 0; p < 3; ++p) CHECK(run.trace.consumed[static_cast<std::size_t>(p)] == want);
  }
}

TEST_CASE("configuration errors") {
  const Dataset d = from_rows({{0, 1}, {1, 0}});
  const SecureTrainConfig tee = config(HcPath::kTee, 2, 1);
  CHECK_THROWS_AS(run_parties(harness::session(1, false),
                              [&](Party& p) {
                                SharedDataset data = harness::deal_dataset(p, d);
                                return odtt(p, data, tee).depth;
                              }),
                  ConfigError);
  SecureTrainConfig cfg = config(HcPath::kMpc, 2, 1);
  cfg.tau = 30;
  CHECK_THROWS_AS(secure_train(d, cfg, 1), ConfigError);
  cfg = config(HcPath::kMpc, 31, 1);
  CHECK_THROWS_AS(secure_train(d, cfg, 1), ResourceError);
}
