#include <random>
#include <sstream>

#include <doctest.h>

#include "oracles.hpp"
#include "otree/dataset.hpp"
#include "otree/errors.hpp"
#include "otree/tree.hpp"

using namespace otree;

namespace {

Dataset from_rows(const std::vector<std::vector<std::uint8_t>>& rows) {
  Dataset d;
  d.rows = rows.size();
  d.cols = rows.front().size();
  for (const auto& r : rows) d.cells.insert(d.cells.end(), r.begin(), r.end());
  return d;
}

TrainOptions fixed(unsigned depth, std::uint64_t seed = 1) {
  TrainOptions o;
  o.depth = depth;
  o.seed = seed;
  return o;
}

}  // namespace

TEST_CASE("init_tree and init_counters sizes") {
  CHECK(init_tree(3).T.size() == 7);
  CHECK(init_tree(1).T.size() == 1);
  CHECK(init_tree(1).F[0] == kLeaf);
  CHECK(init_counters(3).size() == 3 * 4);
  CHECK_THROWS_AS(init_tree(kMaxDepth + 1), ResourceError);
  CHECK_THROWS_AS(init_tree(0), ConfigError);
}

TEST_CASE("gini examples") {
  const std::size_t m = 1;
  std::vector<u64> c = init_counters(2);
  // value 0 -> label 0 twice, value 1 -> label 1 three times
  c[counter_index(m, 0, 0, 0)] = 2;
  c[counter_index(m, 1, 0, 0)] = 2;
  c[counter_index(m, 0, 0, 1)] = 3;
  c[counter_index(m, 2, 0, 1)] = 3;
  CHECK(plaintext_gini(c, m, 0) == 0);

  std::vector<u64> half = init_counters(2);
  half[counter_index(m, 0, 0, 0)] = 2;
  half[counter_index(m, 1, 0, 0)] = 1;
  half[counter_index(m, 2, 0, 0)] = 1;
  CHECK(plaintext_gini(half, m, 0) == Rational(1, 2));

  CHECK(plaintext_gini(init_counters(2), m, 0) == 2);
}

TEST_CASE("reduced gini equals the direct definition on random counters") {
  std::mt19937_64 rng(17);
  const std::size_t m = 3;
  for (int trial = 0; trial < 10000; ++trial) {
    std::vector<u64> c = init_counters(m + 1);
    const u64 cap = trial < 100 ? 4 : 256;
    std::uint64_t raw[2][2];
    const std::size_t f = rng() % m;
    for (int j = 0; j < 2; ++j) {
      for (int k = 0; k < 2; ++k) {
        raw[j][k] = rng() % cap;
        c[counter_index(m, 1 + k, f, j)] = raw[j][k];
      }
      c[counter_index(m, 0, f, j)] = raw[j][0] + raw[j][1];
    }
    REQUIRE(plaintext_gini(c, m, f) == oracle::direct_gini(raw));
  }
}

TEST_CASE("a single perfectly predictive feature gives a one-split tree") {
  const Dataset d = from_rows({{0, 0}, {1, 1}, {0, 0}, {1, 1}, {1, 1}});
  for (auto policy : {DepthPolicy::kFixed, DepthPolicy::kUntilNoSplit, DepthPolicy::kFeatureCount}) {
    TrainOptions o = fixed(2);
    o.policy = policy;
    const TreeState t = plaintext_train(d, o);
    CHECK(t.depth == 2);
    CHECK(t.T == std::vector<u64>{0, 0, 1});
    CHECK(t.F == std::vector<std::uint8_t>{kInternal, kLeaf, kLeaf});
  }
}

TEST_CASE("a single-label dataset gives a root leaf over dummies") {
  const Dataset d = from_rows({{0, 1, 1}, {1, 0, 1}, {1, 1, 1}});
  const TreeState t = plaintext_train(d, fixed(3));
  CHECK(t.F == std::vector<std::uint8_t>{kLeaf, kDummy, kDummy, kDummy, kDummy, kDummy, kDummy});
  for (std::size_t i = 3; i < 7; ++i) CHECK(t.T[i] == 1);
  validate_tree(t, 2);

  TrainOptions stop;
  stop.policy = DepthPolicy::kUntilNoSplit;
  const TreeState s = plaintext_train(d, stop);
  CHECK(s.depth == 1);
  CHECK(s.T == std::vector<u64>{1});
}

TEST_CASE("feature-count policy trains d levels") {
  const Dataset d = synthetic_dataset(3, 100, 4, 2, 0.1);
  TrainOptions o;
  o.policy = DepthPolicy::kFeatureCount;
  CHECK(plaintext_train(d, o).depth == 5);
}

TEST_CASE("level-wise trainer agrees with the recursive trainer") {
  std::mt19937_64 rng(5);
  for (int trial = 0; trial < 200; ++trial) {
    const std::size_t features = 1 + rng() % 7;
    const std::size_t rows = 1 + rng() % 300;
    const unsigned depth = 1 + static_cast<unsigned>(rng() % 5);
    const Dataset d = synthetic_dataset(rng(), rows, features, 1 + static_cast<unsigned>(rng() % 3), 0.1);
    const std::uint64_t seed = rng();
    const TreeState level = plaintext_train(d, fixed(depth, seed));
    const TreeState rec = oracle::RecursiveTrainer(d, depth, seed).run();
    REQUIRE(level == rec);
    validate_tree(level, features);
  }
}

TEST_CASE("stop-when-no-split trees are prefixes of the capped fixed-depth tree") {
  std::mt19937_64 rng(6);
  for (int trial = 0; trial < 50; ++trial) {
    const std::size_t features = 1 + rng() % 6;
    const Dataset d = synthetic_dataset(rng(), 50 + rng() % 200, features, 2, 0.05);
    TrainOptions stop;
    stop.policy = DepthPolicy::kUntilNoSplit;
    stop.seed = 9;
    const TreeState s = plaintext_train(d, stop);
    validate_tree(s, features);
    const TreeState full = plaintext_train(d, fixed(s.depth, 9));
    CHECK(s == full);
    // One more level would not have split anything.
    if (s.depth < d.cols) {
      const TreeState deeper = plaintext_train(d, fixed(s.depth + 1, 9));
      for (std::size_t i = s.level_begin(s.depth - 1); i < s.size(); ++i) CHECK(deeper.F[i] != kInternal);
    }
  }
}

TEST_CASE("training is deterministic") {
  const Dataset d = synthetic_dataset(8, 300, 6, 3, 0.1);
  CHECK(plaintext_train(d, fixed(4, 77)) == plaintext_train(d, fixed(4, 77)));
}

TEST_CASE("golden tree for the pinned 200 x 6 dataset") {
  const Dataset d = read_csv(std::string(OTREE_TEST_DATA) + "/golden_200x6.csv");
  CHECK(d.rows == 200);
  CHECK(d.cols == 6);
  const TreeState golden = read_tree_json(std::string(OTREE_TEST_DATA) + "/golden_200x6_h4.json");
  CHECK(plaintext_train(d, fixed(4, 2024)) == golden);
}

TEST_CASE("inference examples") {
  TreeState one = init_tree(2);
  one.T = {1, 0, 1};
  one.F = {kInternal, kLeaf, kLeaf};
  const std::vector<std::uint8_t> left{1, 0}, right{0, 1};
  CHECK(plaintext_infer(one, left) == 0);
  CHECK(plaintext_infer(one, right) == 1);

  // Root tests s1, its left child is a leaf padded with dummies, its right child tests s2.
  TreeState fig = init_tree(3);
  fig.T = {1, 0, 2, 0, 0, 1, 0};
  fig.F = {kInternal, kLeaf, kInternal, kDummy, kDummy, kLeaf, kLeaf};
  validate_tree(fig, 3);
  CHECK(plaintext_infer(fig, std::vector<std::uint8_t>{0, 0, 1}) == 0);
  CHECK(plaintext_infer(fig, std::vector<std::uint8_t>{1, 0, 1}) == 0);
  CHECK(plaintext_infer(fig, std::vector<std::uint8_t>{0, 1, 0}) == 1);
  CHECK(plaintext_infer(fig, std::vector<std::uint8_t>{1, 1, 1}) == 0);
}

TEST_CASE("inference agrees with recursive traversal exhaustively") {
  std::mt19937_64 rng(10);
  for (int trial = 0; trial < 60; ++trial) {
    const std::size_t m = 1 + rng() % 6;
    const unsigned depth = 1 + static_cast<unsigned>(rng() % 6);
    const TreeState t = oracle::random_tree(rng, depth, m);
    validate_tree(t, m);
    const oracle::Node root = oracle::build_nodes(t, 0, 0);
    for (std::size_t bits = 0; bits < (std::size_t{1} << m); ++bits) {
      std::vector<std::uint8_t> x(m);
      for (std::size_t j = 0; j < m; ++j) x[j] = (bits >> j) & 1;
      REQUIRE(plaintext_infer(t, x) == oracle::walk(root, x));
    }
  }
}

TEST_CASE("malformed trees are rejected") {
  TreeState t = init_tree(2);
  t.T = {5, 0, 1};
  t.F = {kInternal, kLeaf, kLeaf};
  CHECK_THROWS_AS(plaintext_infer(t, std::vector<std::uint8_t>{0, 1}), IntegrityError);
  CHECK_THROWS_AS(validate_tree(t, 2), IntegrityError);

  TreeState u = init_tree(2);
  u.T = {0, 0, 1};
  u.F = {kLeaf, kLeaf, kDummy};
  CHECK_THROWS_AS(validate_tree(u, 2), IntegrityError);
  u.F = {kInternal, kInternal, kLeaf};
  CHECK_THROWS_AS(validate_tree(u, 2), IntegrityError);
  u.F = {kInternal, kLeaf, kLeaf};
  u.T = {0, 2, 1};
  CHECK_THROWS_AS(validate_tree(u, 2), IntegrityError);
  u.T = {0, 0};
  CHECK_THROWS_AS(validate_tree(u, 2), IntegrityError);
}

TEST_CASE("csv ingestion") {
  std::istringstream with_header("a,b,y\n0,1,1\n1,1,0\n");
  const Dataset d = parse_csv(with_header);
  CHECK(d.rows == 2);
  CHECK(d.names == std::vector<std::string>{"a", "b", "y"});
  CHECK(d.label(0) == 1);

  std::istringstream plain("0,1\n1,0\n\n1,1\n");
  CHECK(parse_csv(plain).rows == 3);

  std::istringstream bad("0,1,1\n1,2,0\n");
  try {
    parse_csv(bad);
    FAIL("expected an ingestion error");
  } catch (const IngestionError& e) {
    CHECK(std::string(e.what()).find("row 2 col 2") != std::string::npos);
  }
  std::istringstream ragged("0,1,1\n1,0\n");
  CHECK_THROWS_AS(parse_csv(ragged), IngestionError);

  std::ostringstream out;
  const Dataset spect = spect_like(1);
  write_csv(out, spect);
  std::istringstream back(out.str());
  const Dataset again = parse_csv(back);
  CHECK(again.rows == 267);
  CHECK(again.cols == 23);
  CHECK(again.cells == spect.cells);
}

TEST_CASE("synthetic generators") {
  const Dataset s = spect_like(4);
  std::size_t pos = 0;
  for (std::size_t r = 0; r < s.rows; ++r) pos += s.label(r);
  CHECK(pos > 180);
  CHECK(pos < 240);
  const Dataset a = adult_like(4);
  CHECK(a.rows == 48842);
  CHECK(a.cols == 14);
  auto [train, test] = split_dataset(s, 0.8, 3);
  CHECK(train.rows == 214);
  CHECK(test.rows == 53);
}

TEST_CASE("binarize one-hot encodes categories and thresholds numbers") {
  std::istringstream in("age,color,y\n30,red,no\n50,blue,yes\n40,red,no\n");
  const Dataset d = binarize_csv(in, {});
  CHECK(d.names == std::vector<std::string>{"age>40.000000", "color=red", "color=blue", "y"});
  CHECK(d.cells == std::vector<std::uint8_t>{0, 1, 0, 0, 1, 0, 1, 1, 0, 1, 0, 0});
}

TEST_CASE("tree json round trip") {
  const Dataset d = synthetic_dataset(11, 120, 5, 2, 0.1);
  const TreeState t = plaintext_train(d, fixed(3));
  CHECK(tree_from_json(nlohmann::json::parse(tree_to_json(t).dump())) == t);
  CHECK_THROWS_AS(tree_from_json(nlohmann::json::parse("{\"depth\": 2}")), IngestionError);
}
