#include <random>

#include "otree/errors.hpp"
#include "otree/oaa.hpp"
#include "support.hpp"

using namespace otree;
using otree::test::deal;
using otree::test::seeded;

TEST_CASE("oaa examples") {
  auto res = run_parties(seeded(1), [](Party& p) {
    const Ring r(32);
    auto a = reconstruct_a(p, oaa(p, deal(p, r, {10, 20, 30}), deal(p, r, {1, 0, 2, 3})));
    auto b = reconstruct_a(p, oaa(p, deal(p, r, {77}), deal(p, r, {0})));
    return std::pair{a, b};
  });
  CHECK(res.out[0].first == std::vector<u64>{20, 10, 30, 0});
  CHECK(res.out[0].second == std::vector<u64>{77});
}

TEST_CASE("every index of every array size up to 8 at l=8") {
  std::mt19937_64 rng(2);
  const Ring r(8);
  for (std::size_t m = 1; m <= 8; ++m) {
    for (int trial = 0; trial < 8; ++trial) {
      const auto w = otree::test::random_words(rng, m, 0xff);
      std::vector<u64> u(m);
      for (std::size_t k = 0; k < m; ++k) u[k] = k;
      auto res = run_parties(seeded(m * 100 + trial), [&](Party& p) {
        return reconstruct_a(p, oaa(p, deal(p, r, w), deal(p, r, u)));
      });
      CHECK(res.out[0] == w);
    }
  }
}

TEST_CASE("random lookups at l=32 with chunking") {
  std::mt19937_64 rng(3);
  const Ring r(32);
  const std::size_t m = 40, n = 1000;
  const auto w = otree::test::random_words(rng, m, r.mask());
  std::vector<u64> u(n);
  for (auto& v : u) v = rng() % m;
  OaaOptions small;
  small.max_lanes = 1000;
  auto res = run_parties(seeded(4), [&](Party& p) {
    AShareVec W = deal(p, r, w), U = deal(p, r, u);
    return std::pair{reconstruct_a(p, oaa(p, W, U)), reconstruct_a(p, oaa(p, W, U, small))};
  });
  for (std::size_t j = 0; j < n; ++j) {
    CHECK(res.out[0].first[j] == w[u[j]]);
    CHECK(res.out[0].second[j] == w[u[j]]);
  }
}

TEST_CASE("row lookups and narrowed index comparison") {
  std::mt19937_64 rng(5);
  const Ring r(64);
  const std::size_t width = 6, n = 200;
  const auto rows = otree::test::random_words(rng, width * n, r.mask());
  std::vector<u64> u(n);
  for (auto& v : u) v = rng() % width;
  OaaOptions narrow;
  narrow.index_bits = 16;
  auto res = run_parties(seeded(6), [&](Party& p) {
    AShareVec R = deal(p, r, rows), U = deal(p, r, u);
    return std::pair{reconstruct_a(p, oaa_rows(p, R, width, U)), reconstruct_a(p, oaa_rows(p, R, width, U, narrow))};
  });
  for (std::size_t j = 0; j < n; ++j) {
    CHECK(res.out[1].first[j] == rows[j * width + u[j]]);
    CHECK(res.out[1].second[j] == rows[j * width + u[j]]);
  }
}

TEST_CASE("oaa cost envelope at l=32") {
  const Ring r(32);
  const std::size_t m = 16, n = 100;
  auto res = run_parties(seeded(7), [&](Party& p) {
    AShareVec W = deal(p, r, std::vector<u64>(m, 1)), U = deal(p, r, std::vector<u64>(n, 3));
    const auto before = p.comm().rounds();
    oaa(p, W, U);
    return p.comm().rounds() - before;
  });
  const PhaseCost cost = res.trace.metrics().phase_total("oaa");
  const double bits_per_lookup = static_cast<double>(cost.bytes) * 8.0 / 3.0 / n;
  const double model = (4.0 * 32 - 1) * m;
  CHECK(bits_per_lookup <= 2 * model);
  CHECK(bits_per_lookup >= model / 2);
  CHECK(res.out[0] <= 5 + 3);
  CHECK(cost.rounds == res.out[0]);
}

TEST_CASE("oaa transcripts do not depend on the indices") {
  auto run = [](u64 salt) {
    std::mt19937_64 rng(salt);
    const Ring r(32);
    const auto w = otree::test::random_words(rng, 9, r.mask());
    std::vector<u64> u(30);
    for (auto& v : u) v = rng() % 9;
    return run_parties(seeded(salt), [&](Party& p) {
      oaa(p, deal(p, r, w), deal(p, r, u));
      return 0;
    }).trace.shape();
  };
  const auto base = run(1);
  for (u64 s = 2; s < 22; ++s) CHECK(run(s) == base);
}

TEST_CASE("a concatenated batch equals separate calls") {
  std::mt19937_64 rng(8);
  const Ring r(32);
  const auto w = otree::test::random_words(rng, 7, r.mask());
  const std::vector<u64> u1{0, 6, 3}, u2{5, 5};
  std::vector<u64> both = u1;
  both.insert(both.end(), u2.begin(), u2.end());
  auto res = run_parties(seeded(9), [&](Party& p) {
    AShareVec W = deal(p, r, w);
    auto a = reconstruct_a(p, oaa(p, W, deal(p, r, u1)));
    auto b = reconstruct_a(p, oaa(p, W, deal(p, r, u2)));
    a.insert(a.end(), b.begin(), b.end());
    return std::pair{a, reconstruct_a(p, oaa(p, W, deal(p, r, both)))};
  });
  CHECK(res.out[0].first == res.out[0].second);
}
