#include <algorithm>
#include <cmath>
#include <random>

#include "otree/errors.hpp"
#include "otree/gadgets.hpp"
#include "support.hpp"

using namespace otree;
using otree::test::deal;
using otree::test::deal_b;
using otree::test::seeded;

namespace {

// All (x, y) pairs at l=8, x-major.
std::pair<std::vector<u64>, std::vector<u64>> all_pairs() {
  std::vector<u64> xs, ys;
  for (u64 x = 0; x < 256; ++x) {
    for (u64 y = 0; y < 256; ++y) {
      xs.push_back(x);
      ys.push_back(y);
    }
  }
  return {xs, ys};
}

}  // namespace

TEST_CASE("eq examples") {
  auto res = run_parties(seeded(1), [](Party& p) {
    const Ring r(32);
    AShareVec x = deal(p, r, {5, 5, 0, 1u << 31});
    AShareVec y = deal(p, r, {5, 6, 0, 0});
    std::vector<u64> c{5, 4, 1, 1u << 31};
    return std::pair{reconstruct_b(p, eq(p, x, y)), reconstruct_b(p, eq_public(p, x, c))};
  });
  CHECK(res.out[0].first == std::vector<u64>{1, 0, 1, 0});
  CHECK(res.out[0].second == std::vector<u64>{1, 0, 0, 1});
}

TEST_CASE("eq and lt are exact over all l=8 pairs") {
  const auto [xs, ys] = all_pairs();
  auto res = run_parties(seeded(2), [&](Party& p) {
    const Ring r(8);
    AShareVec x = deal(p, r, xs), y = deal(p, r, ys);
    return std::array{reconstruct_b(p, eq(p, x, y)), reconstruct_b(p, lt(p, x, y)),
                      reconstruct_b(p, lt_public(p, x, ys))};
  });
  std::size_t bad_eq = 0, bad_lt = 0, bad_ltp = 0;
  for (std::size_t k = 0; k < xs.size(); ++k) {
    bad_eq += res.out[0][0][k] != (xs[k] == ys[k] ? 1u : 0u);
    bad_lt += res.out[0][1][k] != (xs[k] < ys[k] ? 1u : 0u);
    bad_ltp += res.out[0][2][k] != (xs[k] < ys[k] ? 1u : 0u);
  }
  CHECK(bad_eq == 0);
  CHECK(bad_lt == 0);
  CHECK(bad_ltp == 0);
}

TEST_CASE("bounded lt and msb on random operands at l=32") {
  std::mt19937_64 rng(3);
  const Ring r(32);
  const auto xs = otree::test::random_words(rng, 2000, 0x7fffffff);
  auto ys = otree::test::random_words(rng, 2000, 0x7fffffff);
  ys[0] = xs[0];
  auto res = run_parties(seeded(4), [&](Party& p) {
    AShareVec x = deal(p, r, xs), y = deal(p, r, ys);
    return std::array{reconstruct_b(p, lt_bounded(p, x, y)), reconstruct_b(p, lt_bounded_public(p, x, ys)),
                      reconstruct_b(p, msb(p, sub(x, y)))};
  });
  for (std::size_t k = 0; k < xs.size(); ++k) {
    const u64 want = xs[k] < ys[k] ? 1 : 0;
    CHECK(res.out[1][0][k] == want);
    CHECK(res.out[1][1][k] == want);
    CHECK(res.out[1][2][k] == want);
  }
}

TEST_CASE("eq cost stays within the 2l-1 envelope") {
  const std::size_t n = 100;
  auto res = run_parties(seeded(5), [&](Party& p) {
    AShareVec x = deal(p, Ring(32), std::vector<u64>(n, 9));
    const auto start = p.comm().rounds();
    PhaseScope scope(p.comm(), "probe");
    eq_public(p, x, std::vector<u64>(n, 9));
    return p.comm().rounds() - start;
  });
  const PhaseCost cost = res.trace.metrics().phase_total("probe");
  const double bits_per_party = static_cast<double>(cost.bytes) * 8.0 / 3.0 / n;
  CHECK(bits_per_party <= 2.0 * (2 * 32 - 1));
  // The final one-bit round is padded to whole bytes.
  CHECK(bits_per_party <= 2 * 32 - 1 + 8.0 / n);
  CHECK(res.out[0] <= 5 + 1);
}

TEST_CASE("b2a round trip") {
  std::mt19937_64 rng(6);
  const auto bits = otree::test::random_words(rng, 1000, 1);
  auto res = run_parties(seeded(7), [&](Party& p) {
    BShareVec b = deal_b(p, 1, bits);
    return std::pair{reconstruct_a(p, b2a(p, b, Ring(64))), reconstruct_a(p, b2a(p, b, Ring(8)))};
  });
  CHECK(res.out[0].first == bits);
  CHECK(res.out[0].second == bits);
}

TEST_CASE("select_share is an element-wise mux") {
  std::mt19937_64 rng(8);
  const Ring r(8);
  const std::size_t n = 500;
  const auto w1 = otree::test::random_words(rng, n, 0xff);
  const auto w2 = otree::test::random_words(rng, n, 0xff);
  const auto sel = otree::test::random_words(rng, n, 1);
  auto res = run_parties(seeded(9), [&](Party& p) {
    AShareVec a = deal(p, r, w1), b = deal(p, r, w2);
    BShareVec zeros = public_b(p, 1, n, 0), ones = public_b(p, 1, n, 1);
    return std::array{reconstruct_a(p, select_share(p, a, b, zeros)), reconstruct_a(p, select_share(p, a, b, ones)),
                      reconstruct_a(p, select_share(p, a, b, deal_b(p, 1, sel)))};
  });
  CHECK(res.out[2][0] == w1);
  CHECK(res.out[2][1] == w2);
  for (std::size_t k = 0; k < n; ++k) CHECK(res.out[2][2][k] == (sel[k] ? w2[k] : w1[k]));
}

TEST_CASE("truncation examples and error bound") {
  std::mt19937_64 rng(10);
  const Ring r(32);
  std::vector<u64> xs{2048, 0};
  std::vector<i64> signed_vals{2048, 0};
  std::uniform_int_distribution<i64> dist(-(i64{1} << 29), (i64{1} << 29) - 1);
  for (int i = 0; i < 10000; ++i) {
    const i64 v = dist(rng);
    signed_vals.push_back(v);
    xs.push_back(r.from_signed(v));
  }
  std::vector<unsigned> ks(xs.size());
  for (std::size_t k = 0; k < ks.size(); ++k) ks[k] = k < 2 ? 10 : static_cast<unsigned>(rng() % 30);
  auto res = run_parties(seeded(11), [&](Party& p) {
    AShareVec x = deal(p, r, xs);
    const auto before = p.comm().rounds();
    AShareVec t = truncate(p, x, ks);
    const auto used = p.comm().rounds() - before;
    return std::pair{used, reconstruct_a(p, t)};
  });
  CHECK(res.out[0].first == 1);
  const auto& got = res.out[0].second;
  CHECK((got[0] == 2 || got[0] == 3));
  CHECK((got[1] == 0 || got[1] == 1));
  std::size_t bad = 0;
  for (std::size_t k = 0; k < xs.size(); ++k) {
    const i64 want = signed_vals[k] >> ks[k];  // floor division
    const i64 diff = r.to_signed(got[k]) - want;
    bad += (diff < 0 || diff > 1) ? 1 : 0;
  }
  CHECK(bad == 0);
}

TEST_CASE("division examples") {
  auto res = run_parties(seeded(12), [](Party& p) {
    const Ring r(32);
    AShareVec num = deal(p, r, {1, 1, 355, 0, 1, (1u << 20) - 1, 7});
    AShareVec den = deal(p, r, {1, 2, 113, 5, (1u << 20) - 1, 1, 7});
    return reconstruct_a(p, division(p, num, den, 10));
  });
  const auto& got = res.out[0];
  auto near = [](u64 v, double want, double tol) { return std::fabs(static_cast<double>(v) - want) <= tol; };
  CHECK(near(got[0], 1024, 1));
  CHECK(near(got[1], 512, 1));
  CHECK(near(got[2], std::round(355.0 / 113.0 * 1024), 4));
  CHECK(got[3] == 0);
  CHECK(near(got[4], 0, 1));
  CHECK(near(got[5], ((1u << 20) - 1) * 1024.0, ((1u << 20) - 1) * 1024.0 / 256));
  CHECK(near(got[6], 1024, 1));
}

TEST_CASE("division error on random operands") {
  std::mt19937_64 rng(13);
  const Ring r(32);
  const std::size_t n = 2000;
  std::vector<u64> ps(n), qs(n);
  for (std::size_t k = 0; k < n; ++k) {
    // Mix magnitudes so every exponent difference is exercised.
    ps[k] = rng() & ((u64{1} << (rng() % 21)) - 1);
    qs[k] = 1 + (rng() & ((u64{1} << (rng() % 21)) - 1));
    qs[k] = std::min<u64>(qs[k], (1u << 20) - 1);
  }
  auto res = run_parties(seeded(14), [&](Party& p) {
    return reconstruct_a(p, division(p, deal(p, r, ps), deal(p, r, qs), 10));
  });
  std::size_t bad = 0;
  for (std::size_t k = 0; k < n; ++k) {
    const double exact = static_cast<double>(ps[k]) / static_cast<double>(qs[k]);
    const double err = std::fabs(static_cast<double>(res.out[0][k]) / 1024.0 - exact);
    // Relative error 2^-8 plus one output ulp.
    bad += err > exact * std::ldexp(1.0, -8) + std::ldexp(1.0, -10) ? 1 : 0;
  }
  CHECK(bad == 0);
}

TEST_CASE("division parameters") {
  const auto dp = division_params(32, 10);
  CHECK(dp.bound_bits == 20);
  CHECK(dp.frac_bits == 14);
  CHECK(dp.iterations == 6);
  CHECK_THROWS_AS(division_params(12, 8), ConfigError);
}

TEST_CASE("argmin examples") {
  auto res = run_parties(seeded(15), [](Party& p) {
    const Ring r(32);
    AShareVec scores = deal(p, r, {3, 1, 2, 1, 1, 5, 4, 9, 0, 7, 7, 7});
    AShareVec mask = deal(p, r, {1, 1, 1, 1, 1, 1, 1, 1, 0, 0, 0, 0});
    return reconstruct_a(p, argmin_masked(p, scores, mask, 4, 10, Ring(64)));
  });
  CHECK(res.out[0] == std::vector<u64>{1, 0, 0, 0});
}

TEST_CASE("argmin is exhaustively correct for up to four features at l=8") {
  const Ring r(8);
  for (std::size_t m = 1; m <= 4; ++m) {
    std::vector<u64> scores, mask;
    std::vector<u64> want;
    std::size_t combos = 1;
    for (std::size_t i = 0; i < m; ++i) combos *= 4;
    for (std::size_t sc = 0; sc < combos; ++sc) {
      for (u64 mk = 1; mk < (u64{1} << m); ++mk) {
        std::size_t best = 0;
        u64 best_score = ~u64{0};
        std::size_t code = sc;
        for (std::size_t i = 0; i < m; ++i) {
          const u64 s = code % 4;
          code /= 4;
          const u64 on = (mk >> i) & 1;
          scores.push_back(s);
          mask.push_back(on);
          if (on && s < best_score) {
            best_score = s;
            best = i;
          }
        }
        want.push_back(best);
      }
    }
    const std::size_t groups = want.size();
    auto res = run_parties(seeded(16 + m), [&](Party& p) {
      return reconstruct_a(p, argmin_masked(p, deal(p, r, scores), deal(p, r, mask), groups, 3, Ring(8)));
    });
    CHECK(res.out[0] == want);
  }
}

TEST_CASE("gadget transcripts depend only on public sizes") {
  auto run = [](std::uint64_t seed, u64 salt) {
    std::mt19937_64 rng(salt);
    const Ring r(32);
    const auto a = otree::test::random_words(rng, 16, 0xfffff);
    const auto b = otree::test::random_words(rng, 16, 0xfffff);
    auto res = run_parties(seeded(seed), [&](Party& p) {
      AShareVec x = deal(p, r, a), y = deal(p, r, b);
      AShareVec q = linear(p, 1, y, 1);
      eq(p, x, y);
      lt(p, x, y);
      truncate(p, x, 3);
      division(p, x, q, 10);
      argmin_masked(p, x, b2a(p, lt_bounded(p, x, y), r), 4, 10, Ring(64));
      return 0;
    });
    return res.trace.shape();
  };
  const auto base = run(1, 100);
  for (u64 salt = 101; salt < 104; ++salt) CHECK(run(salt, salt) == base);
}
