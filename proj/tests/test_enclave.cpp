#include <random>

#include "oracles.hpp"
#include "otree/enclave.hpp"
#include "otree/errors.hpp"
#include "otree/share_file.hpp"
#include "support.hpp"

using namespace otree;

namespace {

// Counters of one node holding `rows` random samples over m features.
std::vector<u64> node_counters(std::mt19937_64& rng, std::size_t m, std::size_t rows) {
  std::vector<u64> c(6 * m, 0);
  const double bias = std::uniform_real_distribution<double>(0.0, 1.0)(rng);
  for (std::size_t r = 0; r < rows; ++r) {
    const unsigned y = std::bernoulli_distribution(bias)(rng);
    for (std::size_t f = 0; f < m; ++f) {
      const unsigned v = rng() & 1;
      ++c[counter_index(m, 0, f, v)];
      ++c[counter_index(m, 1 + y, f, v)];
    }
  }
  return c;
}

}  // namespace

TEST_CASE("share file round trip") {
  ShareFile f;
  f.party = 2;
  f.width = 32;
  f.rows = 2;
  f.cols = 3;
  f.a = {1, 2, 3, 4, 5, 0xffffffff};
  f.b = {6, 5, 4, 3, 2, 1};
  const ShareFile g = decode_share_file(encode_share_file(f));
  CHECK(g.party == 2);
  CHECK(g.width == 32);
  CHECK(g.rows == 2);
  CHECK(g.cols == 3);
  CHECK(g.a == f.a);
  CHECK(g.b == f.b);
  CHECK_THROWS_AS(g.boolean(), IngestionError);
}

TEST_CASE("malformed share files are rejected") {
  ShareFile f;
  f.rows = 2;
  f.a = {1, 2};
  f.b = {3, 4};
  const Bytes good = encode_share_file(f);
  Bytes bad = good;
  bad[0] = 'X';
  CHECK_THROWS_AS(decode_share_file(bad), IngestionError);
  bad = good;
  bad.pop_back();
  CHECK_THROWS_AS(decode_share_file(bad), IngestionError);
  bad = good;
  bad[6] = 3;
  CHECK_THROWS_AS(decode_share_file(bad), IngestionError);
  f.width = 8;
  f.a = {1, 256};
  CHECK_THROWS_AS(decode_share_file(encode_share_file(f)), IngestionError);
}

TEST_CASE("sealed frames open only with the right key") {
  const AeadKey k0 = enclave_key(42, 0), k1 = enclave_key(42, 1);
  CHECK(k0 != k1);
  CHECK(enclave_key(42, 0) == k0);
  const Bytes msg{1, 2, 3, 4, 5};
  const std::array<std::uint8_t, 12> nonce{};
  Bytes frame = seal(k0, nonce, msg);
  CHECK(frame.size() == msg.size() + 28);
  CHECK(unseal(k0, frame) == msg);
  CHECK_THROWS_AS(unseal(k1, frame), IntegrityError);
  frame[14] ^= 1;
  CHECK_THROWS_AS(unseal(k0, frame), IntegrityError);
  CHECK_THROWS_AS(unseal(k0, Bytes(10, 0)), IntegrityError);
}

TEST_CASE("header round trip") {
  EnclaveHeader h;
  h.op = EnclaveOp::kShutdown;
  h.last = true;
  h.level = 3;
  h.nodes = 8;
  h.features = 5;
  h.filler_seed = 99;
  h.round = 1234;
  std::size_t pos = 0;
  const Bytes b = encode_header(h);
  const EnclaveHeader g = decode_header(b, pos);
  CHECK(pos == b.size());
  CHECK(encode_header(g) == b);
}

TEST_CASE("mask primitives") {
  CHECK(oselect(true, 5, 9) == 5);
  CHECK(oselect(false, 5, 9) == 9);
  CHECK(oless(1, 3, 1, 2));
  CHECK_FALSE(oless(1, 2, 1, 2));
  CHECK_FALSE(oless(2, 3, 1, 2));
}

TEST_CASE("heuristic picks the exact Gini minimiser") {
  std::mt19937_64 rng(1);
  for (int trial = 0; trial < 2000; ++trial) {
    const std::size_t m = 1 + rng() % 6, n = std::size_t{1} << (rng() % 3);
    HeuristicInput in;
    in.level = static_cast<unsigned>(std::countr_zero(n));
    in.nodes = n;
    in.features = m;
    in.filler_seed = rng();
    for (std::size_t k = 0; k < n; ++k) {
      const auto c = node_counters(rng, m, rng() % 4 == 0 ? rng() % 3 : rng() % 200);
      in.counters.insert(in.counters.end(), c.begin(), c.end());
      for (std::size_t f = 0; f < m; ++f) in.gamma.push_back(rng() % 3 != 0);
      in.types.push_back(rng() % 3);
      in.fallback.push_back(rng() & 1);
    }
    const HeuristicOutput out = oblivious_heuristic(in);
    for (std::size_t k = 0; k < n; ++k) {
      const u64* c = &in.counters[k * 6 * m];
      const u64 n0 = c[2 * m] + c[2 * m + 1], n1 = c[4 * m] + c[4 * m + 1];
      const u64 label = n0 + n1 == 0 ? in.fallback[k] : (n0 < n1 ? 1 : 0);
      CHECK(out.labels[k] == label);
      std::size_t best = m;
      Rational best_g(3);
      for (std::size_t f = 0; f < m; ++f) {
        if (!in.gamma[k * m + f]) continue;
        const u64 counts[2][2] = {{c[2 * m + 2 * f], c[4 * m + 2 * f]}, {c[2 * m + 2 * f + 1], c[4 * m + 2 * f + 1]}};
        const Rational g = oracle::direct_gini(counts);
        if (g < best_g) {
          best_g = g;
          best = f;
        }
      }
      const bool split = in.types[k] == kLeaf && n0 > 0 && n1 > 0 && best < m;
      REQUIRE(out.split[k] == split);
      const std::size_t node = n - 1 + k;
      CHECK(out.decision[k] == (split ? best : filler_feature(in.filler_seed, node, m)));
      CHECK(out.types[k] == (split ? u64{kInternal} : in.types[k]));
      CHECK(out.child_types[k] == (split ? u64{kLeaf} : u64{kDummy}));
      for (std::size_t f = 0; f < m; ++f) {
        CHECK(out.gamma[k * m + f] == ((split && f == best) ? 0 : in.gamma[k * m + f]));
      }
    }
  }
}

TEST_CASE("last level writes labels") {
  HeuristicInput in;
  in.nodes = 2;
  in.level = 1;
  in.features = 1;
  in.last = true;
  in.counters = {3, 1, 1, 1, 2, 0, 0, 0, 0, 0, 0, 0};
  in.gamma = {1, 1};
  in.types = {1, 2};
  in.fallback = {0, 1};
  const HeuristicOutput out = oblivious_heuristic(in);
  CHECK(out.decision == std::vector<u64>{0, 1});
  CHECK(out.split == std::vector<u64>{0, 0});
  CHECK_THROWS_AS(oblivious_heuristic(HeuristicInput{}), IntegrityError);
}
