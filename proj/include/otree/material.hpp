#pragma once

#include <array>
#include <compare>
#include <cstdint>
#include <filesystem>
#include <map>
#include <memory>
#include <mutex>
#include <string>
#include <vector>

#include "otree/shares.hpp"

namespace otree {

// Correlated randomness consumed by the online gadgets.
//   EdaBit    random r in Z_{2^w}, shared arithmetically and as w boolean bits
//   DaBit     random bit, shared in Z_{2^w} and as one boolean bit
//   TruncBits random r in Z_{2^w} as boolean bits plus arithmetic shares of each
//             bit, so floor(r / 2^k) is available locally for any public k
enum class CorrelationKind : std::uint8_t { kEdaBit = 0, kDaBit = 1, kTruncBits = 2 };

struct MaterialKey {
  CorrelationKind kind;
  unsigned width;
  friend auto operator<=>(const MaterialKey&, const MaterialKey&) = default;
};

std::string to_string(const MaterialKey& key);
std::size_t words_per_item(const MaterialKey& key);

using MaterialCounts = std::map<MaterialKey, std::uint64_t>;

void add_counts(MaterialCounts& into, const MaterialCounts& more);

struct EdaBits {
  AShareVec r;
  BShareVec bits;
};

struct DaBits {
  AShareVec r;
  BShareVec bit;
};

struct TruncBits {
  BShareVec bits;
  // bit_shares[j] holds arithmetic shares of bit j of every item.
  std::vector<AShareVec> bit_shares;
};

// One party's sequential view of the dealer's correlations.
class MaterialSource {
 public:
  virtual ~MaterialSource() = default;

  // n items of `key`, each words_per_item(key) words of this party's shares.
  std::vector<u64> take(const MaterialKey& key, std::size_t n);
  const MaterialCounts& consumed() const { return consumed_; }

 protected:
  virtual std::vector<u64> take_raw(const MaterialKey& key, std::size_t n) = 0;

 private:
  MaterialCounts consumed_;
};

EdaBits take_edabits(MaterialSource& src, const Ring& ring, std::size_t n);
DaBits take_dabits(MaterialSource& src, const Ring& ring, std::size_t n);
TruncBits take_truncbits(MaterialSource& src, const Ring& ring, std::size_t n);

// Trusted dealer: deterministic generation of all three parties' shares of
// each correlation, independently per key, from one seed.
class Dealer {
 public:
  explicit Dealer(std::uint64_t seed);
  ~Dealer();
  Dealer(const Dealer&) = delete;
  Dealer& operator=(const Dealer&) = delete;

  // Appends n fresh items to out[p] for p = 0, 1, 2.
  void generate(const MaterialKey& key, std::size_t n, std::array<std::vector<u64>, 3>& out);

 private:
  struct Streams;
  std::uint64_t seed_;
  std::unique_ptr<Streams> streams_;
};

// Dealer shared by the three in-process engines; generates on demand so tests
// need no consumption estimate.
class LazyDealer : public std::enable_shared_from_this<LazyDealer> {
 public:
  explicit LazyDealer(std::uint64_t seed) : dealer_(seed) {}
  std::unique_ptr<MaterialSource> source(int party);
  std::vector<u64> take(int party, const MaterialKey& key, std::size_t n);

 private:
  struct Queue {
    std::array<std::vector<u64>, 3> words;
    std::array<std::size_t, 3> offset{0, 0, 0};
  };
  std::mutex mu_;
  Dealer dealer_;
  std::map<MaterialKey, Queue> queues_;
};

// Material loaded from one party's dealer file.
class FileMaterialSource : public MaterialSource {
 public:
  explicit FileMaterialSource(const std::filesystem::path& path);
  int party() const { return party_; }
  const MaterialCounts& available() const { return available_; }

 protected:
  std::vector<u64> take_raw(const MaterialKey& key, std::size_t n) override;

 private:
  int party_ = 0;
  MaterialCounts available_;
  std::map<MaterialKey, std::vector<u64>> words_;
  std::map<MaterialKey, std::size_t> offset_;
};

// Writes one file per party holding `counts` items of each key.
void write_material_files(const MaterialCounts& counts, std::uint64_t seed,
                          const std::array<std::filesystem::path, 3>& paths);

}  // namespace otree
