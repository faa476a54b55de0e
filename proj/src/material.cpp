#include "otree/material.hpp"

#include <algorithm>
#include <cstring>
#include <fstream>

#include "otree/errors.hpp"
#include "otree/prg.hpp"

namespace otree {

namespace {

constexpr char kMagic[4] = {'O', 'T', 'D', 'M'};
constexpr std::uint8_t kVersion = 1;

u64 width_mask(unsigned w) { return w >= 64 ? ~u64{0} : ((u64{1} << w) - 1); }

template <typename T>
void write_pod(std::ostream& os, T v) {
  os.write(reinterpret_cast<const char*>(&v), sizeof(T));
}

template <typename T>
T read_pod(std::istream& is) {
  T v{};
  is.read(reinterpret_cast<char*>(&v), sizeof(T));
  if (!is) throw IngestionError("truncated dealer material file");
  return v;
}

}  // namespace

std::string to_string(const MaterialKey& key) {
  std::string name;
  switch (key.kind) {
    case CorrelationKind::kEdaBit: name = "edabit"; break;
    case CorrelationKind::kDaBit: name = "dabit"; break;
    case CorrelationKind::kTruncBits: name = "truncbits"; break;
  }
  return name + "/" + std::to_string(key.width);
}

std::size_t words_per_item(const MaterialKey& key) {
  switch (key.kind) {
    case CorrelationKind::kEdaBit:
    case CorrelationKind::kDaBit: return 4;
    case CorrelationKind::kTruncBits: return 2 + 2 * std::size_t{key.width};
  }
  throw UsageError("unknown correlation kind");
}

void add_counts(MaterialCounts& into, const MaterialCounts& more) {
  for (const auto& [k, v] : more) into[k] += v;
}

std::vector<u64> MaterialSource::take(const MaterialKey& key, std::size_t n) {
  if (n == 0) return {};
  auto words = take_raw(key, n);
  consumed_[key] += n;
  return words;
}

EdaBits take_edabits(MaterialSource& src, const Ring& ring, std::size_t n) {
  const auto w = src.take({CorrelationKind::kEdaBit, ring.bits()}, n);
  EdaBits out{AShareVec(ring, n), BShareVec(ring.bits(), n)};
  for (std::size_t i = 0; i < n; ++i) {
    out.r.a[i] = w[4 * i];
    out.r.b[i] = w[4 * i + 1];
    out.bits.a[i] = w[4 * i + 2];
    out.bits.b[i] = w[4 * i + 3];
  }
  return out;
}

DaBits take_dabits(MaterialSource& src, const Ring& ring, std::size_t n) {
  const auto w = src.take({CorrelationKind::kDaBit, ring.bits()}, n);
  DaBits out{AShareVec(ring, n), BShareVec(1, n)};
  for (std::size_t i = 0; i < n; ++i) {
    out.r.a[i] = w[4 * i];
    out.r.b[i] = w[4 * i + 1];
    out.bit.a[i] = w[4 * i + 2];
    out.bit.b[i] = w[4 * i + 3];
  }
  return out;
}

TruncBits take_truncbits(MaterialSource& src, const Ring& ring, std::size_t n) {
  const MaterialKey key{CorrelationKind::kTruncBits, ring.bits()};
  const std::size_t per = words_per_item(key);
  const auto w = src.take(key, n);
  TruncBits out;
  out.bits = BShareVec(ring.bits(), n);
  out.bit_shares.assign(ring.bits(), AShareVec(ring, n));
  for (std::size_t i = 0; i < n; ++i) {
    const u64* item = w.data() + i * per;
    out.bits.a[i] = item[0];
    out.bits.b[i] = item[1];
    for (unsigned j = 0; j < ring.bits(); ++j) {
      out.bit_shares[j].a[i] = item[2 + 2 * j];
      out.bit_shares[j].b[i] = item[3 + 2 * j];
    }
  }
  return out;
}

struct Dealer::Streams {
  std::map<MaterialKey, Prg> prgs;
};

Dealer::Dealer(std::uint64_t seed) : seed_(seed), streams_(std::make_unique<Streams>()) {}
Dealer::~Dealer() = default;

void Dealer::generate(const MaterialKey& key, std::size_t n, std::array<std::vector<u64>, 3>& out) {
  auto it = streams_->prgs.find(key);
  if (it == streams_->prgs.end()) {
    const u64 code = (static_cast<u64>(key.kind) << 8) | key.width;
    it = streams_->prgs.emplace(key, Prg(derive_seed(seed_, "dealer", code))).first;
  }
  Prg& prg = it->second;
  const u64 mask = width_mask(key.width);
  const Ring ring(key.width);
  const std::size_t per = words_per_item(key);
  for (auto& v : out) v.reserve(v.size() + n * per);

  auto arith = [&](u64 secret, std::array<u64, 3>& s) {
    s[0] = prg.next() & mask;
    s[1] = prg.next() & mask;
    s[2] = ring.sub(ring.sub(secret, s[0]), s[1]);
  };
  auto boolean = [&](u64 secret, u64 m, std::array<u64, 3>& s) {
    s[0] = prg.next() & m;
    s[1] = prg.next() & m;
    s[2] = (secret ^ s[0] ^ s[1]) & m;
  };
  auto emit = [&](const std::array<u64, 3>& s) {
    for (int p = 0; p < 3; ++p) {
      out[p].push_back(s[p]);
      out[p].push_back(s[(p + 1) % 3]);
    }
  };

  std::array<u64, 3> s{};
  for (std::size_t i = 0; i < n; ++i) {
    switch (key.kind) {
      case CorrelationKind::kEdaBit: {
        const u64 r = prg.next() & mask;
        arith(r, s);
        emit(s);
        boolean(r, mask, s);
        emit(s);
        break;
      }
      case CorrelationKind::kDaBit: {
        const u64 bit = prg.next() & 1;
        arith(bit, s);
        emit(s);
        boolean(bit, 1, s);
        emit(s);
        break;
      }
      case CorrelationKind::kTruncBits: {
        const u64 r = prg.next() & mask;
        boolean(r, mask, s);
        emit(s);
        for (unsigned j = 0; j < key.width; ++j) {
          arith((r >> j) & 1, s);
          emit(s);
        }
        break;
      }
    }
  }
}

namespace {

class LazySource : public MaterialSource {
 public:
  LazySource(std::shared_ptr<LazyDealer> dealer, int party) : dealer_(std::move(dealer)), party_(party) {}

 protected:
  std::vector<u64> take_raw(const MaterialKey& key, std::size_t n) override {
    return dealer_->take(party_, key, n);
  }

 private:
  std::shared_ptr<LazyDealer> dealer_;
  int party_;
};

}  // namespace

std::unique_ptr<MaterialSource> LazyDealer::source(int party) {
  if (party < 0 || party >= 3) throw UsageError("party index out of range");
  return std::make_unique<LazySource>(shared_from_this(), party);
}

std::vector<u64> LazyDealer::take(int party, const MaterialKey& key, std::size_t n) {
  std::lock_guard lock(mu_);
  Queue& q = queues_[key];
  const std::size_t per = words_per_item(key);
  const std::size_t need = q.offset[party] + n * per;
  if (q.words[party].size() < need) {
    const std::size_t missing = (need - q.words[party].size()) / per;
    dealer_.generate(key, missing, q.words);
  }
  auto begin = q.words[party].begin() + static_cast<std::ptrdiff_t>(q.offset[party]);
  std::vector<u64> out(begin, begin + static_cast<std::ptrdiff_t>(n * per));
  q.offset[party] += n * per;

  // Drop the prefix every party has consumed.
  const std::size_t low = *std::min_element(q.offset.begin(), q.offset.end());
  if (low > (1u << 20) && low * 2 > q.words[0].size()) {
    for (int p = 0; p < 3; ++p) {
      q.words[p].erase(q.words[p].begin(), q.words[p].begin() + static_cast<std::ptrdiff_t>(low));
      q.offset[p] -= low;
    }
  }
  return out;
}

FileMaterialSource::FileMaterialSource(const std::filesystem::path& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw IngestionError("cannot open dealer material file " + path.string());
  char magic[4];
  is.read(magic, 4);
  if (!is || std::memcmp(magic, kMagic, 4) != 0) throw IngestionError("bad dealer material magic");
  if (read_pod<std::uint8_t>(is) != kVersion) throw IngestionError("unsupported material version");
  party_ = read_pod<std::uint8_t>(is);
  (void)read_pod<std::uint16_t>(is);
  const auto sections = read_pod<std::uint32_t>(is);
  std::vector<std::pair<MaterialKey, u64>> order;
  for (std::uint32_t s = 0; s < sections; ++s) {
    const auto kind = read_pod<std::uint8_t>(is);
    const auto width = read_pod<std::uint8_t>(is);
    (void)read_pod<std::uint16_t>(is);
    const auto count = read_pod<std::uint64_t>(is);
    if (kind > 2 || width == 0 || width > 64) throw IngestionError("bad material section header");
    MaterialKey key{static_cast<CorrelationKind>(kind), width};
    order.emplace_back(key, count);
    available_[key] = count;
  }
  for (const auto& [key, count] : order) {
    auto& words = words_[key];
    words.resize(count * words_per_item(key));
    is.read(reinterpret_cast<char*>(words.data()), static_cast<std::streamsize>(words.size() * 8));
    if (!is) throw IngestionError("truncated dealer material payload");
    offset_[key] = 0;
  }
}

std::vector<u64> FileMaterialSource::take_raw(const MaterialKey& key, std::size_t n) {
  auto it = words_.find(key);
  const std::size_t per = words_per_item(key);
  const std::size_t have = it == words_.end() ? 0 : (it->second.size() - offset_[key]) / per;
  if (have < n) {
    throw PreprocessingError("dealer material exhausted for " + to_string(key) + ": need " +
                             std::to_string(n) + ", have " + std::to_string(have));
  }
  auto begin = it->second.begin() + static_cast<std::ptrdiff_t>(offset_[key]);
  std::vector<u64> out(begin, begin + static_cast<std::ptrdiff_t>(n * per));
  offset_[key] += n * per;
  return out;
}

void write_material_files(const MaterialCounts& counts, std::uint64_t seed,
                          const std::array<std::filesystem::path, 3>& paths) {
  std::array<std::ofstream, 3> files;
  for (int p = 0; p < 3; ++p) {
    files[p].open(paths[p], std::ios::binary | std::ios::trunc);
    if (!files[p]) throw IngestionError("cannot write dealer material file " + paths[p].string());
    files[p].write(kMagic, 4);
    write_pod<std::uint8_t>(files[p], kVersion);
    write_pod<std::uint8_t>(files[p], static_cast<std::uint8_t>(p));
    write_pod<std::uint16_t>(files[p], 0);
    std::uint32_t sections = 0;
    for (const auto& [k, c] : counts) sections += c > 0 ? 1 : 0;
    write_pod<std::uint32_t>(files[p], sections);
    for (const auto& [k, c] : counts) {
      if (c == 0) continue;
      write_pod<std::uint8_t>(files[p], static_cast<std::uint8_t>(k.kind));
      write_pod<std::uint8_t>(files[p], static_cast<std::uint8_t>(k.width));
      write_pod<std::uint16_t>(files[p], 0);
      write_pod<std::uint64_t>(files[p], c);
    }
  }
  Dealer dealer(seed);
  constexpr std::size_t kChunk = 1 << 16;
  for (const auto& [key, count] : counts) {
    for (u64 done = 0; done < count;) {
      const std::size_t n = static_cast<std::size_t>(std::min<u64>(kChunk, count - done));
      std::array<std::vector<u64>, 3> words;
      dealer.generate(key, n, words);
      for (int p = 0; p < 3; ++p) {
        files[p].write(reinterpret_cast<const char*>(words[p].data()),
                       static_cast<std::streamsize>(words[p].size() * 8));
      }
      done += n;
    }
  }
  for (auto& f : files) {
    f.flush();
    if (!f) throw IngestionError("failed writing dealer material");
  }
}

}  // namespace otree
