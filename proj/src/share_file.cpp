#include "otree/share_file.hpp"

#include <cstring>
#include <fstream>
#include <iterator>

#include "otree/errors.hpp"

namespace otree {

namespace {

constexpr char kMagic[4] = {'O', 'T', 'S', 'H'};
constexpr std::uint16_t kVersion = 1;
constexpr std::size_t kHeaderBytes = 4 + 2 + 1 + 1 + 1 + 3 + 8 * 3;

void put(Bytes& out, u64 v, int n) {
  for (int i = 0; i < n; ++i) out.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
}

u64 get(const Bytes& in, std::size_t& pos, int n) {
  u64 v = 0;
  for (int i = 0; i < n; ++i) v |= u64{in[pos + static_cast<std::size_t>(i)]} << (8 * i);
  pos += static_cast<std::size_t>(n);
  return v;
}

}  // namespace

ShareFile ShareFile::from(int party, const AShareVec& s, std::size_t rows, std::size_t cols) {
  if (rows * cols != s.size()) throw UsageError("share file shape does not match the share count");
  ShareFile f;
  f.party = party;
  f.type = SharingType::kArithmetic;
  f.width = s.ring.bits();
  f.rows = rows;
  f.cols = cols;
  f.a = s.a;
  f.b = s.b;
  return f;
}

ShareFile ShareFile::from(int party, const BShareVec& s, std::size_t rows, std::size_t cols) {
  if (rows * cols != s.size()) throw UsageError("share file shape does not match the share count");
  ShareFile f;
  f.party = party;
  f.type = SharingType::kBoolean;
  f.width = s.width;
  f.rows = rows;
  f.cols = cols;
  f.a = s.a;
  f.b = s.b;
  return f;
}

AShareVec ShareFile::arithmetic() const {
  if (type != SharingType::kArithmetic) throw IngestionError("share file holds boolean shares");
  AShareVec s(Ring(width), 0);
  s.a = a;
  s.b = b;
  return s;
}

BShareVec ShareFile::boolean() const {
  if (type != SharingType::kBoolean) throw IngestionError("share file holds arithmetic shares");
  BShareVec s(width, 0);
  s.a = a;
  s.b = b;
  return s;
}

Bytes encode_share_file(const ShareFile& f) {
  if (f.a.size() != f.b.size() || f.a.size() != f.rows * f.cols) {
    throw UsageError("share file components do not match its shape");
  }
  Bytes out;
  out.reserve(kHeaderBytes + 16 * f.a.size());
  out.insert(out.end(), std::begin(kMagic), std::end(kMagic));
  put(out, kVersion, 2);
  put(out, static_cast<u64>(f.party), 1);
  put(out, static_cast<u64>(f.type), 1);
  put(out, f.width, 1);
  put(out, 0, 3);
  put(out, f.rows, 8);
  put(out, f.cols, 8);
  put(out, f.a.size(), 8);
  for (std::size_t k = 0; k < f.a.size(); ++k) {
    put(out, f.a[k], 8);
    put(out, f.b[k], 8);
  }
  return out;
}

ShareFile decode_share_file(const Bytes& in) {
  if (in.size() < kHeaderBytes || std::memcmp(in.data(), kMagic, 4) != 0) {
    throw IngestionError("not a share file");
  }
  std::size_t pos = 4;
  if (get(in, pos, 2) != kVersion) throw IngestionError("unsupported share file version");
  ShareFile f;
  f.party = static_cast<int>(get(in, pos, 1));
  const u64 type = get(in, pos, 1);
  f.width = static_cast<unsigned>(get(in, pos, 1));
  pos += 3;
  f.rows = get(in, pos, 8);
  f.cols = get(in, pos, 8);
  const u64 count = get(in, pos, 8);
  if (f.party > 2 || type > 1 || f.width == 0 || f.width > 64) throw IngestionError("bad share file header");
  f.type = static_cast<SharingType>(type);
  if (f.cols != 0 && f.rows > count / f.cols) throw IngestionError("share file shape exceeds its count");
  if (f.rows * f.cols != count || (in.size() - kHeaderBytes) / 16 != count ||
      (in.size() - kHeaderBytes) % 16 != 0) {
    throw IngestionError("share file length does not match its header");
  }
  const u64 mask = f.width == 64 ? ~u64{0} : (u64{1} << f.width) - 1;
  f.a.resize(count);
  f.b.resize(count);
  for (std::size_t k = 0; k < count; ++k) {
    f.a[k] = get(in, pos, 8);
    f.b[k] = get(in, pos, 8);
    if ((f.a[k] & ~mask) || (f.b[k] & ~mask)) throw IngestionError("share value exceeds the declared width");
  }
  return f;
}

void write_share_file(const std::filesystem::path& path, const ShareFile& f) {
  const Bytes bytes = encode_share_file(f);
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IngestionError("cannot write " + path.string());
  out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
}

ShareFile read_share_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IngestionError("cannot open " + path.string());
  Bytes bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  return decode_share_file(bytes);
}

}  // namespace otree
