#include "otree/shares.hpp"

#include "otree/errors.hpp"

namespace otree {

AShareVec AShareVec::slice(std::size_t offset, std::size_t count) const {
  if (offset + count > size()) throw UsageError("share slice out of range");
  AShareVec out(ring, 0);
  out.a.assign(a.begin() + static_cast<std::ptrdiff_t>(offset),
               a.begin() + static_cast<std::ptrdiff_t>(offset + count));
  out.b.assign(b.begin() + static_cast<std::ptrdiff_t>(offset),
               b.begin() + static_cast<std::ptrdiff_t>(offset + count));
  return out;
}

void AShareVec::append(const AShareVec& other) {
  if (!empty() && !(other.ring == ring)) throw ConfigError("cannot append shares of another ring");
  if (empty()) ring = other.ring;
  a.insert(a.end(), other.a.begin(), other.a.end());
  b.insert(b.end(), other.b.begin(), other.b.end());
}

BShareVec BShareVec::slice(std::size_t offset, std::size_t count) const {
  if (offset + count > size()) throw UsageError("share slice out of range");
  BShareVec out(width, 0);
  out.a.assign(a.begin() + static_cast<std::ptrdiff_t>(offset),
               a.begin() + static_cast<std::ptrdiff_t>(offset + count));
  out.b.assign(b.begin() + static_cast<std::ptrdiff_t>(offset),
               b.begin() + static_cast<std::ptrdiff_t>(offset + count));
  return out;
}

void BShareVec::append(const BShareVec& other) {
  if (size() != 0 && other.width != width) throw ConfigError("cannot append shares of another width");
  if (size() == 0) width = other.width;
  a.insert(a.end(), other.a.begin(), other.a.end());
  b.insert(b.end(), other.b.begin(), other.b.end());
}

AShareVec concat(const std::vector<const AShareVec*>& parts) {
  AShareVec out;
  std::size_t total = 0;
  for (const auto* p : parts) total += p->size();
  out.a.reserve(total);
  out.b.reserve(total);
  for (const auto* p : parts) out.append(*p);
  return out;
}

BShareVec concat(const std::vector<const BShareVec*>& parts) {
  BShareVec out;
  for (const auto* p : parts) out.append(*p);
  return out;
}

Bytes pack_words(std::span<const u64> values, unsigned width) {
  if (width == 0 || width > 64) throw UsageError("pack width out of range");
  const std::size_t total_bits = values.size() * width;
  Bytes out((total_bits + 7) / 8, 0);
  if (width % 8 == 0) {
    const unsigned nb = width / 8;
    std::size_t pos = 0;
    for (u64 v : values) {
      for (unsigned k = 0; k < nb; ++k) out[pos++] = static_cast<std::uint8_t>(v >> (8 * k));
    }
    return out;
  }
  const u64 mask = width == 64 ? ~u64{0} : ((u64{1} << width) - 1);
  std::size_t bit = 0;
  for (u64 v : values) {
    v &= mask;
    unsigned left = width;
    while (left > 0) {
      const std::size_t byte = bit / 8;
      const unsigned off = bit % 8;
      const unsigned take = std::min(left, 8 - off);
      out[byte] |= static_cast<std::uint8_t>((v & ((1u << take) - 1)) << off);
      v >>= take;
      bit += take;
      left -= take;
    }
  }
  return out;
}

std::vector<u64> unpack_words(const Bytes& bytes, std::size_t n, unsigned width) {
  if (width == 0 || width > 64) throw UsageError("pack width out of range");
  if (bytes.size() != (n * width + 7) / 8) throw TransportError("unexpected payload length");
  std::vector<u64> out(n, 0);
  if (width % 8 == 0) {
    const unsigned nb = width / 8;
    std::size_t pos = 0;
    for (auto& v : out) {
      u64 x = 0;
      for (unsigned k = 0; k < nb; ++k) x |= static_cast<u64>(bytes[pos++]) << (8 * k);
      v = x;
    }
    return out;
  }
  std::size_t bit = 0;
  for (auto& v : out) {
    u64 x = 0;
    unsigned got = 0;
    while (got < width) {
      const std::size_t byte = bit / 8;
      const unsigned off = bit % 8;
      const unsigned take = std::min(width - got, 8 - off);
      x |= static_cast<u64>((bytes[byte] >> off) & ((1u << take) - 1)) << got;
      got += take;
      bit += take;
    }
    v = x;
  }
  return out;
}

}  // namespace otree
