#pragma once

#include <cstddef>
#include <initializer_list>
#include <span>
#include <vector>

#include "otree/ring.hpp"
#include "otree/transport.hpp"

namespace otree {

// This party's half of a 2-out-of-3 replicated arithmetic sharing of a batch.
// Party i holds (x_i, x_{i+1}) in `a` and `b`, where x_0 + x_1 + x_2 = x.
struct AShareVec {
  Ring ring{64};
  std::vector<u64> a;
  std::vector<u64> b;

  AShareVec() = default;
  AShareVec(Ring r, std::size_t n) : ring(r), a(n, 0), b(n, 0) {}

  std::size_t size() const { return a.size(); }
  bool empty() const { return a.empty(); }
  AShareVec slice(std::size_t offset, std::size_t count) const;
  void append(const AShareVec& other);
};

// XOR sharing of `width`-bit words, same replication layout as AShareVec.
struct BShareVec {
  unsigned width = 1;
  std::vector<u64> a;
  std::vector<u64> b;

  BShareVec() = default;
  BShareVec(unsigned w, std::size_t n) : width(w), a(n, 0), b(n, 0) {}

  u64 mask() const { return width >= 64 ? ~u64{0} : ((u64{1} << width) - 1); }
  std::size_t size() const { return a.size(); }
  BShareVec slice(std::size_t offset, std::size_t count) const;
  void append(const BShareVec& other);
};

AShareVec concat(const std::vector<const AShareVec*>& parts);
BShareVec concat(const std::vector<const BShareVec*>& parts);
inline AShareVec concat(std::initializer_list<const AShareVec*> parts) {
  return concat(std::vector<const AShareVec*>(parts));
}
inline BShareVec concat(std::initializer_list<const BShareVec*> parts) {
  return concat(std::vector<const BShareVec*>(parts));
}

// Dense little-endian bit packing: n values of `width` bits occupy ceil(n*width/8) bytes.
Bytes pack_words(std::span<const u64> values, unsigned width);
std::vector<u64> unpack_words(const Bytes& bytes, std::size_t n, unsigned width);

}  // namespace otree
