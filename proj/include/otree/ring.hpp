#pragma once

#include <cstdint>

#include "otree/errors.hpp"

namespace otree {

using u64 = std::uint64_t;
using i64 = std::int64_t;

// Z_{2^l} for l in [1, 64]. All values are kept reduced.
class Ring {
 public:
  constexpr explicit Ring(unsigned bits = 64)
      : bits_(bits), mask_(bits >= 64 ? ~u64{0} : ((u64{1} << bits) - 1)) {
    if (bits == 0 || bits > 64) throw ConfigError("ring width must be in [1, 64]");
  }

  constexpr unsigned bits() const { return bits_; }
  constexpr u64 mask() const { return mask_; }
  constexpr unsigned bytes() const { return (bits_ + 7) / 8; }

  constexpr u64 reduce(u64 v) const { return v & mask_; }
  constexpr u64 add(u64 a, u64 b) const { return (a + b) & mask_; }
  constexpr u64 sub(u64 a, u64 b) const { return (a - b) & mask_; }
  constexpr u64 mul(u64 a, u64 b) const { return (a * b) & mask_; }
  constexpr u64 neg(u64 a) const { return (u64{0} - a) & mask_; }

  // Two's-complement view: the upper half of the ring is negative.
  constexpr i64 to_signed(u64 v) const {
    v &= mask_;
    if (bits_ == 64) return static_cast<i64>(v);
    const u64 half = u64{1} << (bits_ - 1);
    return v >= half ? static_cast<i64>(v) - static_cast<i64>(u64{1} << bits_)
                     : static_cast<i64>(v);
  }
  constexpr u64 from_signed(i64 v) const { return static_cast<u64>(v) & mask_; }

  friend constexpr bool operator==(const Ring& a, const Ring& b) { return a.bits_ == b.bits_; }

 private:
  unsigned bits_;
  u64 mask_;
};

class RingElement {
 public:
  RingElement(u64 value, unsigned width) : ring_(width), value_(ring_.reduce(value)) {}

  u64 value() const { return value_; }
  unsigned width() const { return ring_.bits(); }
  const Ring& ring() const { return ring_; }

  friend bool operator==(const RingElement& a, const RingElement& b) {
    return a.width() == b.width() && a.value_ == b.value_;
  }

 private:
  Ring ring_;
  u64 value_;
};

// Throws ConfigError on width mismatch.
RingElement wrap_add(const RingElement& a, const RingElement& b);
RingElement wrap_sub(const RingElement& a, const RingElement& b);
RingElement wrap_mul(const RingElement& a, const RingElement& b);

struct FixedPoint {
  RingElement raw;
  unsigned precision;
};

inline constexpr unsigned kDefaultPrecision = 10;

// raw = round(x * 2^tau) mod 2^l; requires |x| < 2^(l - tau - 1).
FixedPoint encode_fixed(double x, unsigned tau = kDefaultPrecision, unsigned width = 32);
double decode_fixed(const FixedPoint& f);

}  // namespace otree
