#include "otree/ring.hpp"

#include <cmath>
#include <string>

namespace otree {

namespace {

void require_same_width(const RingElement& a, const RingElement& b) {
  if (a.width() != b.width()) {
    throw ConfigError("ring width mismatch: " + std::to_string(a.width()) + " vs " +
                      std::to_string(b.width()));
  }
}

}  // namespace

RingElement wrap_add(const RingElement& a, const RingElement& b) {
  require_same_width(a, b);
  return {a.ring().add(a.value(), b.value()), a.width()};
}

RingElement wrap_sub(const RingElement& a, const RingElement& b) {
  require_same_width(a, b);
  return {a.ring().sub(a.value(), b.value()), a.width()};
}

RingElement wrap_mul(const RingElement& a, const RingElement& b) {
  require_same_width(a, b);
  return {a.ring().mul(a.value(), b.value()), a.width()};
}

FixedPoint encode_fixed(double x, unsigned tau, unsigned width) {
  if (tau + 1 >= width) throw ConfigError("fixed-point precision must be below ring width - 1");
  const double bound = std::ldexp(1.0, static_cast<int>(width - tau - 1));
  if (!std::isfinite(x) || std::fabs(x) >= bound) {
    throw RangeError("value outside fixed-point range: " + std::to_string(x));
  }
  const double scaled = std::round(std::ldexp(x, static_cast<int>(tau)));
  const Ring ring(width);
  return {RingElement(ring.from_signed(static_cast<i64>(scaled)), width), tau};
}

double decode_fixed(const FixedPoint& f) {
  const i64 s = f.raw.ring().to_signed(f.raw.value());
  return std::ldexp(static_cast<double>(s), -static_cast<int>(f.precision));
}

}  // namespace otree
