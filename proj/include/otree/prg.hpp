#pragma once

#include <array>
#include <cstdint>
#include <memory>
#include <span>
#include <string_view>
#include <vector>

namespace otree {

using Seed = std::array<std::uint8_t, 16>;

// AES-128 in counter mode keyed by a 128-bit seed. Two holders of the same
// seed draw identical streams as long as they consume them in the same order.
class Prg {
 public:
  explicit Prg(const Seed& seed);
  Prg(Prg&&) noexcept;
  Prg& operator=(Prg&&) noexcept;
  ~Prg();

  std::uint64_t next();
  void fill(std::span<std::uint64_t> out);
  Seed next_seed();

 private:
  void refill();

  struct Cipher;
  std::unique_ptr<Cipher> cipher_;
  std::vector<std::uint64_t> buffer_;
  std::size_t pos_ = 0;
  std::uint64_t counter_ = 0;
};

// SHA-256(master || label || index) truncated to 128 bits.
Seed derive_seed(std::uint64_t master, std::string_view label, std::uint64_t index = 0);

}  // namespace otree
