#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>

#include "otree/shares.hpp"

namespace otree {

enum class SharingType : std::uint8_t { kArithmetic = 0, kBoolean = 1 };

// One party's shares of a rows x cols matrix (or a vector with cols = 1).
//
// Layout, little-endian:
//   "OTSH" u16 version  u8 party  u8 type  u8 width  u8[3] reserved
//   u64 rows  u64 cols  u64 count, then count pairs of u64 (first, second)
struct ShareFile {
  int party = 0;
  SharingType type = SharingType::kArithmetic;
  unsigned width = 64;
  std::size_t rows = 0;
  std::size_t cols = 1;
  std::vector<u64> a;
  std::vector<u64> b;

  static ShareFile from(int party, const AShareVec& s, std::size_t rows, std::size_t cols);
  static ShareFile from(int party, const BShareVec& s, std::size_t rows, std::size_t cols);
  AShareVec arithmetic() const;
  BShareVec boolean() const;
};

Bytes encode_share_file(const ShareFile& f);
// Throws IngestionError on a bad magic, version, size or value out of range.
ShareFile decode_share_file(const Bytes& bytes);

void write_share_file(const std::filesystem::path& path, const ShareFile& f);
ShareFile read_share_file(const std::filesystem::path& path);

}  // namespace otree
