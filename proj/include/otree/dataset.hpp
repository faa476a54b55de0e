#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <string>
#include <vector>

namespace otree {

// N x d binary matrix; column d-1 is the label.
struct Dataset {
  std::size_t rows = 0;
  std::size_t cols = 0;
  std::vector<std::uint8_t> cells;  // row-major
  std::vector<std::string> names;   // empty when the source had no header

  std::uint8_t at(std::size_t r, std::size_t c) const { return cells[r * cols + c]; }
  std::uint8_t label(std::size_t r) const { return at(r, cols - 1); }
  std::size_t features() const { return cols - 1; }

  // Rows [begin, end) as a new dataset.
  Dataset slice(std::size_t begin, std::size_t end) const;
  // Feature columns only, row-major N x (d-1).
  std::vector<std::uint8_t> feature_matrix() const;
};

// Throws IngestionError naming the 1-based row and column of the first bad cell.
// A first line containing anything other than integers is taken as a header.
Dataset parse_csv(std::istream& in);
Dataset read_csv(const std::filesystem::path& path);
void write_csv(std::ostream& out, const Dataset& d);
void write_csv(const std::filesystem::path& path, const Dataset& d);

// Labels produced by a random planted tree of `planted_depth` levels over the
// features, each flipped with probability `noise`.
Dataset synthetic_dataset(std::uint64_t seed, std::size_t rows, std::size_t features, unsigned planted_depth,
                          double noise);

// 267 x 22 binary features plus label, roughly 79% positive.
Dataset spect_like(std::uint64_t seed);
// 48,842 rows, 13 binary features plus label.
Dataset adult_like(std::uint64_t seed);

// Seeded shuffle, then the first round(fraction * N) rows and the rest.
std::pair<Dataset, Dataset> split_dataset(const Dataset& d, double train_fraction, std::uint64_t seed);

// One-hot encodes categorical columns and thresholds numeric ones at the median.
// The column named `label_column` (or the last one) becomes the label: its most
// frequent value maps to 0 and everything else to 1 unless `positive` is given.
struct BinarizeOptions {
  std::string label_column;
  std::string positive;
  std::size_t max_categories = 16;
};
Dataset binarize_csv(std::istream& in, const BinarizeOptions& opt);

}  // namespace otree
