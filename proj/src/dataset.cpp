#include "otree/dataset.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <istream>
#include <map>
#include <numeric>
#include <ostream>
#include <random>
#include <sstream>

#include "otree/errors.hpp"

namespace otree {

namespace {

std::string trim(std::string s) {
  const auto first = s.find_first_not_of(" \t\r");
  if (first == std::string::npos) return {};
  const auto last = s.find_last_not_of(" \t\r");
  return s.substr(first, last - first + 1);
}

std::vector<std::string> split_line(const std::string& line) {
  std::vector<std::string> out;
  std::string cell;
  std::istringstream ss(line);
  while (std::getline(ss, cell, ',')) out.push_back(trim(cell));
  if (!line.empty() && line.back() == ',') out.emplace_back();
  return out;
}

bool is_integer(const std::string& s) {
  if (s.empty()) return false;
  long long v = 0;
  auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  return ec == std::errc() && ptr == s.data() + s.size();
}

bool parse_double(const std::string& s, double& out) {
  if (s.empty()) return false;
  char* end = nullptr;
  out = std::strtod(s.c_str(), &end);
  return end == s.c_str() + s.size();
}

// Uniform draw in [0, 1) from the top 53 bits.
double unit(std::mt19937_64& rng) { return static_cast<double>(rng() >> 11) * 0x1.0p-53; }

Dataset label_first(std::uint64_t seed, std::size_t rows, std::size_t features, double positive) {
  std::mt19937_64 rng(seed);
  std::vector<double> p0(features), p1(features);
  for (std::size_t j = 0; j < features; ++j) {
    p0[j] = 0.1 + 0.8 * unit(rng);
    // Some features barely depend on the label, others strongly.
    const double shift = (unit(rng) - 0.5) * (j % 3 == 0 ? 0.9 : 0.3);
    p1[j] = std::clamp(p0[j] + shift, 0.05, 0.95);
  }
  Dataset d;
  d.rows = rows;
  d.cols = features + 1;
  d.cells.resize(rows * d.cols);
  for (std::size_t r = 0; r < rows; ++r) {
    const bool y = unit(rng) < positive;
    for (std::size_t j = 0; j < features; ++j) {
      d.cells[r * d.cols + j] = unit(rng) < (y ? p1[j] : p0[j]) ? 1 : 0;
    }
    d.cells[r * d.cols + features] = y ? 1 : 0;
  }
  return d;
}

}  // namespace

Dataset Dataset::slice(std::size_t begin, std::size_t end) const {
  Dataset out;
  out.cols = cols;
  out.rows = end - begin;
  out.names = names;
  out.cells.assign(cells.begin() + static_cast<std::ptrdiff_t>(begin * cols),
                   cells.begin() + static_cast<std::ptrdiff_t>(end * cols));
  return out;
}

std::vector<std::uint8_t> Dataset::feature_matrix() const {
  const std::size_t m = features();
  std::vector<std::uint8_t> out(rows * m);
  for (std::size_t r = 0; r < rows; ++r) {
    std::copy_n(cells.begin() + static_cast<std::ptrdiff_t>(r * cols), m,
                out.begin() + static_cast<std::ptrdiff_t>(r * m));
  }
  return out;
}

Dataset parse_csv(std::istream& in) {
  Dataset d;
  std::string line;
  std::size_t line_no = 0;
  bool first = true;
  while (std::getline(in, line)) {
    ++line_no;
    if (trim(line).empty()) continue;
    auto cells = split_line(line);
    if (first) {
      first = false;
      d.cols = cells.size();
      if (d.cols < 2) throw IngestionError("dataset needs at least one feature and a label");
      if (!std::all_of(cells.begin(), cells.end(), is_integer)) {
        d.names = cells;
        continue;
      }
    }
    if (cells.size() != d.cols) {
      throw IngestionError("line " + std::to_string(line_no) + ": expected " + std::to_string(d.cols) +
                           " cells, found " + std::to_string(cells.size()));
    }
    for (std::size_t c = 0; c < cells.size(); ++c) {
      if (cells[c] != "0" && cells[c] != "1") {
        throw IngestionError("row " + std::to_string(d.rows + 1) + " col " + std::to_string(c + 1) +
                             ": expected 0 or 1, found '" + cells[c] + "'");
      }
      d.cells.push_back(cells[c] == "1" ? 1 : 0);
    }
    ++d.rows;
  }
  if (d.rows == 0) throw IngestionError("dataset has no rows");
  return d;
}

Dataset read_csv(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IngestionError("cannot open " + path.string());
  return parse_csv(in);
}

void write_csv(std::ostream& out, const Dataset& d) {
  if (!d.names.empty()) {
    for (std::size_t c = 0; c < d.names.size(); ++c) out << (c ? "," : "") << d.names[c];
    out << '\n';
  }
  for (std::size_t r = 0; r < d.rows; ++r) {
    for (std::size_t c = 0; c < d.cols; ++c) out << (c ? "," : "") << int(d.at(r, c));
    out << '\n';
  }
}

void write_csv(const std::filesystem::path& path, const Dataset& d) {
  std::ofstream out(path);
  if (!out) throw IngestionError("cannot write " + path.string());
  write_csv(out, d);
}

Dataset synthetic_dataset(std::uint64_t seed, std::size_t rows, std::size_t features, unsigned planted_depth,
                          double noise) {
  if (features == 0) throw ConfigError("synthetic dataset needs at least one feature");
  std::mt19937_64 rng(seed);
  const std::size_t inner = (std::size_t{1} << planted_depth) - 1;
  std::vector<std::size_t> split(inner);
  for (auto& s : split) s = rng() % features;
  std::vector<std::uint8_t> leaf(inner + 1);
  for (auto& l : leaf) l = static_cast<std::uint8_t>(rng() & 1);
  std::vector<double> bias(features);
  for (auto& b : bias) b = 0.2 + 0.6 * unit(rng);

  Dataset d;
  d.rows = rows;
  d.cols = features + 1;
  d.cells.resize(rows * d.cols);
  for (std::size_t r = 0; r < rows; ++r) {
    std::uint8_t* row = &d.cells[r * d.cols];
    for (std::size_t j = 0; j < features; ++j) row[j] = unit(rng) < bias[j] ? 1 : 0;
    std::size_t node = 0;
    while (node < inner) node = 2 * node + 1 + row[split[node]];
    std::uint8_t y = leaf[node - inner];
    if (unit(rng) < noise) y ^= 1;
    row[features] = y;
  }
  return d;
}

Dataset spect_like(std::uint64_t seed) { return label_first(seed, 267, 22, 0.79); }

Dataset adult_like(std::uint64_t seed) { return label_first(seed, 48842, 13, 0.24); }

std::pair<Dataset, Dataset> split_dataset(const Dataset& d, double train_fraction, std::uint64_t seed) {
  std::vector<std::size_t> order(d.rows);
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::mt19937_64 rng(seed);
  for (std::size_t i = order.size(); i > 1; --i) std::swap(order[i - 1], order[rng() % i]);
  const auto cut = static_cast<std::size_t>(std::llround(train_fraction * static_cast<double>(d.rows)));
  Dataset shuffled = d;
  for (std::size_t i = 0; i < d.rows; ++i) {
    std::copy_n(d.cells.begin() + static_cast<std::ptrdiff_t>(order[i] * d.cols), d.cols,
                shuffled.cells.begin() + static_cast<std::ptrdiff_t>(i * d.cols));
  }
  return {shuffled.slice(0, cut), shuffled.slice(cut, d.rows)};
}

Dataset binarize_csv(std::istream& in, const BinarizeOptions& opt) {
  std::string line;
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;
  while (std::getline(in, line)) {
    if (trim(line).empty()) continue;
    auto cells = split_line(line);
    if (header.empty()) {
      header = std::move(cells);
      continue;
    }
    if (cells.size() != header.size()) {
      throw IngestionError("line " + std::to_string(rows.size() + 2) + ": expected " +
                           std::to_string(header.size()) + " cells");
    }
    rows.push_back(std::move(cells));
  }
  if (header.size() < 2 || rows.empty()) throw IngestionError("binarize needs a header and at least one row");

  std::size_t label_col = header.size() - 1;
  if (!opt.label_column.empty()) {
    auto it = std::find(header.begin(), header.end(), opt.label_column);
    if (it == header.end()) throw IngestionError("no column named " + opt.label_column);
    label_col = static_cast<std::size_t>(it - header.begin());
  }

  struct Column {
    std::vector<std::string> names;
    std::vector<std::vector<std::uint8_t>> values;  // one per output column
  };
  std::vector<Column> out_cols;
  for (std::size_t c = 0; c < header.size(); ++c) {
    if (c == label_col) continue;
    Column col;
    std::vector<double> nums(rows.size());
    bool numeric = true;
    for (std::size_t r = 0; r < rows.size() && numeric; ++r) numeric = parse_double(rows[r][c], nums[r]);
    if (numeric) {
      std::vector<double> sorted = nums;
      std::nth_element(sorted.begin(), sorted.begin() + static_cast<std::ptrdiff_t>(sorted.size() / 2),
                       sorted.end());
      const double median = sorted[sorted.size() / 2];
      col.names.push_back(header[c] + ">" + std::to_string(median));
      col.values.emplace_back(rows.size());
      for (std::size_t r = 0; r < rows.size(); ++r) col.values[0][r] = nums[r] > median ? 1 : 0;
    } else {
      std::map<std::string, std::size_t> freq;
      for (const auto& row : rows) ++freq[row[c]];
      std::vector<std::pair<std::size_t, std::string>> ranked;
      for (const auto& [v, n] : freq) ranked.emplace_back(n, v);
      std::stable_sort(ranked.begin(), ranked.end(), [](const auto& a, const auto& b) { return a.first > b.first; });
      if (ranked.size() > opt.max_categories) ranked.resize(opt.max_categories);
      for (const auto& [n, v] : ranked) {
        col.names.push_back(header[c] + "=" + v);
        std::vector<std::uint8_t> bits(rows.size());
        for (std::size_t r = 0; r < rows.size(); ++r) bits[r] = rows[r][c] == v ? 1 : 0;
        col.values.push_back(std::move(bits));
      }
    }
    out_cols.push_back(std::move(col));
  }

  std::string positive = opt.positive;
  std::string negative;
  if (positive.empty()) {
    std::map<std::string, std::size_t> freq;
    for (const auto& row : rows) ++freq[row[label_col]];
    negative = std::max_element(freq.begin(), freq.end(), [](const auto& a, const auto& b) {
                 return a.second < b.second;
               })->first;
  }

  Dataset d;
  for (const auto& col : out_cols) d.names.insert(d.names.end(), col.names.begin(), col.names.end());
  d.names.push_back(header[label_col]);
  d.cols = d.names.size();
  d.rows = rows.size();
  d.cells.reserve(d.rows * d.cols);
  for (std::size_t r = 0; r < rows.size(); ++r) {
    for (const auto& col : out_cols) {
      for (const auto& bits : col.values) d.cells.push_back(bits[r]);
    }
    const auto& y = rows[r][label_col];
    d.cells.push_back(positive.empty() ? (y != negative ? 1 : 0) : (y == positive ? 1 : 0));
  }
  return d;
}

}  // namespace otree
