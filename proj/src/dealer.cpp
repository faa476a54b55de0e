#include "otree/dealer.hpp"

#include "otree/errors.hpp"
#include "otree/prg.hpp"

namespace otree {

std::array<ShareFile, 3> share_matrix(std::span<const u64> values, std::size_t rows, std::size_t cols,
                                      std::uint64_t seed) {
  if (values.size() != rows * cols) throw UsageError("matrix shape does not match its values");
  Prg prg(derive_seed(seed, "share"));
  const std::size_t n = values.size();
  std::array<std::vector<u64>, 3> c;
  for (auto& v : c) v.resize(n);
  prg.fill(c[0]);
  prg.fill(c[1]);
  for (std::size_t k = 0; k < n; ++k) c[2][k] = values[k] - c[0][k] - c[1][k];
  std::array<ShareFile, 3> out;
  for (int p = 0; p < 3; ++p) {
    AShareVec s(Ring(64), 0);
    s.a = c[static_cast<std::size_t>(p)];
    s.b = c[static_cast<std::size_t>((p + 1) % 3)];
    out[static_cast<std::size_t>(p)] = ShareFile::from(p, s, rows, cols);
  }
  return out;
}

std::array<ShareFile, 3> share_dataset(const Dataset& d, std::uint64_t seed) {
  if (d.cols < 2) throw IngestionError("a dataset needs at least one feature and a label");
  std::vector<u64> values(d.cells.begin(), d.cells.end());
  return share_matrix(values, d.rows, d.cols, seed);
}

std::array<ShareFile, 3> share_queries(const Dataset& d, std::uint64_t seed) {
  std::vector<u64> values(d.cells.begin(), d.cells.end());
  return share_matrix(values, d.rows, d.cols, seed);
}

std::vector<u64> reconstruct_files(const std::array<ShareFile, 3>& files) {
  for (int p = 0; p < 3; ++p) {
    const auto& f = files[static_cast<std::size_t>(p)];
    const auto& g = files[static_cast<std::size_t>((p + 1) % 3)];
    if (f.party != p) throw IngestionError("share files are not in party order");
    if (f.type != SharingType::kArithmetic || f.width != files[0].width) {
      throw IngestionError("share files disagree on their sharing");
    }
    if (f.rows != g.rows || f.cols != g.cols || f.b != g.a) throw IngestionError("share files are inconsistent");
  }
  const Ring r(files[0].width);
  std::vector<u64> out(files[0].a.size());
  for (std::size_t k = 0; k < out.size(); ++k) {
    out[k] = r.add(r.add(files[0].a[k], files[1].a[k]), files[2].a[k]);
  }
  return out;
}

SharedDataset load_shared_dataset(const ShareFile& f) {
  if (f.width != 64) throw IngestionError("dataset shares must be in Z_2^64");
  SharedDataset d;
  d.cells = f.arithmetic();
  d.rows = f.rows;
  d.cols = f.cols;
  return d;
}

MaterialCounts estimate_material(const Workload& w) {
  MaterialCounts c;
  if (w.train_rows > 0) add_counts(c, training_material(w.train_rows, w.cols, w.train));
  if (w.queries > 0) {
    const unsigned depth = max_levels(w.train.tree, w.cols);
    add_counts(c, inference_material(w.queries, w.cols - 1, depth, w.infer));
  }
  return c;
}

void gen_material(const MaterialCounts& counts, std::uint64_t seed, const std::array<std::filesystem::path, 3>& paths) {
  write_material_files(counts, seed, paths);
}

}  // namespace otree
