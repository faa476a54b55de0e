#include "otree/cli.hpp"

#include <chrono>
#include <cmath>
#include <fstream>
#include <iostream>
#include <optional>
#include <random>
#include <sstream>

#include <CLI11.hpp>
#include <json.hpp>
#include <spdlog/sinks/ostream_sink.h>
#include <spdlog/spdlog.h>

#include "otree/dealer.hpp"
#include "otree/enclave.hpp"
#include "otree/errors.hpp"
#include "otree/gadgets.hpp"
#include "otree/infer.hpp"
#include "otree/oaa.hpp"
#include "otree/rss.hpp"
#include "otree/runner.hpp"
#include "otree/tcp.hpp"
#include "otree/train.hpp"

namespace otree {

namespace {

namespace fs = std::filesystem;
using json = nlohmann::json;

// Raised when a verification step disagrees with its reference.
struct Mismatch : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct RunConfig {
  unsigned ring = 32;
  unsigned tau = kDefaultPrecision;
  std::string policy = "fixed";
  unsigned depth = 4;
  std::string path = "tee";
  std::string transport = "inproc";
  std::uint64_t seed = 1;
  std::string profile = "prod";
  bool reveal = false;
  std::size_t max_lanes = std::size_t{1} << 20;
  std::vector<std::string> peers;
  int party = 0;
  std::optional<std::uint64_t> enclave_secret;
  std::string metrics;
};

DepthPolicy parse_policy(const std::string& s) {
  if (s == "fixed") return DepthPolicy::kFixed;
  if (s == "until-no-split") return DepthPolicy::kUntilNoSplit;
  if (s == "feature-count") return DepthPolicy::kFeatureCount;
  throw ConfigError("unknown depth policy '" + s + "'");
}

void validate(const RunConfig& c, bool enclave) {
  if (c.ring != 32) throw ConfigError("only a 32-bit fixed-point ring is supported");
  if (c.tau + 2 >= c.ring || c.tau + 4 >= 32) throw ConfigError("precision must satisfy tau < 28");
  parse_policy(c.policy);
  if (c.policy == "fixed" && c.depth == 0) throw ConfigError("depth must be at least 1");
  if (c.path != "tee" && c.path != "mpc") throw ConfigError("heuristic path must be tee or mpc");
  if (c.transport != "inproc" && c.transport != "tcp") throw ConfigError("transport must be inproc or tcp");
  if (c.profile != "prod" && c.profile != "test") throw ConfigError("profile must be prod or test");
  if (c.reveal && c.profile != "test") throw ConfigError("--reveal is only honoured with --profile test");
  if (c.max_lanes == 0) throw ConfigError("lane ceiling must be positive");
  if (c.transport == "tcp") {
    if (!enclave && (c.party < 1 || c.party > 3)) throw ConfigError("tcp mode needs --party 1, 2 or 3");
    if (c.peers.size() < 3 || c.peers.size() > 4) throw ConfigError("tcp mode needs three or four --peers");
  }
}

SecureTrainConfig train_config(const RunConfig& c) {
  SecureTrainConfig t;
  t.tree.policy = parse_policy(c.policy);
  t.tree.depth = c.depth;
  t.tree.seed = c.seed;
  t.path = c.path == "mpc" ? HcPath::kMpc : HcPath::kTee;
  t.tau = c.tau;
  t.max_lanes = c.max_lanes;
  t.enclave_secret = c.enclave_secret;
  return t;
}

InferOptions infer_options(const RunConfig& c) {
  InferOptions o;
  o.max_lanes = c.max_lanes;
  return o;
}

fs::path party_file(const fs::path& dir, const std::string& stem, int party, const std::string& ext) {
  return dir / (stem + ".p" + std::to_string(party + 1) + ext);
}

void write_json(const fs::path& path, const json& j) {
  std::ofstream out(path);
  if (!out) throw IngestionError("cannot write " + path.string());
  out << j.dump(2) << "\n";
}

json read_json(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw IngestionError("cannot open " + path.string());
  try {
    return json::parse(in);
  } catch (const json::exception& e) {
    throw IngestionError(path.string() + ": " + e.what());
  }
}

std::vector<TcpAddress> addresses(const RunConfig& c) {
  std::vector<TcpAddress> out;
  for (const auto& p : c.peers) out.push_back(parse_address(p));
  return out;
}

// Queries without their label column when the file carries one.
std::vector<std::uint8_t> query_features(const Dataset& q, std::size_t m) {
  if (q.cols == m) return q.cells;
  if (q.cols == m + 1) return q.feature_matrix();
  throw ConfigError("queries have " + std::to_string(q.cols) + " columns, the tree expects " + std::to_string(m));
}

void report_metrics(const RunConfig& c, const Metrics& m, double seconds, std::ostream& out) {
  json j = m.to_json();
  j["seconds"] = seconds;
  if (!c.metrics.empty()) write_json(c.metrics, j);
  out << "rounds: " << m.rounds << "\n" << "bytes: " << m.total_bytes() << "\n";
}

double since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

SessionConfig session_config(const RunConfig& c, bool enclave) {
  SessionConfig s;
  s.seed = c.seed;
  if (enclave) {
    const auto secret = c.enclave_secret;
    const std::uint64_t seed = c.seed;
    s.enclave = [secret, seed](Comm& comm, const std::atomic<bool>& done) {
      EnclaveOptions opt;
      opt.prg_seed = seed;
      opt.setup_secret = secret;
      serve_enclave(comm, done, opt);
    };
  }
  return s;
}

SharedDataset deal_inproc(Party& p, const Dataset& d) {
  std::vector<u64> values;
  if (p.id().index() == 0) values.assign(d.cells.begin(), d.cells.end());
  SharedDataset s;
  s.cells = share_a(p, Ring(64), 0, values, d.cells.size());
  s.rows = d.rows;
  s.cols = d.cols;
  return s;
}

void write_tree_shares(const fs::path& dir, int party, const SecureTree& t, std::size_t features) {
  AShareVec both = concat({&t.T, &t.F});
  write_share_file(party_file(dir, "tree", party, ".otsh"), ShareFile::from(party, both, 2, t.T.size()));
  if (party == 0) write_json(dir / "tree.meta.json", {{"depth", t.depth}, {"features", features}});
}

struct LoadedTree {
  AShareVec T;
  unsigned depth = 0;
  std::size_t features = 0;
};

LoadedTree load_tree_shares(const fs::path& dir, int party) {
  const json meta = read_json(dir / "tree.meta.json");
  const ShareFile f = read_share_file(party_file(dir, "tree", party, ".otsh"));
  if (f.party != party || f.rows != 2) throw IngestionError("tree share file does not belong to this party");
  LoadedTree t;
  t.depth = meta.at("depth").get<unsigned>();
  t.features = meta.at("features").get<std::size_t>();
  t.T = f.arithmetic().slice(0, f.cols);
  return t;
}

std::unique_ptr<FileMaterialSource> open_material(const fs::path& path) {
  if (!fs::exists(path)) return nullptr;
  return std::make_unique<FileMaterialSource>(path);
}

// ---- subcommands

void cmd_gen(const std::string& kind, std::size_t rows, std::size_t features, unsigned planted, double noise,
             const RunConfig& c, const fs::path& out_path, std::ostream& out) {
  Dataset d;
  if (kind == "spect") {
    d = spect_like(c.seed);
  } else if (kind == "adult") {
    d = adult_like(c.seed);
  } else if (kind == "synthetic") {
    d = synthetic_dataset(c.seed, rows, features, planted, noise);
  } else {
    throw ConfigError("unknown dataset kind '" + kind + "'");
  }
  write_csv(out_path, d);
  out << "wrote " << d.rows << " x " << d.cols << " to " << out_path.string() << "\n";
}

void cmd_binarize(const fs::path& in_path, const fs::path& out_path, const BinarizeOptions& opt, std::ostream& out) {
  std::ifstream in(in_path);
  if (!in) throw IngestionError("cannot open " + in_path.string());
  const Dataset d = binarize_csv(in, opt);
  write_csv(out_path, d);
  out << "wrote " << d.rows << " x " << d.cols << " to " << out_path.string() << "\n";
}

void cmd_deal(const RunConfig& c, const fs::path& data_path, const fs::path& queries_path, const fs::path& dir,
              std::ostream& out) {
  const Dataset d = read_csv(data_path);
  fs::create_directories(dir);
  const auto shares = share_dataset(d, c.seed);
  for (int p = 0; p < 3; ++p) write_share_file(party_file(dir, "data", p, ".otsh"), shares[static_cast<std::size_t>(p)]);

  Workload train;
  train.train_rows = d.rows;
  train.cols = d.cols;
  train.train = train_config(c);
  const MaterialCounts train_counts = estimate_material(train);
  std::array<fs::path, 3> paths;
  for (int p = 0; p < 3; ++p) paths[static_cast<std::size_t>(p)] = party_file(dir, "material_train", p, ".bin");
  gen_material(train_counts, c.seed ^ 0x747261696eULL, paths);

  json manifest = {{"rows", d.rows}, {"cols", d.cols}, {"queries", 0}};
  if (!queries_path.empty()) {
    const Dataset q = read_csv(queries_path);
    Dataset feats;
    feats.rows = q.rows;
    feats.cols = d.features();
    feats.cells = query_features(q, d.features());
    const auto qs = share_queries(feats, c.seed + 1);
    for (int p = 0; p < 3; ++p) write_share_file(party_file(dir, "queries", p, ".otsh"), qs[static_cast<std::size_t>(p)]);
    const unsigned depth = max_levels(train.train.tree, d.cols);
    const MaterialCounts infer_counts = inference_material(q.rows, d.features(), depth, infer_options(c));
    for (int p = 0; p < 3; ++p) paths[static_cast<std::size_t>(p)] = party_file(dir, "material_infer", p, ".bin");
    gen_material(infer_counts, c.seed ^ 0x696e666572ULL, paths);
    manifest["queries"] = q.rows;
  }
  write_json(dir / "manifest.json", manifest);
  out << "dealt " << d.rows << " x " << d.cols << " into " << dir.string() << "\n";
}

void cmd_train(const RunConfig& c, const fs::path& data_path, const fs::path& shares_dir, const fs::path& dir,
               std::ostream& out) {
  const SecureTrainConfig cfg = train_config(c);
  fs::create_directories(dir);
  const auto t0 = std::chrono::steady_clock::now();
  std::optional<TreeState> revealed;
  Metrics metrics;
  std::size_t features = 0;

  if (c.transport == "inproc") {
    std::optional<Dataset> plain;
    std::array<std::optional<ShareFile>, 3> files;
    std::array<std::unique_ptr<FileMaterialSource>, 3> material;
    if (!data_path.empty()) {
      plain = read_csv(data_path);
    } else {
      for (int p = 0; p < 3; ++p) {
        files[static_cast<std::size_t>(p)] = read_share_file(party_file(shares_dir, "data", p, ".otsh"));
        material[static_cast<std::size_t>(p)] = open_material(party_file(shares_dir, "material_train", p, ".bin"));
      }
    }
    SessionConfig s = session_config(c, cfg.path == HcPath::kTee);
    for (int p = 0; p < 3; ++p) s.material[static_cast<std::size_t>(p)] = material[static_cast<std::size_t>(p)].get();
    auto res = run_parties(s, [&](Party& p) {
      const int me = p.id().index();
      const SharedDataset data =
          plain ? deal_inproc(p, *plain) : load_shared_dataset(*files[static_cast<std::size_t>(me)]);
      SecureTree t = odtt(p, data, cfg);
      write_tree_shares(dir, me, t, data.features());
      return c.reveal ? std::optional<TreeState>(reveal_tree(p, t)) : std::nullopt;
    });
    revealed = res.out[0];
    metrics = res.trace.metrics();
    features = plain ? plain->features() : files[0]->cols - 1;
  } else {
    const int me = c.party - 1;
    const SharedDataset data = load_shared_dataset(read_share_file(party_file(shares_dir, "data", me, ".otsh")));
    auto material = open_material(party_file(shares_dir, "material_train", me, ".bin"));
    if (!material) throw ConfigError("tcp mode needs the dealer's material_train file");
    const auto addr = addresses(c);
    if (cfg.path == HcPath::kTee && addr.size() != 4) throw ConfigError("the tee path needs the enclave as a fourth peer");
    Party party(PartyId(me), connect_mesh(me, addr), *material, c.seed + static_cast<std::uint64_t>(me) * 7919);
    party.enclave_attached = addr.size() == 4;
    party.setup_seeds();
    SecureTree t = odtt(party, data, cfg);
    features = data.features();
    write_tree_shares(dir, me, t, features);
    if (c.reveal) revealed = reveal_tree(party, t);
    if (party.enclave_attached) {
      std::optional<AeadKey> key;
      if (c.enclave_secret) key = enclave_key(*c.enclave_secret, me);
      enclave_shutdown(party.comm(), key, party.local_prg());
    }
    metrics = summarize({&party.comm().transcript()});
  }

  if (revealed) {
    validate_tree(*revealed, features);
    write_tree_json(dir / "tree.json", *revealed);
    out << "tree: " << tree_to_json(*revealed).dump() << "\n";
  }
  out << "trained tree shares written to " << dir.string() << "\n";
  report_metrics(c, metrics, since(t0), out);
}

void cmd_infer(const RunConfig& c, const fs::path& tree_dir, const fs::path& queries_path, const fs::path& shares_dir,
               const fs::path& dir, std::ostream& out) {
  const InferOptions opt = infer_options(c);
  fs::create_directories(dir);
  const auto t0 = std::chrono::steady_clock::now();
  std::optional<std::vector<u64>> labels;
  std::optional<Dataset> plain;
  Metrics metrics;

  auto finish = [&](Party& p, const LoadedTree& tree, const AShareVec& q) {
    AShareVec r = odti(p, tree.T, q, tree.features, tree.depth, opt);
    write_share_file(party_file(dir, "result", p.id().index(), ".otsh"), ShareFile::from(p.id().index(), r, r.size(), 1));
    return c.reveal ? std::optional<std::vector<u64>>(reconstruct_a(p, r)) : std::nullopt;
  };

  if (c.transport == "inproc") {
    std::array<std::optional<ShareFile>, 3> files;
    std::array<std::unique_ptr<FileMaterialSource>, 3> material;
    if (!queries_path.empty()) {
      plain = read_csv(queries_path);
    } else {
      for (int p = 0; p < 3; ++p) {
        files[static_cast<std::size_t>(p)] = read_share_file(party_file(shares_dir, "queries", p, ".otsh"));
        material[static_cast<std::size_t>(p)] = open_material(party_file(shares_dir, "material_infer", p, ".bin"));
      }
    }
    SessionConfig s = session_config(c, false);
    for (int p = 0; p < 3; ++p) s.material[static_cast<std::size_t>(p)] = material[static_cast<std::size_t>(p)].get();
    auto res = run_parties(s, [&](Party& p) {
      const int me = p.id().index();
      const LoadedTree tree = load_tree_shares(tree_dir, me);
      AShareVec q;
      if (plain) {
        const auto feats = query_features(*plain, tree.features);
        std::vector<u64> values;
        if (me == 0) values.assign(feats.begin(), feats.end());
        q = share_a(p, Ring(64), 0, values, feats.size());
      } else {
        q = files[static_cast<std::size_t>(me)]->arithmetic();
      }
      return finish(p, tree, q);
    });
    labels = res.out[0];
    metrics = res.trace.metrics();
  } else {
    const int me = c.party - 1;
    const LoadedTree tree = load_tree_shares(tree_dir, me);
    const AShareVec q = read_share_file(party_file(shares_dir, "queries", me, ".otsh")).arithmetic();
    auto material = open_material(party_file(shares_dir, "material_infer", me, ".bin"));
    if (!material) throw ConfigError("tcp mode needs the dealer's material_infer file");
    auto addr = addresses(c);
    addr.resize(3);
    Party party(PartyId(me), connect_mesh(me, addr), *material, c.seed + static_cast<std::uint64_t>(me) * 7919);
    party.setup_seeds();
    labels = finish(party, tree, q);
    metrics = summarize({&party.comm().transcript()});
  }

  if (labels) {
    std::ofstream f(dir / "labels.csv");
    f << "label\n";
    for (u64 v : *labels) f << v << "\n";
    out << "labels written to " << (dir / "labels.csv").string() << "\n";
    const std::size_t features = read_json(tree_dir / "tree.meta.json").at("features").get<std::size_t>();
    if (plain && plain->cols == features + 1) {
      std::size_t hits = 0;
      for (std::size_t r = 0; r < plain->rows; ++r) hits += (*labels)[r] == plain->label(r);
      out << "accuracy: " << static_cast<double>(hits) / static_cast<double>(plain->rows) << "\n";
    }
  }
  report_metrics(c, metrics, since(t0), out);
}

void cmd_compare(const RunConfig& c, const fs::path& data_path, double test_fraction, std::ostream& out) {
  const Dataset all = read_csv(data_path);
  const SecureTrainConfig cfg = train_config(c);
  const auto [train, test] = test_fraction > 0 ? split_dataset(all, 1.0 - test_fraction, c.seed)
                                               : std::pair<Dataset, Dataset>{all, all};
  const TreeState oracle = plaintext_train(train, cfg.tree);
  auto res = run_parties(session_config(c, cfg.path == HcPath::kTee), [&](Party& p) {
    const SharedDataset data = deal_inproc(p, train);
    return reveal_tree(p, odtt(p, data, cfg));
  });
  const TreeState& secure = res.out[0];
  validate_tree(secure, train.features());
  const bool same = secure == oracle;
  const double a_oracle = accuracy(oracle, test), a_secure = accuracy(secure, test);
  out << "trees identical: " << (same ? "true" : "false") << "\n";
  out << "oracle accuracy: " << a_oracle << "\n";
  out << "secure accuracy: " << a_secure << "\n";
  out << "accuracy delta: " << a_oracle - a_secure << "\n";
  report_metrics(c, res.trace.metrics(), 0.0, out);
  if (cfg.path == HcPath::kTee && !same) throw Mismatch("tee-path tree differs from the reference");
  if (cfg.path == HcPath::kMpc && a_oracle - a_secure > 0.04) {
    throw Mismatch("mpc-path accuracy is more than 4 points below the reference");
  }
}

std::vector<std::size_t> parse_list(const std::string& s) {
  std::vector<std::size_t> out;
  std::stringstream ss(s);
  std::string item;
  while (std::getline(ss, item, ',')) {
    try {
      out.push_back(std::stoul(item));
    } catch (const std::logic_error&) {
      throw ConfigError("bad list entry '" + item + "'");
    }
  }
  if (out.empty()) throw ConfigError("empty list");
  return out;
}

void cmd_bench(const RunConfig& c, const std::string& sweep, const std::string& rows_s, const std::string& cols_s,
               const std::string& depth_s, unsigned l, std::size_t lookups, std::ostream& out) {
  json table = json::array();
  if (sweep == "oaa") {
    if (l < 8 || l > 64) throw ConfigError("oaa ring width must be in [8, 64]");
    for (std::size_t width : parse_list(rows_s)) {
      const Ring r(l);
      auto res = run_parties(session_config(c, false), [&](Party& p) {
        std::vector<u64> w(width), u(lookups);
        std::mt19937_64 rng(c.seed);
        for (auto& v : w) v = rng() & r.mask();
        for (auto& v : u) v = rng() % width;
        const auto empty = std::span<const u64>();
        const bool owner = p.id().index() == 0;
        AShareVec W = share_a(p, r, 0, owner ? std::span<const u64>(w) : empty, width);
        AShareVec U = share_a(p, r, 0, owner ? std::span<const u64>(u) : empty, lookups);
        OaaOptions opt;
        opt.max_lanes = c.max_lanes;
        oaa(p, W, U, opt);
        return 0;
      });
      const PhaseCost cost = res.trace.metrics().phase_total("oaa");
      const double bits = static_cast<double>(cost.bytes) * 8.0 / 3.0 / static_cast<double>(lookups);
      const double model = (4.0 * l - 1) * static_cast<double>(width);
      const auto bound = static_cast<std::uint64_t>(std::ceil(std::log2(static_cast<double>(l)))) + 3;
      table.push_back({{"l", l}, {"width", width}, {"lookups", lookups}, {"bits_per_lookup", bits},
                       {"model_bits", model}, {"ratio", bits / model}, {"rounds", cost.rounds},
                       {"round_bound", bound}});
    }
  } else if (sweep == "train" || sweep == "infer") {
    const SecureTrainConfig base = train_config(c);
    for (std::size_t rows : parse_list(rows_s)) {
      for (std::size_t cols : parse_list(cols_s)) {
        for (std::size_t depth : parse_list(depth_s)) {
          if (cols < 2) throw ConfigError("bench datasets need at least two columns");
          SecureTrainConfig cfg = base;
          cfg.tree.policy = DepthPolicy::kFixed;
          cfg.tree.depth = static_cast<unsigned>(depth);
          const Dataset d = synthetic_dataset(c.seed, rows, cols - 1, 3, 0.05);
          const auto t0 = std::chrono::steady_clock::now();
          Metrics m;
          if (sweep == "train") {
            auto res = run_parties(session_config(c, cfg.path == HcPath::kTee), [&](Party& p) {
              const SharedDataset data = deal_inproc(p, d);
              return odtt(p, data, cfg).depth;
            });
            m = res.trace.metrics();
          } else {
            std::mt19937_64 rng(c.seed);
            TreeState t = init_tree(static_cast<unsigned>(depth));
            for (auto& v : t.T) v = rng() % (cols - 1);
            auto res = run_parties(session_config(c, false), [&](Party& p) {
              const bool owner = p.id().index() == 0;
              const auto feats = d.feature_matrix();
              std::vector<u64> tv, qv;
              if (owner) {
                tv = t.T;
                qv.assign(feats.begin(), feats.end());
              }
              AShareVec T = share_a(p, Ring(64), 0, tv, t.T.size());
              AShareVec Q = share_a(p, Ring(64), 0, qv, feats.size());
              return odti(p, T, Q, cols - 1, t.depth, infer_options(c)).size();
            });
            m = res.trace.metrics();
          }
          const std::string phase = sweep == "train" ? "train" : "infer";
          json row = {{"rows", rows}, {"cols", cols}, {"depth", depth}, {"seconds", since(t0)},
                      {"rounds", m.phase_total(phase).rounds}, {"bytes", m.phase_total(phase).bytes}};
          if (sweep == "train") {
            row["path"] = c.path;
            for (const char* ph : {"ol_partition", "ol_count", "hc_mpc", "hc_tee", "ons"}) {
              row["bytes_" + std::string(ph)] = m.phase_total(ph).bytes;
            }
          }
          table.push_back(row);
        }
      }
    }
  } else {
    throw ConfigError("unknown sweep '" + sweep + "'");
  }
  if (!c.metrics.empty()) write_json(c.metrics, table);
  out << table.dump(2) << "\n";
}

void cmd_enclave(const RunConfig& c) {
  if (c.peers.size() != 4) throw ConfigError("the enclave needs four --peers, itself last");
  Comm comm(connect_mesh(kEnclaveEndpoint, addresses(c)));
  EnclaveOptions opt;
  opt.prg_seed = c.seed;
  opt.setup_secret = c.enclave_secret;
  std::atomic<bool> done{false};
  serve_enclave(comm, done, opt);
  spdlog::info("enclave served {} rounds", comm.rounds());
}

void setup_logging(std::ostream& err) {
  auto sink = std::make_shared<spdlog::sinks::ostream_sink_mt>(err);
  auto logger = std::make_shared<spdlog::logger>("otree", sink);
  logger->set_pattern("[%l] %v");
  const char* env = std::getenv("OTREE_LOG_LEVEL");
  logger->set_level(env ? spdlog::level::from_str(env) : spdlog::level::warn);
  spdlog::set_default_logger(logger);
}

}  // namespace

int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  setup_logging(err);
  CLI::App app{"Oblivious decision tree training and inference for three computing parties"};
  app.require_subcommand(1);
  app.set_config("--config", "", "TOML-style key = value file; flags override it");
  app.fallthrough();

  RunConfig c;
  app.add_option("--ring", c.ring, "fixed-point ring width l")->capture_default_str();
  app.add_option("--tau", c.tau, "fractional bits")->capture_default_str();
  app.add_option("--policy", c.policy, "fixed, until-no-split or feature-count")->capture_default_str();
  app.add_option("--depth", c.depth, "levels for the fixed policy")->capture_default_str();
  app.add_option("--path", c.path, "heuristic path: tee or mpc")->capture_default_str();
  app.add_option("--transport", c.transport, "inproc or tcp")->capture_default_str();
  app.add_option("--seed", c.seed, "seed for dealing, fillers and in-process sessions")->capture_default_str();
  app.add_option("--profile", c.profile, "prod or test")->capture_default_str();
  app.add_flag("--reveal", c.reveal, "write plaintext outputs (test profile only)");
  app.add_option("--max-lanes", c.max_lanes, "ceiling on comparison lanes in flight")->capture_default_str();
  app.add_option("--peers", c.peers, "host:port of P1, P2, P3 and optionally the enclave")->delimiter(',');
  app.add_option("--party", c.party, "party this process runs in tcp mode (1-3)");
  std::uint64_t secret = 0;
  auto* secret_opt = app.add_option("--enclave-secret", secret, "seal enclave frames with keys from this secret");
  app.add_option("--metrics", c.metrics, "write metrics JSON here");

  auto* gen = app.add_subcommand("gen", "write a binary dataset");
  std::string kind = "synthetic";
  std::size_t gen_rows = 200, gen_features = 6;
  unsigned planted = 3;
  double noise = 0.05;
  fs::path gen_out;
  gen->add_option("--kind", kind, "synthetic, spect or adult")->capture_default_str();
  gen->add_option("--rows", gen_rows)->capture_default_str();
  gen->add_option("--features", gen_features)->capture_default_str();
  gen->add_option("--planted-depth", planted)->capture_default_str();
  gen->add_option("--noise", noise)->capture_default_str();
  gen->add_option("--out", gen_out)->required();

  auto* bin = app.add_subcommand("binarize", "one-hot and threshold a raw CSV");
  fs::path bin_in, bin_out;
  BinarizeOptions bopt;
  bin->add_option("--in", bin_in)->required();
  bin->add_option("--out", bin_out)->required();
  bin->add_option("--label", bopt.label_column, "label column name (default: last)");
  bin->add_option("--positive", bopt.positive, "label value mapped to 1");
  bin->add_option("--max-categories", bopt.max_categories)->capture_default_str();

  auto* deal = app.add_subcommand("deal", "share a dataset and write dealer material");
  fs::path deal_data, deal_queries, deal_out;
  deal->add_option("--data", deal_data)->required();
  deal->add_option("--queries", deal_queries, "query CSV to share as well");
  deal->add_option("--out", deal_out)->required();

  auto* train = app.add_subcommand("train", "train a shared tree");
  fs::path train_data, train_shares, train_out;
  auto* td = train->add_option("--data", train_data, "binary CSV dealt in process");
  auto* ts = train->add_option("--shares", train_shares, "directory written by deal");
  td->excludes(ts);
  train->add_option("--out", train_out)->required();

  auto* infer = app.add_subcommand("infer", "classify queries with a shared tree");
  fs::path infer_tree, infer_queries, infer_shares, infer_out;
  infer->add_option("--tree", infer_tree, "directory holding the tree shares")->required();
  auto* iq = infer->add_option("--queries", infer_queries, "query CSV dealt in process");
  auto* is = infer->add_option("--shares", infer_shares, "directory written by deal");
  iq->excludes(is);
  infer->add_option("--out", infer_out)->required();

  auto* compare = app.add_subcommand("compare", "train the reference and the secure tree and compare them");
  fs::path cmp_data;
  double test_fraction = 0.0;
  compare->add_option("--data", cmp_data)->required();
  compare->add_option("--test-fraction", test_fraction, "held-out share for accuracy")->capture_default_str();

  auto* bench = app.add_subcommand("bench", "cost tables over parameter grids");
  std::string sweep = "oaa", rows_s = "1000", cols_s = "6", depth_s = "4";
  unsigned bench_l = 32;
  std::size_t lookups = 1;
  bench->add_option("--sweep", sweep, "oaa, train or infer")->capture_default_str();
  bench->add_option("--rows", rows_s, "comma list: table widths (oaa) or rows")->capture_default_str();
  bench->add_option("--cols", cols_s, "comma list of column counts")->capture_default_str();
  bench->add_option("--depths", depth_s, "comma list of depths")->capture_default_str();
  bench->add_option("--l", bench_l, "ring width for the oaa sweep")->capture_default_str();
  bench->add_option("--lookups", lookups, "lookups per oaa run")->capture_default_str();

  auto* enclave = app.add_subcommand("enclave", "serve the heuristic step as endpoint E in tcp mode");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kExitOk : kExitUsage;
  }
  if (secret_opt->count() > 0) c.enclave_secret = secret;

  try {
    validate(c, enclave->parsed());
    if (*gen) {
      cmd_gen(kind, gen_rows, gen_features, planted, noise, c, gen_out, out);
    } else if (*bin) {
      cmd_binarize(bin_in, bin_out, bopt, out);
    } else if (*deal) {
      cmd_deal(c, deal_data, deal_queries, deal_out, out);
    } else if (*train) {
      if (train_data.empty() && train_shares.empty()) throw ConfigError("train needs --data or --shares");
      if (c.transport == "tcp" && train_shares.empty()) throw ConfigError("tcp mode trains on --shares");
      cmd_train(c, train_data, train_shares, train_out, out);
    } else if (*infer) {
      if (infer_queries.empty() && infer_shares.empty()) throw ConfigError("infer needs --queries or --shares");
      if (c.transport == "tcp" && infer_shares.empty()) throw ConfigError("tcp mode classifies --shares");
      cmd_infer(c, infer_tree, infer_queries, infer_shares, infer_out, out);
    } else if (*compare) {
      if (test_fraction < 0 || test_fraction >= 1) throw ConfigError("--test-fraction must be in [0, 1)");
      cmd_compare(c, cmp_data, test_fraction, out);
    } else if (*bench) {
      cmd_bench(c, sweep, rows_s, cols_s, depth_s, bench_l, lookups, out);
    } else if (*enclave) {
      cmd_enclave(c);
    }
  } catch (const Mismatch& e) {
    err << "verification failed: " << e.what() << "\n";
    return kExitMismatch;
  } catch (const ConfigError& e) {
    err << "error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const IngestionError& e) {
    err << "error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const std::exception& e) {
    err << "protocol failure: " << e.what() << "\n";
    return kExitProtocol;
  }
  return kExitOk;
}

}  // namespace otree
