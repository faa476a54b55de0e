#include <filesystem>
#include <fstream>
#include <sstream>
#include <thread>

#include <unistd.h>

#include <json.hpp>

#include "otree/cli.hpp"
#include "otree/errors.hpp"
#include "otree/gadgets.hpp"
#include "otree/rss.hpp"
#include "otree/tcp.hpp"
#include "otree/tree.hpp"
#include "support.hpp"

using namespace otree;
namespace fs = std::filesystem;

namespace {

struct Result {
  int code;
  std::string out;
  std::string err;
};

Result cli(std::vector<std::string> args) {
  args.insert(args.begin(), "otree");
  std::vector<const char*> argv;
  for (const auto& a : args) argv.push_back(a.c_str());
  std::ostringstream out, err;
  const int code = run_cli(static_cast<int>(argv.size()), argv.data(), out, err);
  return {code, out.str(), err.str()};
}

fs::path scratch(const std::string& name) {
  const fs::path dir = fs::temp_directory_path() / ("otree_cli_" + name);
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

const std::string kGolden = std::string(OTREE_TEST_DATA) + "/golden_200x6.csv";

}  // namespace

TEST_CASE("compare on the golden dataset reports identical trees") {
  const Result r = cli({"compare", "--data", kGolden, "--depth", "4", "--seed", "2024"});
  CHECK(r.code == kExitOk);
  CHECK(r.out.find("trees identical: true") != std::string::npos);
}

TEST_CASE("train writes shares but no plaintext tree without reveal") {
  const fs::path dir = scratch("train");
  Result r = cli({"train", "--data", kGolden, "--out", (dir / "t").string(), "--depth", "3"});
  CHECK(r.code == kExitOk);
  CHECK(fs::exists(dir / "t" / "tree.p1.otsh"));
  CHECK_FALSE(fs::exists(dir / "t" / "tree.json"));

  r = cli({"train", "--data", kGolden, "--out", (dir / "t").string(), "--reveal"});
  CHECK(r.code == kExitUsage);

  r = cli({"train", "--data", kGolden, "--out", (dir / "r").string(), "--depth", "4", "--seed", "2024", "--profile",
           "test", "--reveal", "--metrics", (dir / "m.json").string()});
  REQUIRE(r.code == kExitOk);
  const TreeState t = read_tree_json(dir / "r" / "tree.json");
  CHECK(t == read_tree_json(std::string(OTREE_TEST_DATA) + "/golden_200x6_h4.json"));
  std::ifstream m(dir / "m.json");
  const auto j = nlohmann::json::parse(m);
  std::uint64_t sum = 0;
  for (const auto& [pair, bytes] : j["bytes_per_pair"].items()) sum += bytes.get<std::uint64_t>();
  CHECK(sum == j["total_bytes"].get<std::uint64_t>());

  r = cli({"infer", "--tree", (dir / "r").string(), "--queries", kGolden, "--out", (dir / "q").string(), "--profile",
           "test", "--reveal"});
  CHECK(r.code == kExitOk);
  CHECK(r.out.find("accuracy:") != std::string::npos);
  fs::remove_all(dir);
}

TEST_CASE("deal then train and infer from share files") {
  const fs::path dir = scratch("deal");
  REQUIRE(cli({"deal", "--data", kGolden, "--queries", kGolden, "--out", (dir / "s").string(), "--depth", "3",
               "--path", "mpc"})
              .code == kExitOk);
  // Material sized for a shallower run runs out: a protocol failure.
  CHECK(cli({"train", "--shares", (dir / "s").string(), "--out", (dir / "t").string(), "--depth", "4", "--path",
             "mpc"})
            .code == kExitProtocol);
  REQUIRE(cli({"train", "--shares", (dir / "s").string(), "--out", (dir / "t").string(), "--depth", "3", "--path",
               "mpc"})
              .code == kExitOk);
  const Result r = cli({"infer", "--tree", (dir / "t").string(), "--shares", (dir / "s").string(), "--out",
                        (dir / "q").string(), "--profile", "test", "--reveal"});
  CHECK(r.code == kExitOk);
  std::ifstream labels(dir / "q" / "labels.csv");
  std::string line;
  std::size_t n = 0;
  while (std::getline(labels, line)) ++n;
  CHECK(n == 201);
  fs::remove_all(dir);
}

TEST_CASE("config file values apply and flags override them") {
  const fs::path dir = scratch("config");
  {
    std::ofstream f(dir / "run.toml");
    f << "depth = 2\nprofile = \"test\"\nreveal = true\n";
  }
  Result r = cli({"--config", (dir / "run.toml").string(), "train", "--data", kGolden, "--out", (dir / "t").string()});
  REQUIRE(r.code == kExitOk);
  CHECK(read_tree_json(dir / "t" / "tree.json").depth == 2);
  r = cli({"--config", (dir / "run.toml").string(), "train", "--data", kGolden, "--out", (dir / "t").string(),
           "--depth", "3"});
  REQUIRE(r.code == kExitOk);
  CHECK(read_tree_json(dir / "t" / "tree.json").depth == 3);
  fs::remove_all(dir);
}

TEST_CASE("usage and input errors map to exit code 1") {
  const fs::path dir = scratch("errors");
  {
    std::ofstream f(dir / "bad.csv");
    f << "0,1\n2,1\n";
  }
  Result r = cli({"train", "--data", (dir / "bad.csv").string(), "--out", (dir / "t").string()});
  CHECK(r.code == kExitUsage);
  CHECK(r.err.find("row 2 col 1") != std::string::npos);
  CHECK(cli({"train", "--out", (dir / "t").string()}).code == kExitUsage);
  CHECK(cli({"train", "--data", kGolden, "--out", "x", "--tau", "29"}).code == kExitUsage);
  CHECK(cli({"train", "--data", kGolden, "--out", "x", "--policy", "greedy"}).code == kExitUsage);
  CHECK(cli({"train", "--transport", "tcp", "--shares", "x", "--out", "x"}).code == kExitUsage);
  CHECK(cli({"nonsense"}).code == kExitUsage);
  CHECK(cli({}).code == kExitUsage);
  fs::remove_all(dir);
}

TEST_CASE("oaa bench reports bits within twice the model") {
  const Result r = cli({"bench", "--sweep", "oaa", "--rows", "1000", "--l", "32"});
  REQUIRE(r.code == kExitOk);
  const auto j = nlohmann::json::parse(r.out);
  CHECK(j[0]["model_bits"].get<double>() == 127000.0);
  CHECK(j[0]["ratio"].get<double>() <= 2.0);
  CHECK(j[0]["rounds"].get<unsigned>() <= j[0]["round_bound"].get<unsigned>());
}

TEST_CASE("binarize and gen") {
  const fs::path dir = scratch("binarize");
  {
    std::ofstream f(dir / "raw.csv");
    f << "age,color,label\n30,red,yes\n40,blue,no\n50,red,no\n";
  }
  CHECK(cli({"binarize", "--in", (dir / "raw.csv").string(), "--out", (dir / "b.csv").string()}).code == kExitOk);
  const Dataset d = read_csv(dir / "b.csv");
  CHECK(d.rows == 3);
  CHECK(cli({"gen", "--kind", "spect", "--out", (dir / "s.csv").string()}).code == kExitOk);
  CHECK(read_csv(dir / "s.csv").cols == 23);
  fs::remove_all(dir);
}

TEST_CASE("tcp mesh carries a multiplication") {
  const std::uint16_t base = static_cast<std::uint16_t>(42000 + (::getpid() % 500) * 4);
  std::vector<TcpAddress> addr;
  for (int i = 0; i < 3; ++i) addr.push_back({"127.0.0.1", static_cast<std::uint16_t>(base + i)});
  std::array<std::vector<u64>, 3> out;
  std::array<std::thread, 3> threads;
  for (int i = 0; i < 3; ++i) {
    threads[static_cast<std::size_t>(i)] = std::thread([&, i] {
      auto dealer_ptr = std::make_shared<LazyDealer>(1);
      auto src = dealer_ptr->source(i);
      Party p(PartyId(i), connect_mesh(i, addr), *src, 10 + static_cast<std::uint64_t>(i));
      p.setup_seeds();
      const Ring r(32);
      std::vector<u64> x{3, 5, 7}, y{2, 4, 1 << 20};
      auto none = std::span<const u64>();
      AShareVec X = share_a(p, r, 0, i == 0 ? std::span<const u64>(x) : none, 3);
      AShareVec Y = share_a(p, r, 1, i == 1 ? std::span<const u64>(y) : none, 3);
      out[static_cast<std::size_t>(i)] = reconstruct_a(p, mul(p, X, Y));
    });
  }
  for (auto& t : threads) t.join();
  for (const auto& o : out) CHECK(o == std::vector<u64>{6, 20, 7u << 20});
}

TEST_CASE("tcp endpoints report unreachable peers") {
  TcpOptions opt;
  opt.connect_timeout = std::chrono::milliseconds(300);
  std::vector<TcpAddress> addr{{"127.0.0.1", 1}, {"127.0.0.1", 2}, {"127.0.0.1", 3}};
  CHECK_THROWS_AS(connect_mesh(2, addr, opt), TransportError);
  CHECK_THROWS_AS(parse_address("nohost"), ConfigError);
  CHECK(parse_address("h:80").port == 80);
}

TEST_CASE("tcp training with an enclave endpoint matches the in-process tree") {
  const fs::path dir = scratch("tcp_tee");
  const std::string shares = (dir / "sh").string();
  REQUIRE(cli({"deal", "--data", kGolden, "--depth", "3", "--out", shares}).code == kExitOk);
  const int base = 43000 + (::getpid() % 500) * 4;
  std::string peers;
  for (int i = 0; i < 4; ++i) peers += (i ? "," : "") + std::string("127.0.0.1:") + std::to_string(base + i);
  const std::vector<std::string> common = {"--transport", "tcp", "--peers", peers, "--depth", "3",
                                           "--profile", "test"};
  std::array<int, 4> codes{};
  std::array<std::thread, 4> threads;
  for (int i = 0; i < 4; ++i) {
    threads[static_cast<std::size_t>(i)] = std::thread([&, i] {
      std::vector<std::string> args;
      if (i == 3) {
        args = {"enclave"};
      } else {
        args = {"train", "--party", std::to_string(i + 1), "--shares", shares, "--reveal", "--out",
                (dir / "tcp").string()};
      }
      args.insert(args.end(), common.begin(), common.end());
      codes[static_cast<std::size_t>(i)] = cli(args).code;
    });
  }
  for (auto& t : threads) t.join();
  for (int c : codes) CHECK(c == kExitOk);
  REQUIRE(cli({"train", "--data", kGolden, "--depth", "3", "--profile", "test", "--reveal", "--out",
               (dir / "inproc").string()})
              .code == kExitOk);
  auto slurp = [](const fs::path& f) {
    std::ifstream in(f);
    return std::string(std::istreambuf_iterator<char>(in), {});
  };
  CHECK(slurp(dir / "tcp" / "tree.json") == slurp(dir / "inproc" / "tree.json"));
  fs::remove_all(dir);
}
