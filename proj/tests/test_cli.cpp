#include <gtest/gtest.h>

#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <future>
#include <sstream>

#include "net_util.hpp"
#include "swept/cli.hpp"
#include "swept/codec.hpp"

namespace swept {
namespace {

namespace fs = std::filesystem;

struct Result {
  int code = 0;
  std::string out;
  std::string err;
};

Result cli(std::vector<std::string> args) {
  std::ostringstream out;
  std::ostringstream err;
  const int code = run_cli(args, out, err);
  return {code, out.str(), err.str()};
}

class TempDir {
 public:
  TempDir() {
    path_ = fs::temp_directory_path() / ("swept2d_test_" + std::to_string(::getpid()) + "_" + std::to_string(next_++));
    fs::create_directories(path_);
  }
  ~TempDir() { fs::remove_all(path_); }
  fs::path operator/(const std::string& name) const { return path_ / name; }

 private:
  static inline int next_ = 0;
  fs::path path_;
};

std::vector<std::string> lines(const std::string& s) {
  std::vector<std::string> out;
  std::istringstream in(s);
  for (std::string l; std::getline(in, l);) out.push_back(l);
  return out;
}

std::vector<std::string> csv_fields(const std::string& line) {
  std::vector<std::string> out;
  std::istringstream in(line);
  for (std::string f; std::getline(in, f, ',');) out.push_back(f);
  return out;
}

Bytes read_file(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  return Bytes(std::istreambuf_iterator<char>(in), {});
}

TEST(Config, SectionsCommentsAndOverrides) {
  Config c;
  EXPECT_EQ(c.get("kernel"), "wave");
  c.load_text("# comment\nkernel = euler  # trailing\n[topology]\npx = 3\n[run]\nengine = classic\n");
  EXPECT_EQ(c.get("kernel"), "euler");
  EXPECT_EQ(c.get_int("px"), 3);
  EXPECT_EQ(c.get("engine"), "classic");
  c.set("px", "4");
  EXPECT_EQ(c.get_int("px"), 4);
  EXPECT_EQ(c.get_int_list("n_list"), (std::vector<int>{8, 16, 32, 64}));
  EXPECT_TRUE(Config().get_bool("symmetric") == false);
}

TEST(Config, ErrorsNameTheKeyOrLine) {
  Config c;
  const auto field = [&](const std::string& text) {
    try {
      c.load_text(text, "f.ini");
    } catch (const ValidationError& e) {
      return std::string(e.what());
    }
    return std::string("none");
  };
  EXPECT_NE(field("bogus = 1\n").find("bogus"), std::string::npos);
  EXPECT_NE(field("[nowhere]\n").find("f.ini:1"), std::string::npos);
  EXPECT_NE(field("\n[run]\npx = 2\n").find("f.ini:3"), std::string::npos);
  EXPECT_NE(field("just words\n").find("key = value"), std::string::npos);
  c.set("px", "two");
  EXPECT_THROW(c.get_int("px"), ValidationError);
  c.set("symmetric", "maybe");
  EXPECT_THROW(c.get_bool("symmetric"), ValidationError);
  EXPECT_THROW(c.set("nope", "1"), ValidationError);
}

TEST(Config, SchemaKeysAreUnique) {
  std::set<std::string> names;
  for (const ConfigKey& k : config_schema()) EXPECT_TRUE(names.insert(k.name).second) << k.name;
}

TEST(Cli, UsageErrorsExitTwoWithOneLine) {
  Result r = cli({});
  EXPECT_EQ(r.code, kExitUsage);
  r = cli({"run", "--n", "7"});
  EXPECT_EQ(r.code, kExitUsage);
  EXPECT_EQ(lines(r.err).size(), 1u);
  EXPECT_NE(r.err.find("error: usage: invalid n"), std::string::npos) << r.err;
  r = cli({"run", "--no-such-flag", "1"});
  EXPECT_EQ(r.code, kExitUsage);
  EXPECT_EQ(r.err.rfind("error: usage:", 0), 0u);
  r = cli({"run", "--kernel", "nope"});
  EXPECT_EQ(r.code, kExitUsage);
  r = cli({"run", "--engine", "swept", "--substeps", "12"});
  EXPECT_EQ(r.code, kExitUsage);
  EXPECT_NE(r.err.find("substeps"), std::string::npos);
  r = cli({"bench", "--clock", "sundial"});
  EXPECT_EQ(r.code, kExitUsage);
}

TEST(Cli, HelpExitsZero) { EXPECT_EQ(cli({"run", "--help"}).code, kExitOk); }

TEST(Cli, NumericBlowUpExitsThree) {
  const Result r = cli({"run", "--kernel", "euler", "--engine", "serial", "--n", "4", "--dt", "1", "--pulse", "0.5",
                        "--cycles", "4"});
  EXPECT_EQ(r.code, kExitNumeric) << r.err;
  EXPECT_EQ(r.err.rfind("error: numeric:", 0), 0u);
}

TEST(Cli, UnreachablePeerExitsFour) {
  TempDir dir;
  const fs::path roster = dir / "roster.txt";
  std::ofstream(roster) << "0 0 0 127.0.0.1 " << testing::free_port() << "\n1 1 0 127.0.0.1 "
                        << testing::free_port() << "\n";
  const Result r = cli({"run", "--transport", "tcp", "--roster", roster.string(), "--rank", "1", "--px", "2",
                        "--py", "1", "--timeout_ms", "300", "--kernel", "increment"});
  EXPECT_EQ(r.code, kExitTransport) << r.err;
  EXPECT_EQ(r.err.rfind("error: transport:", 0), 0u);
}

TEST(Run, IncrementOneCycleSnapshotIsAllNine) {
  TempDir dir;
  const fs::path snap = dir / "inc.swf";
  const Result r = cli({"run", "--kernel", "increment", "--engine", "swept", "--px", "2", "--py", "2", "--n", "8",
                        "--cycles", "1", "--snapshot", snap.string()});
  ASSERT_EQ(r.code, kExitOk) << r.err;
  const GlobalField f = decode_field(read_file(snap));
  EXPECT_EQ(f.width, 16);
  EXPECT_EQ(f.step, 8);
  for (double v : f.values) ASSERT_EQ(v, 9.0);
  const auto rows = lines(r.out);
  ASSERT_EQ(rows.size(), 2u);
  const auto fields = csv_fields(rows[1]);
  ASSERT_EQ(fields.size(), 11u);
  EXPECT_EQ(fields[1], "swept");
  EXPECT_EQ(fields[7], "8");
  // Two panels go out in each of the cycle's four exchange rounds.
  EXPECT_EQ(fields[9], "8");
}

TEST(Run, SerialAndSweptSnapshotsAreByteIdentical) {
  TempDir dir;
  std::vector<Bytes> snaps;
  for (const char* engine : {"serial", "swept", "classic"}) {
    const fs::path snap = dir / (std::string(engine) + ".swf");
    const Result r = cli({"run", "--kernel", "wave", "--engine", engine, "--px", "2", "--py", "3", "--n", "8",
                          "--cycles", "3", "--snapshot", snap.string()});
    ASSERT_EQ(r.code, kExitOk) << r.err;
    snaps.push_back(read_file(snap));
  }
  EXPECT_FALSE(snaps[0].empty());
  EXPECT_EQ(snaps[0], snaps[1]);
  EXPECT_EQ(snaps[0], snaps[2]);
}

TEST(Run, ConfigFileAndCsvPath) {
  TempDir dir;
  const fs::path cfg = dir / "run.ini";
  const fs::path csv = dir / "out.csv";
  std::ofstream(cfg) << "[kernel]\nkernel = identity\n[topology]\npx = 1\npy = 1\nn = 4\n[run]\nengine = classic\n"
                     << "substeps = 3\ncsv = " << csv.string() << "\n";
  const Result r = cli({"run", "--config", cfg.string()});
  ASSERT_EQ(r.code, kExitOk) << r.err;
  EXPECT_TRUE(r.out.empty());
  std::ifstream in(csv);
  std::string header, row;
  std::getline(in, header);
  std::getline(in, row);
  EXPECT_EQ(header.rfind("kernel,engine,px,py,n,points_per_rank", 0), 0u);
  EXPECT_EQ(row.rfind("identity,classic,1,1,4,16,0,3,", 0), 0u) << row;
}

TEST(Bench, CsvRowsForEveryNAndEngine) {
  const Result r = cli({"bench", "--kernel", "wave", "--n_list", "4,8", "--repetitions", "1", "--warmup", "0",
                        "--target_substeps", "8"});
  ASSERT_EQ(r.code, kExitOk) << r.err;
  const auto rows = lines(r.out);
  ASSERT_EQ(rows.size(), 5u);
  EXPECT_EQ(rows[0],
            "kernel,engine,px,py,n,points_per_rank,tau_injected_us,substeps,us_per_substep,messages_per_rank,"
            "bytes_per_rank");
  EXPECT_EQ(csv_fields(rows[1])[1], "swept");
  EXPECT_EQ(csv_fields(rows[2])[1], "classic");
  EXPECT_EQ(csv_fields(rows[3])[4], "8");
  EXPECT_GT(std::stod(csv_fields(rows[4])[8]), 0.0);
}

TEST(Bench, OddNInListRejected) { EXPECT_EQ(cli({"bench", "--n_list", "8,9"}).code, kExitUsage); }

TEST(Model, PresetsProduceCurveAndOptimum) {
  const Result r = cli({"model", "--s_preset", "Nehalem-FV", "--tau_preset", "EC2", "--n_max", "64"});
  ASSERT_EQ(r.code, kExitOk) << r.err;
  const auto rows = lines(r.out);
  ASSERT_EQ(rows.size(), 1u + 31u + 1u);
  EXPECT_EQ(rows[0], "n,s,tau,term_compute,term_latency,total");
  EXPECT_EQ(rows.back().rfind("# optimal_n=20 ", 0), 0u) << rows.back();
  EXPECT_NE(rows.back().find("latency_barrier=broken"), std::string::npos);
}

TEST(Model, ZeroLatencyPicksSmallestN) {
  const Result r = cli({"model", "--s", "1e-9", "--tau", "0", "--n_min", "6", "--n_max", "20"});
  ASSERT_EQ(r.code, kExitOk) << r.err;
  EXPECT_EQ(lines(r.out).back().rfind("# optimal_n=6 ", 0), 0u);
}

TEST(Verify, SmallSweepPasses) {
  const Result r = cli({"verify", "--max_px", "2", "--max_py", "2", "--n_values", "4,8", "--max_cycles", "2"});
  EXPECT_EQ(r.code, kExitOk) << r.out << r.err;
  EXPECT_NE(r.out.find("verify: 160 comparisons"), std::string::npos) << r.out;
}

TEST(Verify, OneByOnePassesTrivially) {
  const Result r = cli({"verify", "--max_px", "1", "--max_py", "1", "--n_values", "4"});
  EXPECT_EQ(r.code, kExitOk) << r.out;
}

TEST(Verify, MiswiredBridgeReportsDivergence) {
  const Result r = cli({"verify", "--fault", "miswire", "--kernels", "linear", "--n_values", "8"});
  EXPECT_EQ(r.code, kExitDivergence);
  EXPECT_EQ(r.out.rfind("divergence: kernel=linear engine=swept ", 0), 0u) << r.out;
  EXPECT_NE(r.out.find(" rank="), std::string::npos);
  EXPECT_NE(r.out.find(" step="), std::string::npos);
}

// Four processes, one rank each, over loopback TCP.
TEST(Binary, TcpRunMatchesInProcSnapshot) {
  const char* bin = std::getenv("SWEPT2D_BIN");
  if (bin == nullptr) GTEST_SKIP() << "SWEPT2D_BIN not set";
  TempDir dir;
  const fs::path roster = dir / "roster.txt";
  {
    std::ofstream out(roster);
    for (int r = 0; r < 4; ++r) out << r << ' ' << r % 2 << ' ' << r / 2 << " 127.0.0.1 " << testing::free_port() << '\n';
  }
  const std::string common = " run --kernel wave --px 2 --py 2 --n 8 --cycles 2 --transport tcp --timeout_ms 20000 --roster " +
                             roster.string();
  std::vector<std::future<int>> procs;
  for (int r = 0; r < 4; ++r) {
    const std::string cmd = std::string(bin) + common + " --rank " + std::to_string(r) +
                            (r == 0 ? " --snapshot " + (dir / "tcp.swf").string() : "") + " > " +
                            (dir / ("out" + std::to_string(r))).string() + " 2>&1";
    procs.push_back(std::async(std::launch::async, [cmd] { return std::system(cmd.c_str()); }));
  }
  for (auto& p : procs) EXPECT_EQ(p.get(), 0);
  ASSERT_EQ(cli({"run", "--kernel", "wave", "--px", "2", "--py", "2", "--n", "8", "--cycles", "2", "--snapshot",
                 (dir / "inproc.swf").string()})
                .code,
            kExitOk);
  EXPECT_EQ(read_file(dir / "tcp.swf"), read_file(dir / "inproc.swf"));
}

TEST(Binary, ExitCodePropagates) {
  const char* bin = std::getenv("SWEPT2D_BIN");
  if (bin == nullptr) GTEST_SKIP() << "SWEPT2D_BIN not set";
  const int status = std::system((std::string(bin) + " run --n 7 > /dev/null 2>&1").c_str());
  ASSERT_TRUE(WIFEXITED(status));
  EXPECT_EQ(WEXITSTATUS(status), kExitUsage);
}

}  // namespace
}  // namespace swept
