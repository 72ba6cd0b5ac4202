#include <gtest/gtest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include "tdvpinn/config.hpp"
#include "tdvpinn/errors.hpp"
#include "tdvpinn/io.hpp"
#include "tdvpinn/training.hpp"

using namespace tdvpinn;
namespace fs = std::filesystem;

namespace {

const fs::path kRoot = fs::temp_directory_path() / "tdvpinn_cli_test";

int run(const std::string& args) {
  const std::string cmd = std::string(TDVPINN_CLI_PATH) + " " + args + " > /dev/null 2>&1";
  const int status = std::system(cmd.c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

std::string dir(const std::string& name) { return (kRoot / name).string(); }

}  // namespace

TEST(Config, ApplyAndResolve) {
  RunConfig c;
  apply_setting(c, "n-time", "64");
  apply_setting(c, "lagged_coefficients", "true");
  apply_setting(c, "snapshot-steps", "[1, 8, 64]");
  const RunConfig r = resolve_defaults(c);
  EXPECT_EQ(r.n_time, 64);
  EXPECT_TRUE(r.lagged_coefficients);
  EXPECT_EQ(r.iterations, 20000);
  EXPECT_EQ(r.schedule, "exponential");
  EXPECT_EQ(r.snapshot_steps, (std::vector<int>{1, 8, 64}));
  EXPECT_THROW(apply_setting(c, "bogus", "1"), ConfigError);
  EXPECT_THROW(apply_setting(c, "n_time", "abc"), ConfigError);
  EXPECT_THROW(apply_setting(c, "iterations", "-3"), ConfigError);
}

TEST(Config, Defaults) {
  RunConfig toy;
  const RunConfig t = resolve_defaults(toy);
  EXPECT_EQ(t.snapshot_steps, (std::vector<int>{1, 32, 64, 128}));
  EXPECT_EQ(t.n_test, 20);
  EXPECT_EQ(t.oracle_cells, 512);
  RunConfig coffee;
  coffee.problem = "coffee";
  const RunConfig c = resolve_defaults(coffee);
  EXPECT_EQ(c.iterations, 100000);
  EXPECT_EQ(c.schedule, "cosine");
  EXPECT_DOUBLE_EQ(c.lr0, 1e-3);
  EXPECT_EQ(c.n_test, 64);
  EXPECT_EQ(c.n_int, 256);
  RunConfig bad;
  bad.problem = "wave";
  EXPECT_THROW(resolve_defaults(bad), ConfigError);
  bad.problem = "toy";
  bad.snapshot_steps = {0};
  EXPECT_THROW(resolve_defaults(bad), ConfigError);
}

TEST(Config, FileAndHash) {
  fs::create_directories(kRoot);
  const fs::path f = kRoot / "run.cfg";
  std::ofstream(f) << "# comment\n[train]\nproblem = toy\niterations = 50  # short\nseed = 4\n";
  RunConfig c;
  load_config_file(f.string(), c);
  EXPECT_EQ(c.iterations, 50);
  EXPECT_EQ(c.seed, 4u);
  const RunConfig r = resolve_defaults(c);
  RunConfig other = r;
  other.out_dir = "elsewhere";
  EXPECT_EQ(config_hash(r), config_hash(other));
  other.seed = 5;
  EXPECT_NE(config_hash(r), config_hash(other));
  EXPECT_EQ(header_comment(r).rfind("# tdvpinn 0.1.0 config=", 0), 0u);
  std::ofstream(kRoot / "bad.cfg") << "problem toy\n";
  EXPECT_THROW(load_config_file((kRoot / "bad.cfg").string(), c), ConfigError);
}

TEST(Io, CheckpointRoundTripIsExact) {
  fs::create_directories(kRoot);
  const MLPState a = init_mlp(9, {1, 7, 5, 3});
  const std::string p = (kRoot / "ck.txt").string();
  write_checkpoint(a, p, "tdvpinn 0.1.0 config=x");
  const MLPState b = read_checkpoint(p);
  EXPECT_EQ(a.widths, b.widths);
  EXPECT_EQ(flatten(a), flatten(b));
  std::ofstream(kRoot / "notck.txt") << "hello\n";
  EXPECT_THROW(read_checkpoint((kRoot / "notck.txt").string()), IngestionError);
  EXPECT_THROW(read_checkpoint((kRoot / "missing.txt").string()), IngestionError);
}

TEST(Training, SeededRunsAreIdentical) {
  const ProblemSpec p = make_toy_problem(16, 6, 32);
  TrainOptions o;
  o.widths = standard_widths(16, 2, 8);
  o.iterations = 30;
  o.schedule = {ScheduleKind::exponential, 1e-2, 0.9, 1000.0, 30.0};
  const TrainResult a = train(p, o), b = train(p, o);
  ASSERT_EQ(a.history.size(), 30u);
  for (std::size_t i = 0; i < 30; ++i) EXPECT_EQ(a.history[i].loss, b.history[i].loss);
  EXPECT_EQ(flatten(a.state), flatten(b.state));
}

TEST(Training, CheckpointCadence) {
  const ProblemSpec p = make_toy_problem(8, 4, 16);
  TrainOptions o;
  o.widths = standard_widths(8, 1, 4);
  o.iterations = 25;
  o.checkpoint_every = 10;
  std::vector<long> seen;
  train(p, o, [&](long it, const MLPState&) { seen.push_back(it); });
  EXPECT_EQ(seen, (std::vector<long>{10, 20, 25}));
  o.iterations = 20;
  seen.clear();
  train(p, o, [&](long it, const MLPState&) { seen.push_back(it); });
  EXPECT_EQ(seen, (std::vector<long>{10, 20}));
}

TEST(Training, ConstantTableMatchesLinearControl) {
  CoffeeSettings cs;
  cs.n_time = 8;
  cs.n_test = 4;
  cs.n_int = 16;
  const PropertyTable table = constant_property_table();
  const auto sc = Nondimensionalization::from_table(table, cs.T_initial, cs.d);
  const ProblemSpec p = make_coffee_problem(
      table, synthetic_boundary_series(sc.to_seconds(cs.t_end), sc.to_seconds(cs.boundary_tau)), cs);
  TrainOptions o;
  o.widths = standard_widths(8, 2, 6);
  o.iterations = 20;
  const TrainResult a = train(p, o), b = train(linear_control(p), o);
  for (std::size_t i = 0; i < a.history.size(); ++i) EXPECT_NEAR(a.history[i].loss, b.history[i].loss, 1e-12 * b.history[i].loss);
}

TEST(Cli, TrainIsDeterministicAndStamped) {
  fs::remove_all(kRoot / "a");
  fs::remove_all(kRoot / "b");
  ASSERT_EQ(run("train --problem toy --iterations 200 --seed 0 --checkpoint-every 100 --out-dir " + dir("a")), 0);
  ASSERT_EQ(run("train --problem toy --iterations 200 --seed 0 --checkpoint-every 100 --out-dir " + dir("b")), 0);
  for (const auto* name : {"history.csv", "snapshots.csv", "errors.csv", "checkpoint.txt", "checkpoint_100.txt"}) {
    EXPECT_EQ(slurp(kRoot / "a" / name), slurp(kRoot / "b" / name)) << name;
  }
  for (const auto& e : fs::directory_iterator(kRoot / "a")) {
    const std::string text = slurp(e.path());
    const bool stamped = text.rfind("# tdvpinn 0.1.0 config=", 0) == 0 || text.rfind("# tdvpinn-checkpoint v1 tdvpinn 0.1.0 config=", 0) == 0;
    EXPECT_TRUE(stamped) << e.path();
  }
}

TEST(Cli, ValidateUntrainedSkipsTrends) {
  fs::remove_all(kRoot / "u");
  ASSERT_EQ(run("train --problem toy --iterations 0 --out-dir " + dir("u")), 0);
  EXPECT_EQ(run("validate --out-dir " + dir("u")), 0);
  const std::string report = slurp(kRoot / "u" / "validation.csv");
  EXPECT_NE(report.find("rel_L2,SKIP"), std::string::npos);
  EXPECT_NE(report.find("oracle_rel_L2,PASS"), std::string::npos);
}

TEST(Cli, Errors) {
  EXPECT_NE(run("train --problem wave --out-dir " + dir("e")), 0);
  EXPECT_NE(run("validate --problem toy --out-dir " + dir("nothing_here")), 0);
  EXPECT_NE(run("train --set n_time=abc --out-dir " + dir("e")), 0);
  EXPECT_NE(run("train --problem coffee --properties /nonexistent.csv --out-dir " + dir("e")), 0);
  EXPECT_NE(run("frobnicate"), 0);
}

TEST(Cli, DivergenceKeepsLastCheckpoint) {
  fs::remove_all(kRoot / "d");
  EXPECT_EQ(run("train --problem toy --iterations 50 --schedule constant --lr 1e300 --checkpoint-every 1 --out-dir " +
                dir("d")),
            3);
  EXPECT_TRUE(fs::exists(kRoot / "d" / "checkpoint.txt"));
  EXPECT_TRUE(fs::exists(kRoot / "d" / "history.csv"));
}

TEST(Cli, OracleAndSweeps) {
  fs::remove_all(kRoot / "o");
  const fs::path table = kRoot / "constant.csv";
  fs::create_directories(kRoot);
  write_property_table(constant_property_table(), table.string());
  EXPECT_EQ(run("oracle --problem coffee --properties " + table.string() + " --out-dir " + dir("o")), 0);
  EXPECT_TRUE(fs::exists(kRoot / "o" / "midpoint.csv"));
  EXPECT_EQ(run("oracle --problem coffee --stride 4 --out-dir " + dir("o")), 0);
  for (const auto& row : detail::read_numeric_csv((kRoot / "o" / "picard.csv").string(), {"n", "iterations"})) {
    EXPECT_LE(row[1], 50.0);
  }
  EXPECT_EQ(run("sweep --kind dt --out-dir " + dir("o")), 0);
  EXPECT_EQ(run("sweep --kind ntest --states 2 --out-dir " + dir("o")), 0);
  const auto rows = detail::read_numeric_csv((kRoot / "o" / "sweep_dt.csv").string(), {"n_time", "dt", "max_residual", "order"});
  ASSERT_EQ(rows.size(), 3u);
  EXPECT_NEAR(rows[2][3], 2.0, 0.5);
}

TEST(Cli, DataDirectoryFromEnvironment) {
  fs::create_directories(kRoot / "data");
  write_property_table(constant_property_table(), (kRoot / "data" / "flat.csv").string());
  setenv("TDVPINN_DATA_DIR", (kRoot / "data").c_str(), 1);
  EXPECT_EQ(resolve_data_path("flat.csv"), (kRoot / "data" / "flat.csv").string());
  RunConfig c;
  c.problem = "coffee";
  c.properties = "flat.csv";
  EXPECT_TRUE(build_problem(resolve_defaults(c)).coeffs.constant);
  unsetenv("TDVPINN_DATA_DIR");
}
