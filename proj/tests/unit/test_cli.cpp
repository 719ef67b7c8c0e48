// Drives the command-line tool end to end through the shell.

#include "tvvar/io.hpp"

#include <gtest/gtest.h>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <sys/wait.h>

using namespace tvvar;
namespace fs = std::filesystem;

namespace {

struct CliResult {
  int code = -1;
  std::string out;
};

class Cli : public testing::Test {
 protected:
  void SetUp() override {
    dir_ = fs::path(testing::TempDir()) / ("tvvar_cli_" + std::string(testing::UnitTest::GetInstance()->current_test_info()->name()));
    fs::create_directories(dir_);
  }
  void TearDown() override { fs::remove_all(dir_); }

  std::string path(const std::string& name) const { return (dir_ / name).string(); }

  static CliResult run(const std::string& args) {
    const std::string cmd = std::string(TVVAR_CLI_PATH) + " " + args + " 2>/dev/null";
    CliResult r;
    FILE* pipe = popen(cmd.c_str(), "r");
    if (!pipe) return r;
    char buf[4096];
    std::size_t n = 0;
    while ((n = fread(buf, 1, sizeof buf, pipe)) > 0) r.out.append(buf, n);
    const int status = pclose(pipe);
    r.code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
    return r;
  }

  static std::vector<OutputRecord> records(const std::string& text, const std::string& kind = {}) {
    std::istringstream in(text);
    return read_records(in, kind);
  }

  void write(const std::string& name, const std::string& text) const { std::ofstream(path(name)) << text; }

  std::string simulate(int p, int k, int n, int seed = 1) {
    const std::string csv = path("sim.csv");
    const auto r = run("simulate -p " + std::to_string(p) + " -k " + std::to_string(k) + " -n " + std::to_string(n) +
                       " --seed " + std::to_string(seed) + " -o " + csv);
    EXPECT_EQ(r.code, 0);
    return csv;
  }

  fs::path dir_;
};

std::string read_file(const std::string& p) {
  std::ifstream in(p);
  return {std::istreambuf_iterator<char>(in), {}};
}

}  // namespace

TEST_F(Cli, EstimateEmitsOneRecordPerPostWarmupSample) {
  const std::string csv = simulate(3, 2, 1000);
  for (const char* method : {"sope", "gsope", "kf"}) {
    const auto r = run(std::string("estimate --method ") + method + " -k 2 -i " + csv);
    ASSERT_EQ(r.code, 0) << method;
    const auto recs = records(r.out, "params");
    ASSERT_EQ(recs.size(), 950u) << method;
    EXPECT_EQ(recs.front().t, 50);
    EXPECT_EQ(recs.back().t, 999);
    EXPECT_EQ(recs.front().payload["method"], method);
  }
}

TEST_F(Cli, SimulateWritesCoefficients) {
  const std::string coeffs = path("truth.jsonl");
  const auto r = run("simulate -p 2 -k 1 -n 300 --seed 3 --coefficients " + coeffs);
  ASSERT_EQ(r.code, 0);
  std::istringstream csv(r.out);
  EXPECT_EQ(ingest_csv(csv).size(), 300u);
  const auto truth = records(read_file(coeffs), "params");
  ASSERT_EQ(truth.size(), 300u);
  EXPECT_EQ(truth[0].payload["method"], "truth");
  // Same seed, same output.
  EXPECT_EQ(run("simulate -p 2 -k 1 -n 300 --seed 3").out, r.out);
}

TEST_F(Cli, ExitCodes) {
  EXPECT_EQ(run("estimate --no-such-flag").code, 2);
  EXPECT_EQ(run("").code, 2);
  write("bad.csv", "a,b\n1,2\n1,x\n");
  EXPECT_EQ(run("estimate -i " + path("bad.csv")).code, 3);
  EXPECT_EQ(run("estimate -i " + path("missing.csv")).code, 3);
  EXPECT_EQ(run("estimate --lambda -5 -i " + simulate(2, 1, 200)).code, 3);
  EXPECT_EQ(run("connectivity --bands x:400-600 -i " + simulate(2, 1, 200)).code, 3);

  // Finite but enormous inputs overflow the normal equations.
  std::string huge = "a,b\n";
  for (int t = 0; t < 100; ++t) huge += (t % 2 ? "1e300,-1e300\n" : "-1e300,1e300\n");
  write("huge.csv", huge);
  EXPECT_EQ(run("estimate -i " + path("huge.csv")).code, 4);
}

TEST_F(Cli, ConfigFlagsOverrideFile) {
  write("cfg.json", R"({"method": "kf", "penalty": {"lambda": 77}, "kf": {"q_sigma": 0.5}})");
  const auto printed = run("estimate --config " + path("cfg.json") + " --lambda 88 --print-config");
  ASSERT_EQ(printed.code, 0);
  const auto j = json::parse(printed.out);
  EXPECT_EQ(j["method"], "kf");
  EXPECT_EQ(j["penalty"]["lambda"], 88.0);
  EXPECT_EQ(j["kf"]["q_sigma"], 0.5);
  write("typo.json", R"({"methd": "kf"})");
  EXPECT_EQ(run("estimate --config " + path("typo.json")).code, 3);
}

TEST_F(Cli, TruncatingInputOnlyDropsTrailingRecords) {
  const std::string csv = simulate(3, 1, 600, 4);
  std::istringstream in(read_file(csv));
  const auto xs = ingest_csv(in);
  const std::size_t cut = 37;
  std::ofstream short_csv(path("short.csv"));
  write_csv(short_csv, std::span(xs).first(xs.size() - cut));
  short_csv.close();
  for (const char* method : {"sope", "gsope", "kf"}) {
    const auto full = records(run(std::string("estimate --method ") + method + " -i " + csv).out);
    const auto part = records(run(std::string("estimate --method ") + method + " -i " + path("short.csv")).out);
    ASSERT_EQ(full.size(), part.size() + cut) << method;
    for (std::size_t i = 0; i < part.size(); ++i) EXPECT_EQ(full[i].to_json(), part[i].to_json()) << method << i;
  }
}

TEST_F(Cli, ConnectivityRecordsPerBand) {
  const std::string csv = simulate(3, 1, 200, 5);
  const auto r = run("connectivity --bands theta:4-12,beta:15-30 --stride 10 -i " + csv);
  ASSERT_EQ(r.code, 0);
  const auto recs = records(r.out, "connectivity");
  ASSERT_EQ(recs.size(), 2u * 15u);
  EXPECT_EQ(recs[0].payload["band"]["name"], "theta");
  EXPECT_EQ(recs[1].payload["band"]["name"], "beta");
  EXPECT_EQ(recs[0].payload["points"], 9);
  EXPECT_EQ(recs[2].t, recs[0].t + 10);
}

TEST_F(Cli, NetworkDetectsGainedAndLostEdges) {
  // Hand-made connectivity: pair (0,1) switches on at t=100, pair (0,2) switches off.
  std::ofstream f(path("conn.jsonl"));
  for (int t = 0; t < 200; ++t) {
    ConnectivityFrame fr;
    fr.t = t;
    fr.band = {"theta", 4, 12};
    Matrix m = Matrix::Identity(3, 3);
    m(0, 1) = m(1, 0) = t < 100 ? 0.1 : 0.8;
    m(0, 2) = m(2, 0) = t < 100 ? 0.8 : 0.1;
    m(1, 2) = m(2, 1) = 0.3;
    fr.coherence = fr.partial_coherence = fr.pdc = m;
    fr.points = 9;
    write_record(f, connectivity_record(fr));
  }
  f.close();
  const auto r = run("network --events cue@100 --half-width 50 -q 0.5 --measure coherence -i " + path("conn.jsonl"));
  ASSERT_EQ(r.code, 0);
  const auto recs = records(r.out, "network");
  ASSERT_EQ(recs.size(), 1u);
  const auto classes = recs[0].payload["classes"].get<std::vector<std::string>>();
  EXPECT_EQ(classes[1], "gained");
  EXPECT_EQ(classes[2], "lost");
  EXPECT_EQ(classes[5], "absent");
  EXPECT_EQ(run("network -i " + path("conn.jsonl")).code, 3);
}

TEST_F(Cli, BenchTimeRefusesOverBudgetKalman) {
  const auto r = run("bench time --method kf --grid-p 50 --grid-k 1 --iterations 100 --budget 1000000");
  ASSERT_EQ(r.code, 0);
  const auto recs = records(r.out, "timing");
  ASSERT_EQ(recs.size(), 1u);
  EXPECT_TRUE(recs[0].payload["refused"].get<bool>());
  EXPECT_EQ(recs[0].flags, std::vector<std::string>{"refused_memory_budget"});
}

TEST_F(Cli, BenchMseAndDump) {
  write("c.json", R"({"bench": {"sweep": {"lambda": [100, 1000]}}})");
  const auto r = run("bench mse --method sope --replicates 2 --design sweep --dump " + path("d.bin") + " --config " +
                     path("c.json"));
  ASSERT_EQ(r.code, 0);
  const auto recs = records(r.out, "mse");
  ASSERT_EQ(recs.size(), 2u);
  EXPECT_GT(recs[0].payload["per_param_mse"].get<double>(), 0.0);
  std::ifstream dump(path("d.bin"), std::ios::binary);
  const auto [name, m] = read_matrix_dump(dump);
  EXPECT_EQ(name, "mse_sope");
  EXPECT_EQ(m.rows(), 2);
  EXPECT_EQ(m(1, 0), 1000.0);
}
