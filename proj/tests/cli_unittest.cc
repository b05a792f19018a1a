#include <sys/wait.h>

#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iterator>
#include <string>

#include "aenr/wav_io.h"
#include "gtest/gtest.h"

namespace {

namespace fs = std::filesystem;

struct Run {
  int code = -1;
  std::string output;
};

// Runs the CLI with stdout and stderr captured.
Run Cli(const std::string& args) {
  Run r;
  const std::string cmd = std::string(AENR_CLI_PATH) + " " + args + " 2>&1";
  FILE* pipe = popen(cmd.c_str(), "r");
  if (!pipe) return r;
  char buf[4096];
  while (std::fgets(buf, sizeof buf, pipe)) r.output += buf;
  const int status = pclose(pipe);
  r.code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  return r;
}

std::string Slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), {}};
}

class CliTest : public ::testing::Test {
 protected:
  void SetUp() override {
    dir_ = fs::temp_directory_path() /
           ("aenr_cli_" + std::string(::testing::UnitTest::GetInstance()->current_test_info()->name()));
    fs::remove_all(dir_);
    fs::create_directories(dir_);
  }
  void TearDown() override { fs::remove_all(dir_); }
  std::string P(const std::string& name) const { return (dir_ / name).string(); }

  void Simulate(const std::string& sub, const std::string& extra = "") {
    const auto r = Cli("simulate --scenario dt --ser 0 --snr 20 --delay-ms 50 --duration 3 --seed 7 --out-dir " +
                       P(sub) + " " + extra);
    ASSERT_EQ(r.code, 0) << r.output;
  }

  fs::path dir_;
};

TEST_F(CliTest, SimulateIsDeterministic) {
  Simulate("a");
  Simulate("b");
  for (const char* f : {"x.wav", "y.wav", "s.wav", "e.wav", "v.wav", "meta.txt"}) {
    ASSERT_TRUE(fs::exists(dir_ / "a" / f)) << f;
    EXPECT_EQ(Slurp(dir_ / "a" / f), Slurp(dir_ / "b" / f)) << f;
  }
  EXPECT_NE(Slurp(dir_ / "a" / "meta.txt").find("ser_db"), std::string::npos);
}

TEST_F(CliTest, SimulateRejectsOutOfRangeSer) {
  const auto r = Cli("simulate --ser 25 --out-dir " + P("bad"));
  EXPECT_EQ(r.code, 2);
  EXPECT_NE(r.output.find("ser_db"), std::string::npos) << r.output;
}

TEST_F(CliTest, UnknownFlagIsUsageError) {
  EXPECT_EQ(Cli("simulate --no-such-flag 1").code, 2);
  EXPECT_EQ(Cli("no-such-command").code, 2);
}

TEST_F(CliTest, StreamingOutputMatchesBatch) {
  Simulate("s", "--format float32");
  const std::string io = "--mic " + P("s/x.wav") + " --far " + P("s/y.wav");
  ASSERT_EQ(Cli("process " + io + " --out " + P("batch.wav") + " --format float32").code, 0);
  ASSERT_EQ(Cli("process " + io + " --out " + P("stream.wav") + " --format float32 --streaming").code, 0);
  EXPECT_EQ(Slurp(P("batch.wav")), Slurp(P("stream.wav")));
  const auto out = aenr::ReadWav(P("batch.wav"));
  EXPECT_EQ(out.samples.size(), aenr::ReadWav(P("s/x.wav")).samples.size());
}

TEST_F(CliTest, ProcessWithReportAndMetrics) {
  Simulate("s");
  const auto r = Cli("process --mic " + P("s/x.wav") + " --far " + P("s/y.wav") + " --out " + P("kf.wav") +
                     " --stage kf-only --near-ref " + P("s/s.wav") + " --echo-ref " + P("s/e.wav") +
                     " --report-csv " + P("report.csv"));
  ASSERT_EQ(r.code, 0) << r.output;
  EXPECT_EQ(Slurp(P("report.csv")).rfind("metric,value\n", 0), 0u);
  const auto m = Cli("metrics --mic " + P("s/x.wav") + " --processed " + P("kf.wav") + " --near " + P("s/s.wav") +
                     " --echo " + P("s/e.wav"));
  ASSERT_EQ(m.code, 0) << m.output;
  EXPECT_NE(m.output.find("si_sdr_db"), std::string::npos);
  EXPECT_NE(m.output.find("erle_db"), std::string::npos);
}

TEST_F(CliTest, ZeroLengthMicIsConfigError) {
  Simulate("s");
  aenr::WriteWav(P("empty.wav"), std::vector<double>{}, aenr::WavFormat::kPcm16);
  const auto r = Cli("process --mic " + P("empty.wav") + " --far " + P("s/y.wav") + " --out " + P("o.wav"));
  EXPECT_EQ(r.code, 2) << r.output;
  EXPECT_FALSE(fs::exists(P("o.wav")));
}

TEST_F(CliTest, MissingFileAndBadConfig) {
  EXPECT_NE(Cli("process --mic /nonexistent.wav --far /nonexistent.wav --out " + P("o.wav")).code, 0);
  std::ofstream(P("bad.cfg")) << "kalman.num_partitions = 0\n";
  Simulate("s");
  const auto r = Cli("process --mic " + P("s/x.wav") + " --far " + P("s/y.wav") + " --out " + P("o.wav") +
                     " --config " + P("bad.cfg"));
  EXPECT_EQ(r.code, 2);
  EXPECT_NE(r.output.find("num_partitions"), std::string::npos) << r.output;
}

TEST_F(CliTest, ProbeDelayCsv) {
  Simulate("s");
  const auto r = Cli("probe-delay --mic " + P("s/x.wav") + " --far " + P("s/y.wav") + " --out " + P("p.csv"));
  ASSERT_EQ(r.code, 0) << r.output;
  const auto csv = Slurp(P("p.csv"));
  EXPECT_EQ(csv.rfind("# lag_of_d1=0", 0), 0u);
  EXPECT_NE(csv.find("frame,d1,"), std::string::npos);
}

TEST_F(CliTest, FeaturesDumpTable) {
  const auto r = Cli("features-dump --table --layout csubfr");
  ASSERT_EQ(r.code, 0) << r.output;
  EXPECT_EQ(r.output.rfind("subband,channel,position,first_bin\n", 0), 0u);
  EXPECT_NE(r.output.find("\n27,1,1,54\n"), std::string::npos) << r.output.substr(0, 300);
}

TEST_F(CliTest, BenchReportsComplexity) {
  const auto r = Cli("bench --seconds 3 --repeat 1");
  ASSERT_EQ(r.code, 0) << r.output;
  EXPECT_NE(r.output.find("332455"), std::string::npos) << r.output;
  EXPECT_NE(r.output.find("reference 0.69 M"), std::string::npos);
  EXPECT_NE(r.output.find("RTF"), std::string::npos);
}

}  // namespace
