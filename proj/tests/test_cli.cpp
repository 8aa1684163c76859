#include <gtest/gtest.h>
#include <sys/wait.h>

#include <array>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

namespace {
struct Result {
  int code;
  std::string out;
};

Result run(const std::string& args) {
  const std::string cmd = std::string(RCE_CLI_PATH) + " " + args + " 2>&1";
  FILE* p = popen(cmd.c_str(), "r");
  if (!p) return {-1, ""};
  std::string out;
  std::array<char, 4096> buf;
  while (std::size_t k = std::fread(buf.data(), 1, buf.size(), p)) out.append(buf.data(), k);
  const int status = pclose(p);
  return {WIFEXITED(status) ? WEXITSTATUS(status) : -1, out};
}

std::string slurp(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream s;
  s << in.rdbuf();
  return s.str();
}

std::filesystem::path tmp(const std::string& name) { return std::filesystem::temp_directory_path() / ("rce_cli_" + name); }
}  // namespace

TEST(Cli, ListPresets) {
  const auto r = run("list-presets");
  EXPECT_EQ(r.code, 0);
  EXPECT_NE(r.out.find("linear4"), std::string::npos);
  EXPECT_NE(r.out.find("grid9-minimal"), std::string::npos);
}

TEST(Cli, SolveAndCompile) {
  auto r = run("solve --preset linear4 --pattern 1,0");
  EXPECT_EQ(r.code, 0);
  EXPECT_NE(r.out.find("lambda_max = 0.75"), std::string::npos);
  r = run("compile-flips --preset linear4 --c 1,-0.5 --duration 2");
  EXPECT_EQ(r.code, 0);
  EXPECT_NE(r.out.find("flips=1"), std::string::npos);
}

TEST(Cli, RunPassesAndFails) {
  EXPECT_EQ(run("run --preset cross8 --protocol gate --subset 1,2,3 --mode physical").code, 0);
  EXPECT_EQ(run("run --preset linear4 --protocol cz --forced -1 --mode physical --control local").code, 0);
  EXPECT_EQ(run("run --preset cross8 --protocol graph --edges 1-2,2-3,3-4").code, 0);
  // too few Trotter slices: the oracle check fails
  EXPECT_EQ(run("run --preset cross8 --protocol rotation --mode physical --trotter 2").code, 1);
}

TEST(Cli, ConfigErrors) {
  EXPECT_EQ(run("run --preset nope --protocol gate").code, 2);
  EXPECT_EQ(run("run --preset linear4 --protocol gate --subset 3").code, 2);
  EXPECT_EQ(run("run --preset linear4 --protocol warp").code, 2);
  EXPECT_EQ(run("solve --preset linear4 --pattern 1,x").code, 2);
  EXPECT_EQ(run("solve --preset linear4 --pattern 1,0 --bogus 1").code, 2);
  EXPECT_EQ(run("noise --scenario cross --sigma 0.1 --estimator monte-carlo --samples 100").code, 2);
  EXPECT_EQ(run("noise --scenario cross --sigma -1").code, 2);
  EXPECT_EQ(run("reproduce table9").code, 2);
  EXPECT_EQ(run("run --config /nonexistent.json --protocol gate").code, 2);
  const auto cfg = tmp("unknown_key.json");
  std::ofstream(cfg) << R"({"preset": "linear4", "protocol": "gate", "colour": "red"})";
  EXPECT_EQ(run("run --config " + cfg.string()).code, 2);
  std::filesystem::remove(cfg);
}

TEST(Cli, ResourceCap) {
  EXPECT_EQ(run("run --preset grid9 --protocol heisenberg").code, 3);
  // 26 qubits exceed the state-vector cap in physical mode
  const auto layout = tmp("big_layout.json");
  std::ofstream out(layout);
  out << R"({"controls": [)";
  for (int i = 0; i < 23; ++i) out << (i ? "," : "") << "[" << i << ", 0]";
  out << R"(], "targets": [[0, 1], [1, 1], [2, 1]]})";
  out.close();
  EXPECT_EQ(run("run --layout " + layout.string() + " --protocol gate --mode physical").code, 3);
  std::filesystem::remove(layout);
}

TEST(Cli, ConfigOverridesFlags) {
  const auto cfg = tmp("override.json");
  std::ofstream(cfg) << R"({"preset": "linear4", "pattern": "0,1"})";
  const auto a = run("solve --preset cross8 --pattern 1,1,1,1 --config " + cfg.string());
  const auto b = run("solve --preset linear4 --pattern 0,1");
  EXPECT_EQ(a.code, 0);
  EXPECT_EQ(a.out, b.out);
  std::filesystem::remove(cfg);
}

TEST(Cli, OutputsAreByteIdentical) {
  const auto j1 = tmp("a.json"), j2 = tmp("b.json"), c1 = tmp("a.csv"), c2 = tmp("b.csv");
  const std::string noise = "noise --scenario cross --sigma 0.2 --estimator monte-carlo --samples 3000 --seed 5 ";
  ASSERT_EQ(run(noise + "--json " + j1.string() + " --csv " + c1.string()).code, 0);
  ASSERT_EQ(run(noise + "--threads 2 --json " + j2.string() + " --csv " + c2.string()).code, 0);
  EXPECT_FALSE(slurp(j1).empty());
  EXPECT_EQ(slurp(j1), slurp(j2));
  EXPECT_EQ(slurp(c1), slurp(c2));
  const std::string graph = "run --preset cross8 --protocol graph --edges 1-2,2-3 --mode physical --seed 9 --json ";
  ASSERT_EQ(run(graph + j1.string()).code, 0);
  ASSERT_EQ(run(graph + j2.string()).code, 0);
  EXPECT_EQ(slurp(j1), slurp(j2));
  ASSERT_EQ(run("reproduce appG,appH --json " + j1.string() + " --csv " + c1.string()).code, 0);
  ASSERT_EQ(run("reproduce appG,appH --json " + j2.string() + " --csv " + c2.string()).code, 0);
  EXPECT_EQ(slurp(j1), slurp(j2));
  EXPECT_EQ(slurp(c1), slurp(c2));
  for (const auto& p : {j1, j2, c1, c2}) std::filesystem::remove(p);
}
