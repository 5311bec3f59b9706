#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>
#include <sstream>

#include "fastracer/cli.hpp"

using namespace fastracer;

namespace {

struct Result {
  int code;
  std::string out;
  std::string err;
};

Result run_cli(std::vector<std::string> args, const std::string& input = "") {
  std::istringstream in(input);
  std::ostringstream out, err;
  int code = cli::run(std::move(args), in, out, err);
  return {code, out.str(), err.str()};
}

std::filesystem::path temp_file(const std::string& name) {
  return std::filesystem::temp_directory_path() / ("fastracer_cli_" + name);
}

std::string read_file(const std::filesystem::path& p) {
  std::ifstream f(p);
  return {std::istreambuf_iterator<char>(f), std::istreambuf_iterator<char>()};
}

const std::string kSequential = "write 0 1\nspawn 0 1\nread 1 1\njoin 0 1\nwrite 0 1\n";

}  // namespace

TEST(Cli, AnalyzeBuiltinReportsRace) {
  auto r = run_cli({"analyze", "--detector", "fastracer", "--trace", "builtin:fig_var1_var2"});
  EXPECT_EQ(r.code, 1);
  EXPECT_NE(r.out.find("RACE WR var=101 prior=2@1 current=3@3 line=12\n"), std::string::npos);
  EXPECT_NE(r.out.find("SUMMARY races=1 racy_vars=101\n"), std::string::npos);
}

TEST(Cli, AnalyzeCleanTraceFromStdin) {
  auto r = run_cli({"analyze", "--trace", "-"}, kSequential);
  EXPECT_EQ(r.code, 0);
  EXPECT_EQ(r.out, "SUMMARY races=0 racy_vars=\n");
}

TEST(Cli, AnalyzeWithStatsAndFastTrack) {
  auto r = run_cli({"analyze", "--trace", "builtin:fig_readers", "--stats"});
  EXPECT_EQ(r.code, 1);
  EXPECT_NE(r.out.find("STAT lca_selections=0\n"), std::string::npos) << r.out;
  auto ft = run_cli({"analyze", "--detector", "fasttrack", "--trace", "builtin:fig_readers"});
  EXPECT_EQ(ft.code, 1);
  EXPECT_NE(ft.out.find("racy_vars=200"), std::string::npos);
}

TEST(Cli, DedupCollapsesRepeats) {
  std::string t = "spawn 0 1\nwrite 1 4\nwrite 0 4\nread 0 4\nwrite 0 4\njoin 0 1\n";
  auto full = run_cli({"analyze", "--trace", "-"}, t);
  auto dedup = run_cli({"analyze", "--trace", "-", "--dedup"}, t);
  EXPECT_NE(full.out, dedup.out);
  EXPECT_NE(dedup.out.find("SUMMARY races=2"), std::string::npos) << dedup.out;
}

TEST(Cli, ThresholdAndCacheOptions) {
  auto a = run_cli({"analyze", "--trace", "builtin:fig_readers", "--threshold", "0", "--cache", "0"});
  auto b = run_cli({"analyze", "--trace", "builtin:fig_readers"});
  EXPECT_EQ(a.out, b.out);
  EXPECT_EQ(run_cli({"analyze", "--trace", "builtin:fig_readers", "--cache", "17"}).code, 2);
}

TEST(Cli, ValidateSequentialTrace) {
  auto r = run_cli({"validate", "--trace", "-", "--strict"}, kSequential);
  EXPECT_EQ(r.code, 0);
  EXPECT_EQ(r.out, "VALID events=5\n");
}

TEST(Cli, ValidateReportsErrors) {
  auto r = run_cli({"validate", "--trace", "-"}, "spawn 0 1\nspawn 0 2\njoin 1 2\n");
  EXPECT_EQ(r.code, 2);
  EXPECT_EQ(r.out, "INVALID line=3 reason=NonAncestorJoin task=2\n");
}

TEST(Cli, AnalyzeRejectsInvalidTrace) {
  auto r = run_cli({"analyze", "--trace", "-"}, "read 4 1\n");
  EXPECT_EQ(r.code, 2);
  EXPECT_FALSE(r.err.empty());
}

TEST(Cli, ParseErrorIsExitTwo) {
  EXPECT_EQ(run_cli({"analyze", "--trace", "-"}, "bogus 0 1\n").code, 2);
}

TEST(Cli, UsageErrors) {
  EXPECT_EQ(run_cli({}).code, 2);
  EXPECT_EQ(run_cli({"frobnicate"}).code, 2);
  EXPECT_EQ(run_cli({"analyze"}).code, 2);
  EXPECT_EQ(run_cli({"analyze", "--trace", "builtin:fig_readers", "--detector", "other"}).code, 2);
  EXPECT_EQ(run_cli({"analyze", "--trace", "builtin:missing"}).code, 2);
  EXPECT_EQ(run_cli({"analyze", "--trace", "/nonexistent/trace.txt"}).code, 2);
}

TEST(Cli, CompareAgrees) {
  auto r = run_cli({"compare", "--trace", "builtin:fig_var1_var2"});
  EXPECT_EQ(r.code, 1);
  EXPECT_NE(r.out.find("FASTRACER races=1 racy_vars=101\n"), std::string::npos) << r.out;
  EXPECT_NE(r.out.find("ORACLE pairs=1 racy_vars=101\n"), std::string::npos);
  EXPECT_NE(r.out.find("\nAGREE\n"), std::string::npos);
}

TEST(Cli, OracleSubcommand) {
  auto r = run_cli({"oracle", "--trace", "builtin:fig_var1_var2"});
  EXPECT_EQ(r.code, 1);
  EXPECT_NE(r.out.find("PAIR var=101 a=2@line9 b=3@line12 kinds=WR\n"), std::string::npos) << r.out;
  EXPECT_EQ(run_cli({"oracle", "--trace", "builtin:fig_var1_var2", "--max-events", "3"}).code, 2);
}

TEST(Cli, StatsSubcommand) {
  auto r = run_cli({"stats", "--trace", "builtin:fig_var1_var2"});
  EXPECT_EQ(r.code, 0);
  EXPECT_NE(r.out.find("STAT tasks_spawned=4\n"), std::string::npos) << r.out;
}

TEST(Cli, GenerateShuffleAnalyzeRoundTrip) {
  auto gen_path = temp_file("gen.txt");
  auto shuf_path = temp_file("shuf.txt");
  auto g = run_cli({"generate", "--seed", "5", "--max-tasks", "8", "--out", gen_path.string()});
  ASSERT_EQ(g.code, 0) << g.err;
  auto gen_text = read_file(gen_path);
  EXPECT_FALSE(gen_text.empty());
  auto again = run_cli({"generate", "--seed", "5", "--max-tasks", "8", "--out", "-"});
  EXPECT_EQ(again.out, gen_text);

  auto s = run_cli({"shuffle", "--trace", gen_path.string(), "--seed", "9", "--out", shuf_path.string()});
  ASSERT_EQ(s.code, 0) << s.err;
  EXPECT_EQ(run_cli({"validate", "--strict", "--trace", shuf_path.string()}).code, 0);

  auto a = run_cli({"analyze", "--trace", gen_path.string()});
  auto b = run_cli({"analyze", "--trace", shuf_path.string()});
  EXPECT_EQ(a.code, b.code);
  auto summary = [](const std::string& out) {
    auto pos = out.find("SUMMARY");
    auto vars = out.find("racy_vars=", pos);
    return out.substr(vars);
  };
  EXPECT_EQ(summary(a.out), summary(b.out));
  std::filesystem::remove(gen_path);
  std::filesystem::remove(shuf_path);
}

TEST(Cli, OutputIsDeterministic) {
  auto a = run_cli({"analyze", "--trace", "builtin:fig_readers", "--stats"});
  auto b = run_cli({"analyze", "--trace", "builtin:fig_readers", "--stats"});
  EXPECT_EQ(a.out, b.out);
}
