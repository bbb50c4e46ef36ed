#include <gtest/gtest.h>

#include <fstream>

#include "harness.hpp"
#include "json.hpp"
#include "sockscope/archive.hpp"
#include "sockscope/ingest.hpp"

using nlohmann::json;
namespace fs = std::filesystem;
using sockscope::test::run_process;
using sockscope::test::TempDir;

namespace {

void write(const fs::path& p, const std::string& text) { std::ofstream(p) << text; }

const std::string kSmallSpec = R"({"seed": 4, "apps": 3, "sockets": 50,
  "socket_types": {"stream": 0.6, "dgram": 0.4},
  "udp_classes": {"data": 0.5, "connect_no_data": 0.5},
  "tcp_classes": {"remote_data": 0.5, "local_rcvtimeo_only": 0.5},
  "opening_pattern": 0.2, "closing_pattern": 0.2})";

std::string gen(const TempDir& tmp, const std::string& spec, const std::string& name) {
  write(tmp / (name + ".json"), spec);
  auto r = run_process({SOCKSCOPE_TEST_CLI, "gen", (tmp / (name + ".json")).string(), "--out", (tmp / name).string()});
  EXPECT_EQ(r.exit_code, 0);
  return (tmp / name).string();
}

}  // namespace

TEST(Cli, AnalyzeEmptyDirIsEmptyReport) {
  TempDir tmp;
  auto r = run_process({SOCKSCOPE_TEST_CLI, "analyze", tmp.path().string()});
  EXPECT_EQ(r.exit_code, 0);
  auto j = json::parse(r.out);
  EXPECT_EQ(j["summary"]["sockets"], 0);
  EXPECT_EQ(j["summary"]["traces"], 0);
}

TEST(Cli, AnalyzeMissingDirFails) {
  EXPECT_EQ(run_process({SOCKSCOPE_TEST_CLI, "analyze", "/nonexistent/traces"}).exit_code, 1);
}

TEST(Cli, AnalyzeJsonIsByteStableAndTextWorks) {
  TempDir tmp;
  auto dir = gen(tmp, kSmallSpec, "c");
  auto a = run_process({SOCKSCOPE_TEST_CLI, "analyze", dir, "--json"});
  auto b = run_process({SOCKSCOPE_TEST_CLI, "analyze", dir});
  EXPECT_EQ(a.exit_code, 0);
  EXPECT_EQ(a.out, b.out);
  auto t = run_process({SOCKSCOPE_TEST_CLI, "analyze", dir, "--text"});
  EXPECT_EQ(t.exit_code, 0);
  EXPECT_NE(t.out.find("socket types"), std::string::npos);
  EXPECT_EQ(run_process({SOCKSCOPE_TEST_CLI, "analyze", dir, "--text", "--json"}).exit_code, 2);
}

TEST(Cli, GoldenReplicaReport) {
  TempDir tmp;
  auto r = run_process({SOCKSCOPE_TEST_CLI, "gen", SOCKSCOPE_TEST_DATA "/specs/android_replica.json", "--out",
                        (tmp / "rep").string()});
  ASSERT_EQ(r.exit_code, 0);
  auto a = run_process({SOCKSCOPE_TEST_CLI, "analyze", (tmp / "rep").string(), "--json"});
  EXPECT_EQ(a.out, sockscope::test::read_file(SOCKSCOPE_TEST_GOLDEN "/android_replica_report.json"));
}

TEST(Cli, CollapseTwinsReducesSendtoCount) {
  TempDir tmp;
  auto spec = json::parse(kSmallSpec);
  spec["twins"] = true;
  auto dir = gen(tmp, spec.dump(), "twins");
  auto plain = json::parse(run_process({SOCKSCOPE_TEST_CLI, "analyze", dir}).out);
  auto collapsed = json::parse(run_process({SOCKSCOPE_TEST_CLI, "analyze", dir, "--collapse-twins"}).out);
  auto calls = [](const json& j, const char* fn) {
    return j["function_usage"].contains(fn) ? j["function_usage"][fn]["calls"].get<int>() : 0;
  };
  EXPECT_GT(calls(plain, "sendto"), 0);
  EXPECT_LT(calls(collapsed, "sendto"), calls(plain, "sendto"));
  EXPECT_EQ(calls(collapsed, "send"), calls(plain, "send"));
}

TEST(Cli, GenIsDeterministicAndRejectsInfeasibleSpecs) {
  TempDir tmp;
  auto a = gen(tmp, kSmallSpec, "a");
  auto b = gen(tmp, kSmallSpec, "b");
  std::vector<std::string> files_a, files_b;
  for (const auto& e : fs::recursive_directory_iterator(a)) {
    if (e.is_regular_file()) files_a.push_back(fs::relative(e.path(), a).string() + sockscope::test::read_file(e.path()));
  }
  for (const auto& e : fs::recursive_directory_iterator(b)) {
    if (e.is_regular_file()) files_b.push_back(fs::relative(e.path(), b).string() + sockscope::test::read_file(e.path()));
  }
  std::sort(files_a.begin(), files_a.end());
  std::sort(files_b.begin(), files_b.end());
  EXPECT_EQ(files_a, files_b);
  EXPECT_FALSE(files_a.empty());

  write(tmp / "bad.json", R"({"sockets": 10, "socket_types": {"stream": 0.33, "dgram": 0.67}})");
  EXPECT_EQ(run_process({SOCKSCOPE_TEST_CLI, "gen", (tmp / "bad.json").string(), "--out", (tmp / "x").string()})
                .exit_code,
            1);
  EXPECT_EQ(run_process({SOCKSCOPE_TEST_CLI, "gen", kSmallSpec.c_str()}).exit_code, 2);
}

TEST(Cli, MineAndMatch) {
  TempDir tmp;
  auto dir = gen(tmp, kSmallSpec, "c");
  auto none = run_process({SOCKSCOPE_TEST_CLI, "mine", dir, "--min-support", "1000000", "--max-len", "4"});
  EXPECT_EQ(none.exit_code, 0);
  EXPECT_TRUE(json::parse(none.out).empty());
  auto some = run_process({SOCKSCOPE_TEST_CLI, "mine", dir, "--min-support", "5", "--max-len", "3"});
  EXPECT_EQ(some.exit_code, 0);
  EXPECT_FALSE(json::parse(some.out).empty());
  EXPECT_EQ(run_process({SOCKSCOPE_TEST_CLI, "mine", dir, "--min-support", "5", "--max-len", "0"}).exit_code, 2);

  auto m = run_process({SOCKSCOPE_TEST_CLI, "match", dir, "--template", SOCKSCOPE_TEST_DATA "/templates/closing.json"});
  EXPECT_EQ(m.exit_code, 0);
  auto j = json::parse(m.out);
  EXPECT_EQ(j["sockets"], 10);
  EXPECT_EQ(j["total_sockets"], 50);

  write(tmp / "bad.json", R"({"name": "x", "steps": [{"fn": "nope"}]})");
  auto bad = run_process({SOCKSCOPE_TEST_CLI, "match", dir, "--template", (tmp / "bad.json").string()});
  EXPECT_EQ(bad.exit_code, 1);
}

TEST(Cli, UploadWithoutMetaFailsBeforeNetwork) {
  TempDir tmp;
  fs::create_directories(tmp / "t");
  write(tmp / "t" / "events.1.jsonl", "");
  auto r = run_process({SOCKSCOPE_TEST_CLI, "upload", (tmp / "t").string(), "--url", "http://127.0.0.1:1"});
  EXPECT_EQ(r.exit_code, 1);
}

TEST(Cli, UploadToDeadServerFails) {
  TempDir tmp;
  auto dir = gen(tmp, kSmallSpec, "c");
  fs::path one;
  for (const auto& e : fs::recursive_directory_iterator(dir)) {
    if (e.path().filename() == "meta.json") one = e.path().parent_path();
  }
  EXPECT_EQ(run_process({SOCKSCOPE_TEST_CLI, "upload", one.string(), "--url", "http://127.0.0.1:1"}).exit_code, 1);
}

TEST(Cli, RunUsageErrors) {
  EXPECT_EQ(run_process({SOCKSCOPE_TEST_CLI, "run", "/bin/true"}).exit_code, 2);
  EXPECT_EQ(run_process({SOCKSCOPE_TEST_CLI, "run", "--salt", "zz", "--", "/bin/true"}).exit_code, 2);
  EXPECT_EQ(run_process({SOCKSCOPE_TEST_CLI}).exit_code, 2);
  EXPECT_EQ(run_process({SOCKSCOPE_TEST_CLI, "frobnicate"}).exit_code, 2);
}
