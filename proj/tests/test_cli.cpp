#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cstdlib>
#include <filesystem>
#include <string>

#include "perfctl/io.hpp"

using namespace perfctl;

namespace {

int run(const std::string& args) {
  const std::string cmd = std::string(PERFCTL_CLI_PATH) + " " + args + " > /dev/null 2>&1";
  const int status = std::system(cmd.c_str());
  return WEXITSTATUS(status);
}

const std::string kConfigs = PERFCTL_CONFIG_DIR;

struct TempDir {
  std::string path;
  explicit TempDir(const std::string& name) : path("cli_test_" + name) {
    std::filesystem::remove_all(path);
    std::filesystem::create_directories(path);
  }
  ~TempDir() { std::filesystem::remove_all(path); }
};

}  // namespace

TEST_CASE("unknown flags exit with the config-error code") {
  CHECK(run("--definitely-not-a-flag") == 2);
  CHECK(run("simulate --config missing.json --no-such-option x") == 2);
}

TEST_CASE("missing config exits with the config-error code") {
  CHECK(run("analyze --config /nonexistent.json --out /tmp/x") == 2);
}

TEST_CASE("analyze reports the condition verdict for the stable demo") {
  TempDir dir("analyze");
  const std::string out = dir.path + "/report.txt";
  CHECK(run("analyze --config " + kConfigs + "/stable.json --out " + out) == 0);
  const std::string text = read_file(out);
  CHECK(text.find("holds=true") != std::string::npos);
  CHECK(text.find("mu_tilde=") != std::string::npos);
  CHECK(text.find("lhs=") != std::string::npos);
  CHECK(text.find("stable_satisfied=true") != std::string::npos);
}

TEST_CASE("simulate emits a deterministic trajectory csv") {
  TempDir dir("simulate");
  const std::string a = dir.path + "/a.csv";
  const std::string b = dir.path + "/b.csv";
  CHECK(run("--seed 11 simulate --config " + kConfigs + "/stable.json --out " + a) == 0);
  CHECK(run("--seed 11 simulate --config " + kConfigs + "/stable.json --out " + b) == 0);
  CHECK(read_file(a) == read_file(b));
  CHECK(run("--seed 12 simulate --config " + kConfigs + "/stable.json --out " + b) == 0);
  CHECK(read_file(a) != read_file(b));
}

TEST_CASE("rsgd runs with an auto plan and rejects an invalid one") {
  TempDir dir("rsgd");
  const std::string out = dir.path + "/trace.csv";
  CHECK(run("--seed 3 rsgd --config " + kConfigs + "/stable.json --out " + out) == 0);
  const auto rows = parse_trace_csv(read_file(out));
  CHECK(rows.size() == 121);  // N + 1 logged iterates

  CHECK(run("--seed 3 rsgd --config " + kConfigs + "/invalid_plan.json --out " + out) == 2);
}

TEST_CASE("rrm emits per-iterate gaps and converges on the stable demo") {
  TempDir dir("rrm");
  const std::string out = dir.path + "/gaps.csv";
  CHECK(run("--seed 5 rrm --config " + kConfigs + "/stable.json --out " + out) == 0);
  const std::string meta = read_file(out + ".meta");
  CHECK(meta.find("converged=true") != std::string::npos);
}

TEST_CASE("stock runs byte-identically under a fixed seed") {
  TempDir dir("stock");
  const std::string args =
      "--seed 7 stock --schedule ascend --scale reduced --regime stable --cost-samples 20 ";
  // short run: override via log-every to keep the runtime small
  CHECK(run(args + "--log-every 50 --out " + dir.path + "/run1") == 0);
  CHECK(run(args + "--log-every 50 --out " + dir.path + "/run2") == 0);
  CHECK(read_file(dir.path + "/run1/trace_ascend.csv") ==
        read_file(dir.path + "/run2/trace_ascend.csv"));
  CHECK(read_file(dir.path + "/run1/trace_ascend.meta") ==
        read_file(dir.path + "/run2/trace_ascend.meta"));
}

TEST_CASE("stock rejects bad flag values") {
  CHECK(run("stock --schedule sideways --scale reduced --out /tmp/x") == 2);
  CHECK(run("stock --schedule ascend --scale huge --out /tmp/x") == 2);
}
