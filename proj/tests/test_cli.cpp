#include <algorithm>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include <sys/wait.h>
#include <unistd.h>

#include "doctest.h"

#include "json.hpp"

namespace fs = std::filesystem;

namespace {

struct Run {
  int code = -1;
  std::string out;
};

Run run(const std::string& args) {
  std::string cmd = std::string(CASCADEMIX_CLI) + " " + args + " 2>&1";
  Run r;
  FILE* p = popen(cmd.c_str(), "r");
  REQUIRE(p != nullptr);
  char buf[4096];
  std::size_t n;
  while ((n = fread(buf, 1, sizeof buf, p)) > 0) r.out.append(buf, n);
  int status = pclose(p);
  r.code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  return r;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void spit(const fs::path& p, const std::string& text) { std::ofstream(p, std::ios::binary) << text; }

struct TempDir {
  fs::path path;
  TempDir() {
    path = fs::temp_directory_path() / ("cascademix_cli_" + std::to_string(::getpid()));
    fs::create_directories(path);
  }
  ~TempDir() { fs::remove_all(path); }
  std::string operator/(const std::string& name) const { return (path / name).string(); }
};

}  // namespace

TEST_CASE("version and usage errors") {
  auto r = run("--version");
  CHECK(r.code == 0);
  CHECK(r.out.find("cascademix 0.1.0") != std::string::npos);
  CHECK(run("").code != 0);
  CHECK(run("recover").code != 0);
}

TEST_CASE("generate, simulate, estimate and recover a star") {
  TempDir dir;
  auto r = run("generate --n 4 --topology star --min-delta 0.3 --seed 42 --out " + dir / "m.json");
  REQUIRE(r.code == 0);
  auto model = nlohmann::json::parse(slurp(dir / "m.json"));
  CHECK(model["n"] == 4);

  r = run("simulate --model " + dir / "m.json" + " --count 200000 --seed 5 --workers 4 --out " + dir / "c.jsonl");
  REQUIRE(r.code == 0);
  r = run("estimate --corpus " + dir / "c.jsonl" + " --out " + dir / "t.json");
  REQUIRE(r.code == 0);
  auto table = nlohmann::json::parse(slurp(dir / "t.json"));
  CHECK(table["provenance"] == "empirical");
  CHECK(table["M"] == 200000);

  r = run("recover --moments " + dir / "t.json" + " --out " + dir / "r.json");
  CHECK(r.code == 0);
  auto rec = nlohmann::json::parse(slurp(dir / "r.json"));
  CHECK(rec["edges"].size() == 3);
}

TEST_CASE("exact oracle table round trip") {
  TempDir dir;
  REQUIRE(run("generate --n 6 --topology tree --seed 7 --out " + dir / "m.json").code == 0);
  auto r = run("oracle --model " + dir / "m.json" + " --table " + dir / "t.json");
  REQUIRE(r.code == 0);
  r = run("recover --moments " + dir / "t.json" + " --out " + dir / "r.json");
  CHECK(r.code == 0);
  auto truth = nlohmann::json::parse(slurp(dir / "m.json"));
  auto rec = nlohmann::json::parse(slurp(dir / "r.json"));
  CHECK(rec["edges"].size() == truth["edges"].size());
}

TEST_CASE("oracle queries") {
  TempDir dir;
  spit(dir / "m.json", R"({"n":4,"alpha":0.5,"directed":false,"edges":[[0,1,0.8,0.2],[0,2,0.7,0.3],[0,3,0.6,0.4]]})");
  auto r = run("oracle --model " + dir / "m.json" + " --query \"X 0 1\" --query \"Y_star 0 1 2\"");
  REQUIRE(r.code == 0);
  std::istringstream in(r.out);
  double x = 0, y = 0;
  in >> x >> y;
  CHECK(x == doctest::Approx(0.5));
  CHECK(y == doctest::Approx(0.31));
  CHECK(run("oracle --model " + dir / "m.json" + " --query \"Q 0 1\"").code == 1);
}

TEST_CASE("one-edge model is refused") {
  TempDir dir;
  spit(dir / "m.json", R"({"n":2,"alpha":0.5,"directed":false,"edges":[[0,1,0.3,0.7]]})");
  REQUIRE(run("oracle --model " + dir / "m.json" + " --table " + dir / "t.json").code == 0);
  auto r = run("recover --moments " + dir / "t.json");
  CHECK(r.code == 1);
  CHECK(r.out.find("Condition 1 violated") != std::string::npos);
}

TEST_CASE("missing files and bad flags") {
  auto r = run("simulate --model /nonexistent.json --count 10 --seed 1");
  CHECK(r.code == 1);
  CHECK(r.out.find("error:") != std::string::npos);
  CHECK(run("recover --moments x.json --alpha 0.3 --estimate-alpha").code != 0);
}

TEST_CASE("simulate is byte identical across worker counts") {
  TempDir dir;
  REQUIRE(run("generate --n 6 --topology cycle --seed 3 --out " + dir / "m.json").code == 0);
  REQUIRE(run("simulate --model " + dir / "m.json" + " --count 5000 --seed 9 --workers 1 --out " + dir / "a").code == 0);
  REQUIRE(run("simulate --model " + dir / "m.json" + " --count 5000 --seed 9 --workers 8 --out " + dir / "b").code == 0);
  CHECK(slurp(dir / "a") == slurp(dir / "b"));
  CHECK_FALSE(slurp(dir / "a").empty());
}

TEST_CASE("experiment command") {
  TempDir dir;
  spit(dir / "spec.txt", "n = 4\ntopology = star\nmin_delta = 0.4\nM_grid = [2000, inf]\nseeds = [1, 2]\n");
  auto r = run("experiment --spec " + dir / "spec.txt" + " --omit-runtime --out " + dir / "a.csv");
  REQUIRE(r.code == 0);
  auto csv = slurp(dir / "a.csv");
  CHECK(csv.rfind("n,delta,p_min,alpha,M,seed,max_err,runtime_ms,bound\n", 0) == 0);
  CHECK(std::count(csv.begin(), csv.end(), '\n') == 5);
  r = run("experiment --spec " + dir / "spec.txt" + " --format json --set seeds=[3] --out " + dir / "a.json");
  REQUIRE(r.code == 0);
  auto j = nlohmann::json::parse(slurp(dir / "a.json"));
  CHECK(j.size() == 2);
  CHECK(j[1]["M"] == "inf");
}
