#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <array>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <sys/wait.h>

#include <json.hpp>

namespace fs = std::filesystem;

namespace {

struct Result {
  int code = -1;
  std::string out;
};

// Runs the CLI inside `dir` and captures stdout.
Result run(const fs::path& dir, const std::string& args, const std::string& env = "") {
  const std::string cmd = "cd '" + dir.string() + "' && " + env + " '" COLLAPSELAB_CLI "' " + args + " 2>/dev/null";
  Result r;
  FILE* pipe = popen(cmd.c_str(), "r");
  REQUIRE(pipe != nullptr);
  std::array<char, 4096> buf{};
  while (const std::size_t n = fread(buf.data(), 1, buf.size(), pipe)) r.out.append(buf.data(), n);
  const int status = pclose(pipe);
  r.code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  return r;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

fs::path fresh_dir(const std::string& name) {
  const fs::path d = fs::temp_directory_path() / ("collapselab_cli_" + name);
  fs::remove_all(d);
  fs::create_directories(d);
  return d;
}

}  // namespace

TEST_CASE("prob exact prints the fraction and its decimal") {
  const auto d = fresh_dir("exact");
  const Result r = run(d, "prob exact --depth 2");
  CHECK(r.code == 0);
  CHECK(r.out.find("5/32") != std::string::npos);
  CHECK(r.out.find("0.15625") != std::string::npos);
  const Result many = run(d, "prob exact --depth 1..3 --out e.csv");
  CHECK(many.code == 0);
  CHECK(slurp(d / "e.csv").find("1045/3072") != std::string::npos);
}

TEST_CASE("prob bound") {
  const auto d = fresh_dir("bound");
  const Result r = run(d, "prob bound --widths 3x10 --last-layer-relu");
  CHECK(r.code == 0);
  CHECK(r.out.find("0.7369") != std::string::npos);
  CHECK(run(d, "prob bound --widths 10x10").out.find("0.00972") != std::string::npos);
}

TEST_CASE("safe-region writes the CSV row and an SVG") {
  const auto d = fresh_dir("safe");
  const Result r = run(d, "safe-region --p 0.01 --widths 1..12 --out sr");
  CHECK(r.code == 0);
  const std::string csv = slurp(d / "sr.csv");
  CHECK(csv.rfind("# collapselab", 0) == 0);
  CHECK(csv.find("\nwidth,p,max_depth\n") != std::string::npos);
  CHECK(csv.find("\n10,0.01,10\n") != std::string::npos);
  CHECK(slurp(d / "sr.svg").find("<svg") != std::string::npos);
}

TEST_CASE("usage errors exit with 2") {
  const auto d = fresh_dir("usage");
  CHECK(run(d, "prob exact --bogus").code == 2);
  CHECK(run(d, "prob exact").code == 2);
  CHECK(run(d, "nonsense").code == 2);
  CHECK(run(d, "prob exact --depth 0").code == 2);
  CHECK(run(d, "prob bound --widths 3x").code == 2);
  CHECK(run(d, "experiment fig99").code == 2);
  CHECK(run(d, "prob exact --depth 2", "COLLAPSELAB_SEED=abc").code == 2);
}

TEST_CASE("a diverging training run exits 1 with a JSON error") {
  const auto d = fresh_dir("diverge");
  const Result r = run(d, "train --target abs1d --opt sgd --lr 1e6 --steps 50 --width 8 --depth 3 --report t.json");
  CHECK(r.code == 1);
  const auto pos = r.out.find("{\"error\"");
  REQUIRE(pos != std::string::npos);
  const auto j = nlohmann::json::parse(r.out.substr(pos));
  CHECK(j.contains("error"));
}

TEST_CASE("train then classify the saved report") {
  const auto d = fresh_dir("train");
  const Result t = run(d, "train --target abs1d --steps 200 --seed 3 --report r.json");
  CHECK(t.code == 0);
  const auto rep = nlohmann::json::parse(slurp(d / "r.json"));
  CHECK(rep.contains("final_net"));
  CHECK(rep.contains("collapse"));
  CHECK(rep.at("steps_run") == 200);
  CHECK(rep.at("provenance").at("seed") == 3);
  const Result c = run(d, "classify --net r.json --target abs1d --report c.json");
  CHECK(c.code == 0);
  const auto cls = nlohmann::json::parse(slurp(d / "c.json"));
  CHECK(cls.at("kind") == rep.at("collapse").at("kind"));
  CHECK(run(d, "classify --net missing.json --target abs1d").code != 0);
}

TEST_CASE("identical seeds and configs give byte-identical artifacts") {
  const auto a = fresh_dir("det_a");
  const auto b = fresh_dir("det_b");
  for (const auto& dir : {a, b}) {
    REQUIRE(run(dir, "prob mc --width 2 --depth 3 --samples 2000 --out mc.csv", "COLLAPSELAB_SEED=7").code == 0);
    REQUIRE(run(dir, "train --target stepsin --loss mae --steps 300 --report r.json", "COLLAPSELAB_SEED=7").code == 0);
    REQUIRE(run(dir, "lengthmap --depth 20 --activation selu --out lm.csv").code == 0);
  }
  for (const char* f : {"mc.csv", "r.json", "lm.csv"}) {
    CAPTURE(f);
    CHECK(slurp(a / f) == slurp(b / f));
    CHECK_FALSE(slurp(a / f).empty());
  }
  const auto c = fresh_dir("det_c");
  REQUIRE(run(c, "prob mc --width 2 --depth 3 --samples 2000 --out mc.csv", "COLLAPSELAB_SEED=8").code == 0);
  CHECK(slurp(c / "mc.csv") != slurp(a / "mc.csv"));
}

TEST_CASE("experiment fig5b_safe_region") {
  const auto d = fresh_dir("fig5b");
  CHECK(run(d, "experiment fig5b_safe_region --out out").code == 0);
  const std::string csv = slurp(d / "out" / "fig5b_safe_region.csv");
  CHECK(csv.find("\n10,0.01,10\n") != std::string::npos);
  CHECK(csv.find("\n64,0.1,") != std::string::npos);
  CHECK(fs::exists(d / "out" / "fig5b_safe_region.svg"));
}
