#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "doctest.h"
#include "json.hpp"
#include "morse/pipeline.hpp"

using namespace morse;
namespace fs = std::filesystem;

namespace {

fs::path scratch(const std::string& name) {
  const fs::path p = fs::temp_directory_path() / ("morse-cli-test-" + std::to_string(::getpid())) / name;
  fs::remove_all(p);
  fs::create_directories(p);
  return p;
}

int run_cli(const std::string& args, std::string* err = nullptr) {
  const fs::path log = fs::temp_directory_path() / ("morse-cli-stderr-" + std::to_string(::getpid()));
  const std::string cmd = std::string(MORSE_CLI) + " " + args + " > /dev/null 2> " + log.string();
  const int status = std::system(cmd.c_str());
  if (err) {
    std::ifstream in(log);
    std::stringstream ss;
    ss << in.rdbuf();
    *err = ss.str();
  }
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

std::string read(const fs::path& p) {
  std::ifstream in(p);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

std::string first_line(const fs::path& p) {
  std::ifstream in(p);
  std::string line;
  std::getline(in, line);
  return line;
}

std::string catalog(const std::string& name) { return std::string(MORSE_CONFIG_DIR) + "/" + name + ".yaml"; }

}  // namespace

TEST_CASE("all on the sphere-height config") {
  const auto out = scratch("height");
  CHECK(run_cli("all --config " + catalog("sphere-height") + " --out " + out.string()) == 0);
  const auto report = nlohmann::json::parse(read(out / "report.json"));
  CHECK(report["schema"] == pipeline::kSchema);
  CHECK(report["homology"][0]["betti"] == nlohmann::json::array({1, 0, 1}));
  CHECK(report["verdict"]["passed"] == true);
  CHECK(report.contains("timings"));
  CHECK(fs::exists(out / "report.txt"));
  CHECK(first_line(out / "clouds.csv") == "id,role,x1,x2,x3");
  CHECK(first_line(out / "flow_lines.csv") == "line,from,to,sign,t,x1,x2,x3");
}

TEST_CASE("flow line exports") {
  const auto out = scratch("circle");
  CHECK(run_cli("connections --config " + catalog("circle-cos") + " --out " + out.string()) == 0);
  CHECK(first_line(out / "trajectories" / "line_0.csv") == "t,x1,x2");
  CHECK(fs::exists(out / "trajectories" / "line_1.csv"));
  const auto report = nlohmann::json::parse(read(out / "report.json"));
  REQUIRE(report["connections"].size() == 1);
  CHECK(report["connections"][0]["count"] == 2);
  CHECK(report["connections"][0]["sign"] == 0);
}

TEST_CASE("identical configs give identical reports") {
  const auto a = scratch("det-a");
  const auto b = scratch("det-b");
  CHECK(run_cli("all --no-cache --config " + catalog("torus-separable") + " --out " + a.string()) == 0);
  CHECK(run_cli("all --no-cache --threads 2 --config " + catalog("torus-separable") + " --out " + b.string()) == 0);
  CHECK(pipeline::strip_timings(read(a / "report.json")) == pipeline::strip_timings(read(b / "report.json")));
}

TEST_CASE("cache reuse and invalidation") {
  const auto dir = scratch("cache");
  const std::string base = "name: c\nmanifold: {kind: sphere, dim: 2}\n";
  auto cfg = config::parse_config(base + "function: z^2 + 0.3*x\n");
  pipeline::Options o;
  o.out_dir = dir.string();

  const auto cold = pipeline::run(cfg, "homology", o);
  CHECK(cold.cache_hits.empty());
  const auto warm = pipeline::run(cfg, "homology", o);
  CHECK(std::count(warm.cache_hits.begin(), warm.cache_hits.end(), "critical") == 1);
  CHECK(std::count(warm.cache_hits.begin(), warm.cache_hits.end(), "connections") == 1);
  CHECK(pipeline::strip_timings(cold.report_json) == pipeline::strip_timings(warm.report_json));

  // editing f invalidates everything downstream
  cfg = config::parse_config(base + "function: z^2 + 0.35*x\n");
  const auto edited = pipeline::run(cfg, "homology", o);
  CHECK(edited.cache_hits.empty());
  CHECK(pipeline::strip_timings(edited.report_json) != pipeline::strip_timings(warm.report_json));

  // unrelated sections keep the cache
  cfg = config::parse_config(base + "function: z^2 + 0.35*x\npairing: {tolerance: 1.0e-6}\n");
  CHECK_FALSE(pipeline::run(cfg, "homology", o).cache_hits.empty());

  o.use_cache = false;
  CHECK(pipeline::run(cfg, "homology", o).cache_hits.empty());
}

TEST_CASE("exit codes") {
  const auto dir = scratch("codes");
  const fs::path bad = dir / "bad.yaml";
  std::ofstream(bad) << "manifold: {kind: sphere, dim: 2}\nfunction: z\nresidues:\n  int_tl: 1.0e-4\n"
                        "forms:\n  a: {dx: 1}\nfme: {form: a}\n";
  std::string err;
  CHECK(run_cli("verify-fme --config " + bad.string() + " --out " + dir.string(), &err) == 1);
  CHECK(err.find("residues.int_tl") != std::string::npos);

  CHECK(run_cli("homology --out " + dir.string()) == 1);
  CHECK(run_cli("bogus --config " + catalog("sphere-height")) == 1);
  CHECK(run_cli("homology --config " + catalog("sphere17-fme") + " --out " + dir.string()) == 1);

  const fs::path strict = dir / "strict.yaml";
  std::ofstream(strict) << "manifold: {kind: sphere, dim: 1}\nfunction: x\n"
                           "forms:\n  a: {dx: -(2+y)*y, dy: (2+y)*x}\nfme: {form: a, tolerance: 1.0e-30}\n";
  CHECK(run_cli("verify-fme --config " + strict.string() + " --out " + dir.string(), &err) == 2);

  const fs::path degenerate = dir / "degenerate.yaml";
  std::ofstream(degenerate) << "manifold: {kind: sphere, dim: 2}\nfunction: z^2\n";
  CHECK(run_cli("critical-points --config " + degenerate.string() + " --out " + dir.string(), &err) == 1);
  CHECK_FALSE(err.empty());
}

TEST_CASE("sha256") {
  CHECK(pipeline::sha256_hex("abc") == "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad");
}
