#include <filesystem>
#include <fstream>
#include <sstream>

#include "doctest.h"
#include "nhlab/cli.hpp"

using namespace nhlab;
namespace fs = std::filesystem;
using json = nlohmann::json;

namespace {

struct Run {
  int code;
  std::string out;
  std::string err;
};

Run run_cli(std::vector<std::string> args) {
  std::ostringstream out, err;
  const int code = cli::run(args, out, err);
  return {code, out.str(), err.str()};
}

fs::path scratch(const std::string& name) {
  const fs::path p = fs::temp_directory_path() / ("nhlab_test_cli_" + name);
  fs::remove_all(p);
  return p;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

std::string header(const fs::path& p) {
  std::ifstream in(p);
  std::string line;
  std::getline(in, line);
  return line;
}

const json& schemas() {
  static const json j = json::parse(slurp(fs::path(NHLAB_SOURCE_DIR) / "tools" / "schemas" / "tables.json"));
  return j;
}

std::string schema_header(const std::string& kind) {
  std::string h;
  for (const auto& c : schemas()["csv"][kind]["columns"]) h += (h.empty() ? "" : ",") + c.get<std::string>();
  return h;
}

json manifest(const fs::path& dir) { return json::parse(slurp(dir / "manifest.json")); }

void check_manifest(const fs::path& dir) {
  const auto m = manifest(dir);
  for (const auto& key : schemas()["json"]["manifest.json"]) CHECK(m.contains(key.get<std::string>()));
  std::size_t listed = 0;
  for (const auto& f : m["files"]) {
    const fs::path p = dir / f["name"].get<std::string>();
    REQUIRE(fs::exists(p));
    CHECK(sha256_file(p) == f["sha256"].get<std::string>());
    CHECK(fs::file_size(p) == f["bytes"].get<std::size_t>());
    ++listed;
  }
  std::size_t on_disk = 0;
  for (const auto& e : fs::directory_iterator(dir)) on_disk += e.path().filename() != "manifest.json";
  CHECK(listed == on_disk);
}

}  // namespace

TEST_CASE("exit codes") {
  CHECK(run_cli({}).code == cli::kUsageError);
  CHECK(run_cli({"bogus"}).code == cli::kUsageError);
  CHECK(run_cli({"ex1"}).code == cli::kUsageError);
  CHECK(run_cli({"ex1", "type-numbers", "--beta", "abc"}).code == cli::kUsageError);
  CHECK(run_cli({"--format", "xml", "ex1", "type-numbers"}).code == cli::kUsageError);
  CHECK(run_cli({"--rtol", "-1", "ex1", "type-numbers"}).code == cli::kUsageError);
  const auto range = run_cli({"--out", scratch("range").string(), "ex2", "equilibria", "--c", "0.5"});
  CHECK(range.code == cli::kUsageError);
  CHECK(range.err.find("outside") != std::string::npos);
  CHECK(run_cli({"--out", scratch("man").string(), "lyapunov", "estimate", "--manifold", "sphere"}).code ==
        cli::kUsageError);
  CHECK(run_cli({"--version"}).code == cli::kSuccess);
  CHECK(run_cli({"--help"}).code == cli::kSuccess);
}

TEST_CASE("--seedless is a bare flag") {
  const auto dir = scratch("seedless");
  CHECK(run_cli({"--seedless", "--out", dir.string(), "ex1", "type-numbers"}).code == cli::kSuccess);
  const auto bad = run_cli({"--seedless=1", "--out", dir.string(), "ex1", "type-numbers"});
  CHECK(bad.code == cli::kUsageError);
  CHECK(run_cli({"--seedless=true", "ex1", "type-numbers"}).code == cli::kUsageError);
}

TEST_CASE("numerical failure writes diagnostics") {
  const auto dir = scratch("fail");
  // an 'example2 cycle' seeded at the saddle never returns to the section
  const auto r = run_cli(
      {"--out", dir.string(), "lyapunov", "estimate", "--system", "example2", "--param", "-0.06", "--manifold", "cycle",
       "--point", "0,0"});
  CHECK(r.code == cli::kNumericalFailure);
  CHECK(fs::exists(dir / "diagnostics.json"));
  check_manifest(dir);
}

TEST_CASE("ex1 type-numbers") {
  const auto dir = scratch("ex1");
  const auto r = run_cli({"--out", dir.string(), "ex1", "type-numbers", "--beta", "1.0", "--theta", "0.0", "--tmax", "62.9"});
  REQUIRE(r.code == cli::kSuccess);
  CHECK(header(dir / "type_numbers.csv") == schema_header("type_numbers"));
  const auto s = json::parse(slurp(dir / "type_numbers_summary.json"));
  CHECK(std::abs(s["nu_tail"].get<double>() - std::exp(-0.5)) <= 1e-6);
  CHECK(r.out.find("nu_tail=") == 0);
  CHECK(manifest(dir)["config"]["command"] == "ex1 type-numbers");
  check_manifest(dir);
}

TEST_CASE("ex3 image-l writes eight curves") {
  const auto dir = scratch("imagel");
  REQUIRE(run_cli({"--out", dir.string(), "ex3", "image-l", "--samples", "128"}).code == cli::kSuccess);
  int curves = 0;
  for (const auto& e : fs::directory_iterator(dir)) {
    const auto name = e.path().filename().string();
    if (name.rfind("image_l_beta_", 0) == 0 && e.path().extension() == ".csv") {
      ++curves;
      CHECK(header(e.path()) == schema_header("curve"));
    }
  }
  CHECK(curves == 8);
  const auto summary = json::parse(slurp(dir / "image_l_summary.json"));
  CHECK(summary.size() == 8);
  for (const auto& key : schemas()["json"]["image_l_summary.json"]) CHECK(summary[0].contains(key.get<std::string>()));
  check_manifest(dir);
}

TEST_CASE("ex2 branch schema") {
  const auto dir = scratch("branch");
  REQUIRE(run_cli({"--out", dir.string(), "ex2", "branch", "--label", "gamma4", "--direction", "down"}).code ==
          cli::kSuccess);
  CHECK(header(dir / "branch_gamma4.csv") == schema_header("branch"));
  check_manifest(dir);
}

TEST_CASE("ex3 bundle outputs") {
  const auto dir = scratch("frame");
  REQUIRE(run_cli({"--out", dir.string(), "ex3", "bundle-frame", "--beta", "0.65"}).code == cli::kSuccess);
  CHECK(header(dir / "bundle_frame_beta_0.65.csv") == schema_header("frame"));
  CHECK(header(dir / "bundle_orbit_beta_0.65.csv") == schema_header("orbit"));
}

TEST_CASE("json table format") {
  const auto dir = scratch("json");
  REQUIRE(run_cli({"--format", "json", "--out", dir.string(), "ex2", "equilibria"}).code == cli::kSuccess);
  const auto t = nlohmann::ordered_json::parse(slurp(dir / "equilibria.json"));
  REQUIRE(t.size() == 5);
  std::string cols;
  for (const auto& [k, v] : t[0].items()) cols += (cols.empty() ? "" : ",") + k;
  CHECK(cols == schema_header("equilibria"));
}

TEST_CASE("identical configurations give identical data files") {
  const auto a = scratch("det_a"), b = scratch("det_b");
  for (const auto& d : {a, b}) {
    REQUIRE(run_cli({"--out", d.string(), "ex3", "sweep", "--samples", "64", "--zeta-pi", "0.25,0.9"}).code ==
            cli::kSuccess);
  }
  const auto ma = manifest(a), mb = manifest(b);
  CHECK(ma["files"] == mb["files"]);
  CHECK(ma["config"] == mb["config"]);
  for (const auto& f : ma["files"]) {
    const auto name = f["name"].get<std::string>();
    CHECK(slurp(a / name) == slurp(b / name));
  }
}

TEST_CASE("export_figure_data") {
  SUBCASE("empty results give an empty manifest") {
    const auto dir = scratch("empty");
    OutputSet out(dir);
    CHECK(cli::export_figure_data({}, out, TableFormat::csv).empty());
    out.finish(cli::kVersion, json::object());
    CHECK(manifest(dir)["files"].empty());
  }
  SUBCASE("one file per dataset") {
    const auto dir = scratch("export");
    OutputSet out(dir);
    cli::FigureResults r;
    AngularOrbit o;
    o.beta = 0.5;
    o.zeta = {0.1, 0.2};
    o.alpha = {0.0, -0.01};
    r.orbits.emplace_back("orbit_a", o);
    r.orbits.emplace_back("orbit_b", o);
    const auto names = cli::export_figure_data(r, out, TableFormat::csv);
    CHECK(names == std::vector<std::string>{"orbit_a.csv", "orbit_b.csv"});
    CHECK(slurp(dir / "orbit_a.csv") == "beta,zeta,alpha_unwrapped\n0.5,0.1,0\n0.5,0.2,-0.01\n");
  }
}

TEST_CASE("serialization") {
  CHECK(format_double(0.1) == "0.1");
  CHECK(format_double(1.0 / 3.0) == "0.3333333333333333");
  CHECK(std::stod(format_double(std::exp(-0.5))) == std::exp(-0.5));
  CHECK(sha256_hex("abc") == "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad");
  Table t{{"a", "b"}, {}};
  t.add({1.5, std::string("x,y")});
  CHECK(t.to_csv() == "a,b\n1.5,\"x,y\"\n");
  CHECK_THROWS_AS(t.add({1.0}), std::logic_error);
}
