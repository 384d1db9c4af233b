#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "popsim/cli.hpp"
#include "popsim/config.hpp"
#include "popsim/error.hpp"
#include "popsim/verify.hpp"

using namespace popsim;
namespace fs = std::filesystem;

namespace {

fs::path scratch(const std::string& name) {
  const fs::path p = fs::temp_directory_path() / ("popsim_test_" + name);
  fs::remove_all(p);
  fs::create_directories(p);
  return p;
}

struct Run {
  int code;
  std::string out, err;
};

Run cli(const std::vector<std::string>& args) {
  std::ostringstream out, err;
  const int code = run_cli(args, out, err);
  return {code, out.str(), err.str()};
}

}  // namespace

TEST_CASE("shipped defaults") {
  const Config c = Config::defaults();
  CHECK(c.number("geometry.slit_width") == doctest::Approx(1.6e-4));
  CHECK(c.count("grid.n") == 4096);
  CHECK(c.text("source.emission_geometry") == "back_to_back");
  CHECK(c.entry("grid.n").line > 0);
}

TEST_CASE("strict overrides") {
  Config c = Config::defaults();
  SUBCASE("misspelled key names the nearest valid key and its line") {
    try {
      c.apply(Config::parse("[geometry]\n\nslitwidth = 2e-4\n", "user.toml"));
      FAIL("expected a config error");
    } catch (const ConfigError& e) {
      CHECK(e.key() == "geometry.slitwidth");
      CHECK(e.line() == 3);
      CHECK(e.suggestion() == "slit_width");
    }
  }
  SUBCASE("unknown section") {
    CHECK_THROWS_AS(c.apply(Config::parse("[geometri]\nslit_width = 2e-4\n", "user.toml")), ConfigError);
  }
  SUBCASE("type mismatch") {
    CHECK_THROWS_AS(c.apply(Config::parse("[grid]\nn = \"big\"\n", "user.toml")), ConfigError);
  }
  SUBCASE("valid override replaces the value") {
    c.apply(Config::parse("[geometry]\nslit_width = 2e-4   # wider\n", "user.toml"));
    CHECK(c.number("geometry.slit_width") == doctest::Approx(2e-4));
    CHECK(c.entry("geometry.slit_width").source == "user.toml");
  }
  SUBCASE("malformed text") {
    CHECK_THROWS_AS(Config::parse("[geometry\n", "user.toml"), ConfigError);
    CHECK_THROWS_AS(Config::parse("slit_width 2e-4\n", "user.toml"), ConfigError);
  }
}

TEST_CASE("edit distance") {
  CHECK(edit_distance("kitten", "sitting") == 3);
  CHECK(edit_distance("", "abc") == 3);
  CHECK(nearest_key("slitwidth", {"slit_width", "slit_center"}) == "slit_width");
  CHECK(nearest_key("zzzzzzzz", {"slit_width"}).empty());
}

TEST_CASE("command line exit codes") {
  const fs::path dir = scratch("cli");

  SUBCASE("misspelled key in a config file exits 1 with a suggestion") {
    const fs::path cfg = dir / "bad.toml";
    std::ofstream(cfg) << "[geometry]\nslitwidth = 1e-4\n";
    const Run r = cli({"simulate", "--scenario", "ks", "--config", cfg.string(), "--out", dir.string()});
    CHECK(r.code == 1);
    CHECK(r.err.find("slit_width") != std::string::npos);
    CHECK(r.err.find("line: 2") != std::string::npos);
  }
  SUBCASE("too small a grid exits 2 with a remedy") {
    const Run r = cli({"simulate", "--scenario", "ks", "--grid-n", "64", "--out", dir.string()});
    CHECK(r.code == 2);
    CHECK(r.err.find("--grid-n 4096") != std::string::npos);
  }
  SUBCASE("unknown scenario, command and suite exit 1") {
    CHECK(cli({"simulate", "--scenario", "kss", "--out", dir.string()}).code == 1);
    CHECK(cli({"simulat"}).code == 1);
    CHECK(cli({"verify", "--only", "parsevl", "--out", dir.string()}).code == 1);
  }
  SUBCASE("single verification suite") {
    const Run r = cli({"verify", "--only", "parseval", "--out", dir.string()});
    CHECK(r.code == 0);
    CHECK(r.out.find("PASS parseval") != std::string::npos);
    std::ifstream in(dir / "verify.json");
    const nlohmann::json j = nlohmann::json::parse(in);
    CHECK(j.at("passed") == true);
    CHECK(j.at("suites").size() == 1);
  }
  SUBCASE("simulate writes reports and optional click counts") {
    const Run r = cli({"simulate", "--scenario", "popper_b", "--model", "unitary-coincidence", "--set",
                       "monte_carlo.clicks=5000", "--seed", "3", "--out", dir.string()});
    CHECK(r.code == 0);
    CHECK(fs::exists(dir / "popper_b_unitary-coincidence.csv"));
    CHECK(fs::exists(dir / "popper_b_unitary-coincidence.json"));
    CHECK(fs::exists(dir / "popper_b_unitary-coincidence_clicks.csv"));
    CHECK_FALSE(fs::exists(dir / "popper_b_ci-collapse.csv"));
    CHECK(r.out.find("popper_b") != std::string::npos);
  }
  SUBCASE("output directory from the environment") {
    const fs::path env_dir = dir / "from_env";
    ::setenv("POPSIM_OUT_DIR", env_dir.string().c_str(), 1);
    const Run r = cli({"verify", "--only", "roundtrip"});
    ::unsetenv("POPSIM_OUT_DIR");
    CHECK(r.code == 0);
    CHECK(fs::exists(env_dir / "verify.json"));
  }
}

TEST_CASE("suite registry") {
  const std::vector<std::string>& names = verify_suite_names();
  for (const char* n : {"parseval", "roundtrip", "unitarity", "quadrature", "resolution", "method", "no_signalling",
                        "branch_additivity", "timing"})
    CHECK(std::find(names.begin(), names.end(), n) != names.end());
}
