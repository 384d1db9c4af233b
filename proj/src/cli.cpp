#include "popsim/cli.hpp"

#include <CLI11.hpp>

#include <chrono>
#include <cstdlib>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <optional>
#include <sstream>

#include "popsim/error.hpp"
#include "popsim/experiments.hpp"
#include "popsim/report_io.hpp"
#include "popsim/verify.hpp"

namespace popsim {

namespace fs = std::filesystem;

namespace {

struct CommonOptions {
  std::string config_path;
  std::vector<std::string> overrides;
  std::string out_dir;
  std::optional<std::size_t> grid_n;
};

void add_common(CLI::App& app, CommonOptions& o) {
  app.add_option("--config", o.config_path, "TOML file overriding the shipped defaults")->check(CLI::ExistingFile);
  app.add_option("--set", o.overrides, "Override one setting, e.g. --set geometry.slit_width=2e-4");
  app.add_option("--out", o.out_dir, "Output directory (default: $POPSIM_OUT_DIR or ./popsim_out)");
  app.add_option("--grid-n", o.grid_n, "Photon-2 samples at the slit-B plane");
}

Config resolve_config(const CommonOptions& o) {
  Config cfg = Config::defaults();
  if (!o.config_path.empty()) cfg.apply(Config::load_file(o.config_path));
  for (const std::string& kv : o.overrides) {
    const auto eq = kv.find('=');
    if (eq == std::string::npos) throw ConfigError("--set expects key=value, got '" + kv + "'", kv);
    cfg.set(kv.substr(0, eq), kv.substr(eq + 1), "--set");
  }
  if (o.grid_n) cfg.set("grid.n", std::to_string(*o.grid_n), "--grid-n");
  return cfg;
}

fs::path output_dir(const CommonOptions& o) {
  if (!o.out_dir.empty()) return o.out_dir;
  if (const char* env = std::getenv("POPSIM_OUT_DIR"); env && *env) return env;
  return "popsim_out";
}

int parse(CLI::App& app, const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  std::vector<std::string> reversed(args.rbegin(), args.rend());
  try {
    app.parse(reversed);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? -1 : exit_config;
  }
  return exit_ok;
}

void append_log(const fs::path& dir, const std::string& line) {
  const std::time_t now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::ofstream log(dir / "popsim.log", std::ios::app);
  log << std::put_time(std::gmtime(&now), "%Y-%m-%dT%H:%M:%SZ") << ' ' << line << '\n';
}

/// Maps library exceptions onto exit codes with a diagnostic
template <class F>
int guarded(std::ostream& err, F&& body) {
  try {
    return body();
  } catch (const ConfigError& e) {
    err << "config error: " << e.what() << '\n';
    if (!e.key().empty()) err << "  key: " << e.key() << '\n';
    if (e.line() > 0) err << "  line: " << e.line() << '\n';
    if (!e.suggestion().empty()) err << "  did you mean: " << e.suggestion() << '\n';
    return exit_config;
  } catch (const NumericalGuardError& e) {
    err << "numerical guard: " << e.what() << '\n';
    if (e.required_n() > 0)
      err << "  remedy: re-run with --grid-n " << e.required_n() << " (or a larger power of two)\n";
    else
      err << "  remedy: enlarge the sampling window or refine the grid\n";
    return exit_numerical_guard;
  } catch (const InvalidArgument& e) {
    err << "invalid argument: " << e.what() << '\n';
    return exit_config;
  } catch (const ModelMismatchError& e) {
    err << "model mismatch: " << e.what() << '\n';
    return exit_config;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return exit_runtime;
  }
}

std::string timing_verdict(const TimingReport& t) {
  if (t.condition1_ok && t.condition2_ok) return "both conditions hold";
  if (!t.condition1_ok && !t.condition2_ok) return "both conditions fail";
  return t.condition1_ok ? "condition 2 fails" : "condition 1 fails";
}

}  // namespace

int cmd_simulate(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app("Simulate D2 momentum spreads", "popsim simulate");
  CommonOptions common;
  std::string scenario = "all";
  std::string model;
  std::optional<std::uint64_t> seed;
  add_common(app, common);
  app.add_option("--scenario", scenario, "popper_a, popper_b, ks, ext1, ext2 or all");
  app.add_option("--model", model, "Restrict to one detection model");
  app.add_option("--seed", seed, "Seed for the Monte Carlo click sampler");
  if (const int rc = parse(app, args, out, err); rc != exit_ok) return rc < 0 ? exit_ok : rc;

  return guarded(err, [&] {
    Config cfg = resolve_config(common);
    if (seed) cfg.set("monte_carlo.seed", std::to_string(*seed), "--seed");
    std::vector<std::string> names;
    if (scenario == "all")
      names = scenario_names();
    else
      names.push_back(to_string(parse_scenario_kind(scenario)));
    if (!model.empty()) {
      const std::string canonical = to_string(parse_detection_model(model));
      for (const std::string& n : names) cfg.set("models." + n, "\"" + canonical + "\"", "--model");
    }

    const fs::path dir = output_dir(common);
    fs::create_directories(dir);
    const double clicks = cfg.number("monte_carlo.clicks");
    const std::uint64_t click_seed = cfg.count("monte_carlo.seed");

    std::ostringstream table;
    table << std::left << std::setw(10) << "scenario" << std::setw(22) << "model" << std::setw(14) << "dp_y (hwhm)"
          << std::setw(10) << "ratio" << "timing\n";
    for (const std::string& n : names) {
      const ScenarioResult res = run_scenario(build_scenario(n, cfg));
      for (const SpreadReport& r : res.reports) {
        const std::string stem = report_stem(r);
        std::ostringstream csv;
        write_report_csv(csv, r);
        write_atomic(dir / (stem + ".csv"), csv.str());
        write_atomic(dir / (stem + ".json"), report_summary(r, res).dump(2) + "\n");
        if (clicks > 0.0) {
          std::ostringstream cc;
          write_clicks_csv(cc, r, sample_clicks(r, clicks, click_seed));
          write_atomic(dir / (stem + "_clicks.csv"), cc.str());
        }
        std::ostringstream dp, ratio;
        dp << std::setprecision(4) << r.spread.hwhm;
        ratio << std::fixed << std::setprecision(3) << r.ratio();
        table << std::setw(10) << res.scenario << std::setw(22) << to_string(r.model) << std::setw(14) << dp.str()
              << std::setw(10) << ratio.str() << timing_verdict(res.timing) << '\n';
      }
    }
    out << table.str();
    out << "ratio = hwhm spread / (hbar/d); reports written to " << dir.string() << '\n';
    append_log(dir, "simulate scenario=" + scenario + (model.empty() ? "" : " model=" + model));
    return static_cast<int>(exit_ok);
  });
}

int cmd_verify(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app("Run the numerical invariant suites", "popsim verify");
  CommonOptions common;
  std::string only;
  add_common(app, common);
  app.add_option("--only", only, "Run a single suite");
  if (const int rc = parse(app, args, out, err); rc != exit_ok) return rc < 0 ? exit_ok : rc;

  return guarded(err, [&] {
    VerifyOptions opt;
    opt.config = resolve_config(common);
    if (!only.empty()) opt.only = only;
    opt.on_result = [&](const InvariantResult& r) {
      out << (r.passed ? "PASS " : "FAIL ") << std::left << std::setw(18) << r.name << std::right << std::fixed
          << std::setprecision(2) << std::setw(7) << r.seconds << " s  " << r.detail << '\n';
      out.flush();
    };
    const std::vector<InvariantResult> results = run_verification(opt);

    nlohmann::json doc{{"format", "popsim-verify/1"}, {"suites", nlohmann::json::array()}};
    const InvariantResult* first_failure = nullptr;
    for (const InvariantResult& r : results) {
      doc["suites"].push_back({{"name", r.name}, {"passed", r.passed}, {"detail", r.detail}, {"metrics", r.metrics}});
      if (!r.passed && !first_failure) first_failure = &r;
    }
    doc["passed"] = first_failure == nullptr;
    const fs::path dir = output_dir(common);
    fs::create_directories(dir);
    write_atomic(dir / "verify.json", doc.dump(2) + "\n");
    append_log(dir, "verify" + (only.empty() ? std::string() : " only=" + only));

    if (first_failure) {
      err << "verification failed: first failing invariant is '" << first_failure->name << "': " << first_failure->detail
          << '\n';
      return static_cast<int>(exit_verify_failed);
    }
    out << "all " << results.size() << " invariant suites passed\n";
    return static_cast<int>(exit_ok);
  });
}

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  const std::string usage = "usage: popsim <simulate|verify> [options]   (use --help after a subcommand)\n";
  if (args.empty()) {
    err << usage;
    return exit_config;
  }
  const std::vector<std::string> rest(args.begin() + 1, args.end());
  if (args[0] == "simulate") return cmd_simulate(rest, out, err);
  if (args[0] == "verify") return cmd_verify(rest, out, err);
  if (args[0] == "--help" || args[0] == "-h") {
    out << usage;
    return exit_ok;
  }
  err << "unknown command '" << args[0] << "'\n" << usage;
  return exit_config;
}

}  // namespace popsim
