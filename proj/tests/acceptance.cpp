// Acceptance criteria 1-10: one PASS/FAIL line each, nonzero exit if any fails.
#include <chrono>
#include <cstdio>
#include <filesystem>
#include <functional>
#include <numeric>
#include <sstream>
#include <string>

#include "oracles.hpp"
#include "popsim/cli.hpp"
#include "popsim/experiments.hpp"
#include "popsim/verify.hpp"

using namespace popsim;

namespace {

constexpr double kDiffractionL2 = 1e-2;
constexpr double kDiffractionSeconds = 5.0;
constexpr double kSlitRatioLo = 0.8;
constexpr double kSlitRatioHi = 1.5;
constexpr double kEquivalenceL1 = 1e-9;
constexpr double kImagingRatioMax = 0.5;
constexpr double kSweepSeconds = 30.0;
constexpr double kInterpretationGap = 2.0;
constexpr double kProbeL1 = 1e-9;
constexpr double kVerifySeconds = 60.0;

struct Outcome {
  bool pass;
  std::string detail;
};

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

std::string num(double v) {
  std::ostringstream os;
  os.precision(5);
  os << v;
  return os.str();
}

Outcome diffraction_oracle(const Config& cfg) {
  const auto t0 = std::chrono::steady_clock::now();
  const Scenario s = build_scenario("popper_a", cfg);
  const ScenarioResult r = run_scenario(s);
  const double k = s.constants.wavenumber(), d = s.slit_b.width, a = s.scan.distance;

  double worst_l2 = 0.0, worst_zero = 0.0;
  for (const SpreadReport& rep : r.reports) {
    std::vector<double> ref(rep.positions.size());
    for (std::size_t i = 0; i < ref.size(); ++i) ref[i] = oracle::rect_far_field(d, k, a, rep.positions[i] - s.slit_b.center);
    const double total = std::accumulate(ref.begin(), ref.end(), 0.0);
    double num2 = 0.0, den = 0.0;
    for (std::size_t i = 0; i < ref.size(); ++i) {
      ref[i] /= total;
      num2 += std::pow(rep.probability[i] - ref[i], 2);
      den += ref[i] * ref[i];
    }
    worst_l2 = std::max(worst_l2, std::sqrt(num2 / den));

    // First local minimum right of the center, in the simulation and in the oracle.
    auto first_min = [&](const std::vector<double>& p) {
      std::size_t i = p.size() / 2 + 1;
      while (i + 1 < p.size() && !(p[i] <= p[i - 1] && p[i] <= p[i + 1])) ++i;
      return rep.positions[i];
    };
    worst_zero = std::max(worst_zero, std::abs(first_min(rep.probability) - first_min(ref)));
  }
  const double secs = seconds_since(t0);
  const bool ok = s.grid.window_n == 4096 && worst_l2 < kDiffractionL2 && worst_zero <= s.scan.step * (1 + 1e-9) &&
                  secs < kDiffractionSeconds;
  return {ok, "relative L2 " + num(worst_l2) + " (< " + num(kDiffractionL2) + "), first-zero offset " + num(worst_zero) +
                  " m (<= " + num(s.scan.step) + " m), n = " + std::to_string(s.grid.window_n) + ", " + num(secs) + " s (< " +
                  num(kDiffractionSeconds) + " s)"};
}

Outcome uncertainty_product(const Config& cfg) {
  const Scenario s = build_scenario("popper_a", cfg);
  const ScenarioResult r = run_scenario(s);
  const SpreadReport& ci = r.report(DetectionModel::ci_collapse);

  // Position spread of the slit-projected photon-2 state.
  const Conditional cond = condition_on_region(slit_plane_state(s), Arm::one, s.slit_a, Coherence::coherent);
  const Field1D in_b = apply_element(cond.state.components.front(), Aperture{s.slit_b}, s.constants);
  std::vector<double> y(in_b.grid().size());
  for (std::size_t j = 0; j < y.size(); ++j) y[j] = in_b.grid().coordinate(j);
  const double dy = rms_truncated(in_b.intensity(), y);
  const double dp = ci.spread.hwhm;
  const double ratio = ci.ratio();
  const double hbar = s.constants.hbar;
  const bool ok = ratio >= kSlitRatioLo && ratio <= kSlitRatioHi && dy * dp >= 0.5 * hbar;
  return {ok, "hwhm dp / (hbar/d) = " + num(ratio) + " (band [" + num(kSlitRatioLo) + ", " + num(kSlitRatioHi) +
                  "]), dy*dp / hbar = " + num(dy * dp / hbar) + " (>= 0.5)"};
}

Outcome virtual_slit_equivalence(const Config& cfg) {
  const Scenario ext1 = build_scenario("ext1", cfg);
  const ScenarioResult virt = run_scenario(ext1);
  const ScenarioResult phys = run_scenario(physical_slit_counterpart(ext1));
  const double l1 =
      l1_distance(virt.report(DetectionModel::ci_collapse).probability, phys.report(DetectionModel::ci_collapse).probability);
  return {l1 < kEquivalenceL1, "L1(virtual, physical slit B) = " + num(l1) + " (< " + num(kEquivalenceL1) + ")"};
}

Outcome imaging_null_direction(const Config& cfg) {
  const ScenarioResult r = run_scenario(build_scenario("ks", cfg));
  const double ratio = r.report(DetectionModel::unitary_coincidence).ratio();
  return {ratio < kImagingRatioMax, "unitary-coincidence hwhm / (hbar/d) = " + num(ratio) + " (< " + num(kImagingRatioMax) + ")"};
}

Outcome collett_loudon(const Config& cfg) {
  const auto t0 = std::chrono::steady_clock::now();
  const Scenario pb = build_scenario("popper_b", cfg);
  bool all = true;
  double min_ratio = 1e300;
  std::size_t points = 0;
  for (Coherence coh : {Coherence::coherent, Coherence::incoherent}) {
    const ConditionalSweep sw = collett_loudon_sweep(pb, cfg, coh);
    points = sw.width.size();
    for (double w : sw.width) {
      all = all && w > sw.slit_width;
      min_ratio = std::min(min_ratio, w / sw.slit_width);
    }
  }
  const double secs = seconds_since(t0);
  return {all && points == 10 && secs < kSweepSeconds,
          std::to_string(points) + "-point sweep, both conventions: min width / slit = " + num(min_ratio) + " (> 1), " +
              num(secs) + " s (< " + num(kSweepSeconds) + " s)"};
}

Outcome interpretation_gap(const Config& cfg) {
  const ScenarioResult r = run_scenario(build_scenario("ext2", cfg));
  const SpreadReport& ci = r.report(DetectionModel::ci_collapse);
  const SpreadReport& mwi = r.report(DetectionModel::mwi_isolated_probe);
  const SpreadReport& un = r.report(DetectionModel::unitary_coincidence);
  const double gap = ci.spread.hwhm / mwi.spread.hwhm;
  const double l1 = l1_distance(mwi.probability, un.probability);
  return {gap > kInterpretationGap && l1 < kProbeL1,
          "ci / mwi spread = " + num(gap) + " (> " + num(kInterpretationGap) + "), L1(mwi, unitary) = " + num(l1) + " (< " +
              num(kProbeL1) + ")"};
}

Outcome timing(const Config& cfg) {
  const TimingReport ks = verify_timing(build_scenario("ks", cfg));
  const TimingReport ext1 = verify_timing(build_scenario("ext1", cfg));
  const bool ok = !ks.condition2_ok && ext1.condition1_ok && ext1.condition2_ok;
  return {ok, std::string("ks condition 2 ") + (ks.condition2_ok ? "PASS" : "FAIL") + ", ext1 conditions " +
                  (ext1.condition1_ok ? "PASS" : "FAIL") + "/" + (ext1.condition2_ok ? "PASS" : "FAIL")};
}

Outcome suites(const Config& cfg, const std::vector<std::string>& names) {
  bool ok = true;
  std::string detail;
  for (const std::string& n : names) {
    VerifyOptions opt;
    opt.config = cfg;
    opt.only = n;
    const InvariantResult r = run_verification(opt).front();
    ok = ok && r.passed;
    detail += (detail.empty() ? "" : "; ") + n + (r.passed ? " ok" : " FAILED") + " [" + r.detail + "]";
  }
  return {ok, detail};
}

Outcome verify_wall_time() {
  const auto dir = std::filesystem::temp_directory_path() / "popsim_acceptance_verify";
  std::ostringstream out, err;
  const auto t0 = std::chrono::steady_clock::now();
  const int code = cmd_verify({"--out", dir.string()}, out, err);
  const double secs = seconds_since(t0);
  return {code == 0 && secs < kVerifySeconds,
          "exit code " + std::to_string(code) + ", " + num(secs) + " s (< " + num(kVerifySeconds) + " s)"};
}

}  // namespace

int main() {
  const Config cfg = Config::defaults();
  const std::vector<std::pair<std::string, std::function<Outcome()>>> criteria{
      {"diffraction oracle", [&] { return diffraction_oracle(cfg); }},
      {"uncertainty product", [&] { return uncertainty_product(cfg); }},
      {"virtual-slit equivalence", [&] { return virtual_slit_equivalence(cfg); }},
      {"imaging null-result direction", [&] { return imaging_null_direction(cfg); }},
      {"Collett-Loudon sweep", [&] { return collett_loudon(cfg); }},
      {"interpretation gap", [&] { return interpretation_gap(cfg); }},
      {"timing audits", [&] { return timing(cfg); }},
      {"no-signalling", [&] { return suites(cfg, {"no_signalling"}); }},
      {"numerical hygiene", [&] { return suites(cfg, {"parseval", "unitarity", "resolution", "method"}); }},
      {"verify wall time", [] { return verify_wall_time(); }},
  };
  int failures = 0;
  for (std::size_t i = 0; i < criteria.size(); ++i) {
    Outcome o;
    try {
      o = criteria[i].second();
    } catch (const std::exception& e) {
      o = {false, std::string("error: ") + e.what()};
    }
    failures += o.pass ? 0 : 1;
    std::printf("%s %2zu %s: %s\n", o.pass ? "PASS" : "FAIL", i + 1, criteria[i].first.c_str(), o.detail.c_str());
    std::fflush(stdout);
  }
  std::printf("%d of %zu criteria failed\n", failures, criteria.size());
  return failures == 0 ? 0 : 1;
}
