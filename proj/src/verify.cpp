#include "popsim/verify.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <map>
#include <random>
#include <sstream>

#include "popsim/error.hpp"
#include "popsim/experiments.hpp"
#include "popsim/measurement.hpp"
#include "popsim/report_io.hpp"

namespace popsim {

namespace {

constexpr double kPi = std::numbers::pi;

Field1D random_field(std::mt19937_64& rng, std::size_t n, double extent) {
  std::normal_distribution<double> g(0.0, 1.0);
  std::vector<Complex> a(n);
  for (Complex& v : a) v = {g(rng), g(rng)};
  return Field1D(Grid1D(n, extent), std::move(a));
}

std::size_t random_pow2(std::mt19937_64& rng, int lo_exp, int hi_exp) {
  std::uniform_int_distribution<int> e(lo_exp, hi_exp);
  return std::size_t{1} << e(rng);
}

double rel_diff(double a, double b) { return std::abs(a - b) / std::max(std::abs(a), std::abs(b)); }

std::string fmt(double v) {
  std::ostringstream os;
  os.precision(4);
  os << v;
  return os.str();
}

/// Lazily computed scenario runs shared by the resolution and method suites
class RunCache {
 public:
  explicit RunCache(const Config& cfg) : cfg_(cfg) {}

  const ScenarioResult& base(const std::string& name) {
    auto it = base_.find(name);
    if (it == base_.end()) it = base_.emplace(name, run_scenario(build_scenario(name, cfg_))).first;
    return it->second;
  }

  const Config& config() const { return cfg_; }

 private:
  Config cfg_;
  std::map<std::string, ScenarioResult> base_;
};

InvariantResult suite_parseval(RunCache&) {
  std::mt19937_64 rng(101);
  const PhysicalConstants c;
  double worst = 0.0;
  for (int i = 0; i < 100; ++i) {
    const Field1D f = random_field(rng, random_pow2(rng, 4, 12), 1e-3 * (1 + i % 7));
    const Field1D p = to_momentum_space(f, c);
    worst = std::max(worst, std::abs(p.norm2() - f.norm2()) / f.norm2());
  }
  return {"parseval", worst < 1e-10, "max relative norm change " + fmt(worst) + " over 100 random fields (limit 1e-10)",
          {{"max_relative_error", worst}, {"fields", 100}}};
}

InvariantResult suite_roundtrip(RunCache&) {
  std::mt19937_64 rng(102);
  const PhysicalConstants c;
  double worst = 0.0;
  for (int i = 0; i < 100; ++i) {
    const Field1D f = random_field(rng, random_pow2(rng, 4, 12), 2e-3);
    const Field1D back = from_momentum_space(to_momentum_space(f, c), c);
    for (std::size_t j = 0; j < f.grid().size(); ++j) worst = std::max(worst, std::abs(back[j] - f[j]));
  }
  return {"roundtrip", worst < 1e-10, "max abs round-trip error " + fmt(worst) + " (limit 1e-10)",
          {{"max_abs_error", worst}, {"fields", 100}}};
}

InvariantResult suite_unitarity(RunCache&) {
  std::mt19937_64 rng(103);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  const PhysicalConstants c;
  const NumericalGuards off = NumericalGuards::disabled();
  double worst = 0.0;
  for (int i = 0; i < 100; ++i) {
    const Field1D f = random_field(rng, random_pow2(rng, 4, 11), 4e-3);
    const Element elements[] = {FreeSpace{u(rng)}, ThinLens{0.05 + u(rng)}, ThinLens{-0.05 - u(rng)}, Mirror{-1}};
    for (const Element& e : elements) {
      const Field1D g = apply_element(f, e, c, off);
      worst = std::max(worst, std::abs(g.norm2() - f.norm2()) / f.norm2());
    }
  }
  return {"unitarity", worst < 1e-10,
          "max relative norm change " + fmt(worst) + " under free space, lenses and fold mirror (limit 1e-10)",
          {{"max_relative_error", worst}, {"fields", 100}}};
}

InvariantResult suite_semigroup(RunCache&) {
  std::mt19937_64 rng(104);
  std::uniform_real_distribution<double> u(0.0, 0.5);
  const PhysicalConstants c;
  const NumericalGuards off = NumericalGuards::disabled();
  double worst = 0.0;
  for (int i = 0; i < 100; ++i) {
    const Field1D f = random_field(rng, random_pow2(rng, 4, 10), 4e-3);
    const double a = u(rng), b = u(rng);
    const auto m = PropagationMethod::angular_spectrum;
    const Field1D two = propagate_free(propagate_free(f, b, c, m, off), a, c, m, off);
    const Field1D one = propagate_free(f, a + b, c, m, off);
    for (std::size_t j = 0; j < f.grid().size(); ++j) worst = std::max(worst, std::abs(two[j] - one[j]));
  }
  return {"semigroup", worst < 1e-10, "max abs difference propagate(a) after propagate(b) vs propagate(a+b): " + fmt(worst),
          {{"max_abs_error", worst}}};
}

InvariantResult suite_quadrature(RunCache& cache) {
  // FFT spectrum of a sampled slit against a term-by-term DFT summation.
  const PhysicalConstants c;
  const Grid1D g(1024, 1024 * 2.5e-6);
  std::vector<Complex> a(g.size());
  for (std::size_t j = 0; j < g.size(); ++j)
    if (Interval{0.0, 1.6e-4}.contains(g.coordinate(j), 1e-9 * g.spacing())) a[j] = 1.0;
  const Field1D slit(g, std::move(a));
  const Field1D spec = to_momentum_space(slit, c);
  double num = 0.0, den = 0.0;
  for (std::size_t m = 0; m < g.size(); ++m) {
    const double p = spec.grid().coordinate(m);
    Complex acc{};
    for (std::size_t j = 0; j < g.size(); ++j)
      if (slit[j] != Complex{}) acc += slit[j] * std::polar(1.0, -p * g.coordinate(j) / c.hbar);
    const double direct = std::norm(acc * g.spacing() / std::sqrt(2.0 * kPi * c.hbar));
    num += std::pow(std::norm(spec[m]) - direct, 2);
    den += direct * direct;
  }
  const double fft_err = std::sqrt(num / den);

  // Shipped popper_a reports against the continuous rect-aperture far field.
  const ScenarioResult& pa = cache.base("popper_a");
  double worst_l2 = 0.0, worst_zero = 0.0, step = 0.0;
  for (const SpreadReport& r : pa.reports) {
    const Scenario s = build_scenario("popper_a", cache.config());
    const double k = s.constants.wavenumber(), d = s.slit_a.width, dist = s.scan.distance;
    std::vector<double> oracle(r.positions.size());
    double total = 0.0;
    for (std::size_t i = 0; i < oracle.size(); ++i) {
      const double x = 0.5 * k * d * (r.positions[i] - s.slit_b.center) / dist;
      oracle[i] = x == 0.0 ? 1.0 : std::pow(std::sin(x) / x, 2);
      total += oracle[i];
    }
    double n2 = 0.0, d2 = 0.0;
    for (std::size_t i = 0; i < oracle.size(); ++i) {
      oracle[i] /= total;
      n2 += std::pow(r.probability[i] - oracle[i], 2);
      d2 += oracle[i] * oracle[i];
    }
    worst_l2 = std::max(worst_l2, std::sqrt(n2 / d2));
    const double y0 = 2.0 * kPi * dist / (k * d);
    std::size_t i = r.positions.size() / 2 + 1;
    while (i + 1 < r.positions.size() && !(r.probability[i] <= r.probability[i - 1] && r.probability[i] <= r.probability[i + 1])) ++i;
    worst_zero = std::max(worst_zero, std::abs(r.positions[i] - y0));
    step = s.scan.step;
  }
  const bool ok = fft_err < 1e-6 && worst_l2 < 1e-2 && worst_zero <= step * (1.0 + 1e-9);
  return {"quadrature", ok,
          "FFT vs direct DFT relative L2 " + fmt(fft_err) + " (limit 1e-6); popper_a vs rect far field relative L2 " +
              fmt(worst_l2) + " (limit 1e-2); first-zero offset " + fmt(worst_zero) + " m (limit one bin " + fmt(step) + " m)",
          {{"fft_vs_direct_l2", fft_err}, {"popper_a_l2", worst_l2}, {"first_zero_offset_m", worst_zero}}};
}

InvariantResult suite_resolution(RunCache& cache) {
  double worst = 0.0;
  std::string where;
  nlohmann::json per;
  for (const std::string& name : scenario_names()) {
    const ScenarioResult& base = cache.base(name);
    Scenario fine = build_scenario(name, cache.config());
    fine.grid = fine.grid.doubled();
    const ScenarioResult doubled = run_scenario(fine);
    for (const SpreadReport& r : base.reports) {
      const SpreadReport& q = doubled.report(r.model);
      const double e = std::max({rel_diff(r.spread.hwhm, q.spread.hwhm), rel_diff(r.spread.rms_truncated, q.spread.rms_truncated),
                                 rel_diff(r.spread.p95_halfwidth, q.spread.p95_halfwidth)});
      per[name + "/" + to_string(r.model)] = e;
      if (e > worst) {
        worst = e;
        where = name + "/" + to_string(r.model);
      }
    }
  }
  return {"resolution", worst < 5e-3, "max relative spread change on doubling n: " + fmt(worst) + " at " + where + " (limit 0.5%)",
          {{"max_relative_change", worst}, {"reports", per}}};
}

InvariantResult suite_method(RunCache& cache) {
  double worst = 0.0;
  std::size_t compared = 0;
  nlohmann::json per;
  for (const std::string& name : scenario_names()) {
    const ScenarioResult& base = cache.base(name);
    Scenario ff = build_scenario(name, cache.config());
    ff.method = PropagationMethod::fraunhofer;
    ff.models.clear();
    for (const SpreadReport& r : base.reports)
      if (r.far_field()) ff.models.push_back(r.model);
    if (ff.models.empty()) continue;
    const ScenarioResult alt = run_scenario(ff);
    for (DetectionModel m : ff.models) {
      const SpreadReport& a = base.report(m);
      const SpreadReport& b = alt.report(m);
      const double e = std::max({rel_diff(a.spread.hwhm, b.spread.hwhm), rel_diff(a.spread.rms_truncated, b.spread.rms_truncated),
                                 rel_diff(a.spread.p95_halfwidth, b.spread.p95_halfwidth)});
      per[name + "/" + to_string(m)] = e;
      worst = std::max(worst, e);
      ++compared;
    }
  }
  return {"method", compared > 0 && worst < 1e-2,
          "angular spectrum vs Fraunhofer on " + std::to_string(compared) + " far-field reports: max relative spread difference " +
              fmt(worst) + " (limit 1%)",
          {{"max_relative_difference", worst}, {"reports", per}}};
}

InvariantResult suite_no_signalling(RunCache&) {
  std::mt19937_64 rng(105);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  const NumericalGuards off = NumericalGuards::disabled();
  double worst = 0.0;
  for (int t = 0; t < 100; ++t) {
    PhysicalConstants c;
    c.wavelength = 4e-7 + 6e-7 * u(rng);
    SourceParams sp;
    sp.sigma_plus = 1e-4 * std::pow(10.0, u(rng));
    sp.sigma_minus = 1e-5 * std::pow(10.0, u(rng));
    sp.geometry = u(rng) < 0.5 ? EmissionGeometry::back_to_back : EmissionGeometry::collinear_folded;
    const GaussianBiphoton g = GaussianBiphoton(sp)
                                   .through(Arm::one, FreeSpace{0.2 * u(rng)}, c)
                                   .through(Arm::two, FreeSpace{0.2 * u(rng)}, c);
    const double w1 = 8.0 * g.marginal_rms(Arm::one), w2 = 10.0 * g.marginal_rms(Arm::two);
    const Grid1D g1(64, 2.0 * w1), g2(256, 2.0 * w2);
    const JointField2D j = g.sample(g1, g2).normalized();
    const Interval slit{(u(rng) - 0.5) * w1, (0.05 + 0.5 * u(rng)) * w1};
    const double z = 0.3 * u(rng);

    const Density1D direct = photon2_marginal(j, z, c, off);
    std::vector<double> averaged(direct.values.size(), 0.0);
    const double edge = g1.extent();
    const Interval outcomes[] = {{0.5 * (slit.lo() - edge), slit.lo() + edge}, slit, {0.5 * (slit.hi() + edge), edge - slit.hi()}};
    for (const Interval& o : outcomes) {
      if (indices_in(g1, o).empty()) continue;
      try {
        const Projection p = click_project(j, o, Arm::one);
        const Density1D m = photon2_marginal(p.state, z, c, off);
        for (std::size_t i = 0; i < averaged.size(); ++i) averaged[i] += p.probability * m.values[i];
      } catch (const NullOutcomeError&) {
      }
    }
    double l1 = 0.0;
    for (std::size_t i = 0; i < averaged.size(); ++i) l1 += std::abs(averaged[i] - direct.values[i]);
    worst = std::max(worst, l1 * direct.grid.spacing());
  }
  return {"no_signalling", worst < 1e-9,
          "max L1 between photon-2 marginal with and without outcome-averaged projection: " + fmt(worst) +
              " over 100 random configurations (limit 1e-9)",
          {{"max_l1", worst}, {"configs", 100}}};
}

double visibility(const std::vector<double>& v, const Grid1D& g, double half_window) {
  double lo = 1e300, hi = 0.0;
  for (std::size_t i = 0; i < v.size(); ++i) {
    if (std::abs(g.coordinate(i)) > half_window) continue;
    lo = std::min(lo, v[i]);
    hi = std::max(hi, v[i]);
  }
  return (hi - lo) / (hi + lo);
}

std::size_t interior_minima(const std::vector<double>& v, const Grid1D& g, double half_window) {
  std::size_t count = 0;
  for (std::size_t i = 1; i + 1 < v.size(); ++i)
    if (std::abs(g.coordinate(i)) <= half_window && v[i] < v[i - 1] && v[i] < v[i + 1]) ++count;
  return count;
}

InvariantResult suite_branch_additivity(RunCache& cache) {
  // Default ks state: branch sum against the undivided state, and the slit-basis split.
  const Scenario ks = build_scenario("ks", cache.config());
  const JointField2D j = slit_plane_state(ks);
  const BranchState bs = entangle_environment(j, ks.click_region(), Arm::one);
  const double z = 0.02;
  const BranchIntensities bi = photon2_branch_intensities(bs, z, ks.constants, ks.guards);
  const Density1D whole = photon2_marginal(j, z, ks.constants, ks.guards);
  const double peak = *std::max_element(whole.values.begin(), whole.values.end());
  double cross = 0.0;
  for (std::size_t i = 0; i < whole.values.size(); ++i) cross = std::max(cross, std::abs(bi.total[i] - whole.values[i]) / peak);

  const SlitDecomposition dec = decompose_slit_basis(j, ks.slit_a, ks.slit_b);
  double eq_err = std::abs(bs.weight(BranchTag("M_a")) - dec.psi_a.norm2()) +
                  std::abs(bs.weight(BranchTag("M_b")) - dec.psi_b.norm2());
  const JointField2D pa = propagate_free(dec.psi_a, Arm::two, z, ks.constants, ks.guards);
  const JointField2D ba = propagate_free(bs.branches().front().component, Arm::two, z, ks.constants, ks.guards);
  double comp_err = 0.0;
  for (std::size_t i = 0; i < pa.amplitudes().size(); ++i)
    comp_err = std::max(comp_err, std::abs(pa.amplitudes()[i] - ba.amplitudes()[i]));

  // Two which-path branches: orthogonal tags give no fringes, a deliberate merge restores them.
  const PhysicalConstants c;
  const Grid1D g1(16, 16 * 1e-5), g2(4096, 4096 * 5e-6);
  std::vector<Complex> p1(g1.size()), left(g2.size()), right(g2.size());
  for (std::size_t i = 0; i < g1.size(); ++i) p1[i] = std::exp(-std::pow(g1.coordinate(i) / 3e-5, 2));
  for (std::size_t i = 0; i < g2.size(); ++i) {
    const double y = g2.coordinate(i);
    left[i] = std::exp(-std::pow((y + 2e-4) / 5e-5, 2));
    right[i] = std::exp(-std::pow((y - 2e-4) / 5e-5, 2));
  }
  const Field1D f1 = Field1D(g1, p1).normalized();
  auto half = [&](std::vector<Complex> v) { return product(f1, Field1D(g2, std::move(v)).normalized().scaled(std::sqrt(0.5))); };
  const BranchState paths({{BranchTag("M_a"), half(left)}, {BranchTag("M_b"), half(right)}});
  const double zz = 0.5;
  const BranchIntensities separate = photon2_branch_intensities(paths, zz, c);
  const BranchIntensities merged =
      photon2_branch_intensities(paths.merged(BranchTag("M_a"), BranchTag("M_b"), BranchTag("M")), zz, c);
  const std::size_t minima_sep = interior_minima(separate.total, g2, 1e-3);
  const double v_merged = visibility(merged.total, g2, 1e-3);

  const bool ok = cross < 1e-12 && eq_err < 1e-12 && comp_err < 1e-10 && v_merged > 0.5 && minima_sep == 0;
  return {"branch_additivity", ok,
          "cross-term probe " + fmt(cross) + " (limit 1e-12); branch weights vs slit decomposition " + fmt(eq_err) +
              "; component mismatch " + fmt(comp_err) + "; intensity minima with tagged branches " + std::to_string(minima_sep) +
              " (must be 0); merged fringe visibility " + fmt(v_merged) + " (must exceed 0.5)",
          {{"cross_term", cross}, {"weight_mismatch", eq_err}, {"component_mismatch", comp_err},
           {"minima_separate", minima_sep}, {"visibility_merged", v_merged}}};
}

InvariantResult suite_timing(RunCache& cache) {
  const TimingReport ks = verify_timing(build_scenario("ks", cache.config()));
  const TimingReport ext1 = verify_timing(build_scenario("ext1", cache.config()));
  const bool ok = !ks.condition2_ok && ext1.condition1_ok && ext1.condition2_ok;
  return {"timing", ok,
          "ks condition 2 " + std::string(ks.condition2_ok ? "PASS" : "FAIL") + " (margin " + fmt(ks.condition2_margin) +
              " m); ext1 conditions " + (ext1.condition1_ok ? "PASS" : "FAIL") + "/" + (ext1.condition2_ok ? "PASS" : "FAIL"),
          {{"ks", timing_json(ks)}, {"ext1", timing_json(ext1)}}};
}

using Suite = InvariantResult (*)(RunCache&);

const std::vector<std::pair<std::string, Suite>>& suites() {
  static const std::vector<std::pair<std::string, Suite>> s{
      {"parseval", suite_parseval},
      {"roundtrip", suite_roundtrip},
      {"unitarity", suite_unitarity},
      {"semigroup", suite_semigroup},
      {"quadrature", suite_quadrature},
      {"resolution", suite_resolution},
      {"method", suite_method},
      {"no_signalling", suite_no_signalling},
      {"branch_additivity", suite_branch_additivity},
      {"timing", suite_timing},
  };
  return s;
}

}  // namespace

const std::vector<std::string>& verify_suite_names() {
  static const std::vector<std::string> names = [] {
    std::vector<std::string> n;
    for (const auto& [name, fn] : suites()) n.push_back(name);
    return n;
  }();
  return names;
}

std::vector<InvariantResult> run_verification(const VerifyOptions& opt) {
  if (opt.only) {
    const auto& names = verify_suite_names();
    if (std::find(names.begin(), names.end(), *opt.only) == names.end()) {
      const std::string near = nearest_key(*opt.only, names);
      throw ConfigError("unknown verification suite '" + *opt.only + "'" + (near.empty() ? "" : " (did you mean '" + near + "'?)"),
                        "only", 0, near);
    }
  }
  RunCache cache(opt.config);
  std::vector<InvariantResult> results;
  for (const auto& [name, fn] : suites()) {
    if (opt.only && *opt.only != name) continue;
    const auto t0 = std::chrono::steady_clock::now();
    InvariantResult r = fn(cache);
    r.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    if (opt.on_result) opt.on_result(r);
    results.push_back(std::move(r));
  }
  return results;
}

}  // namespace popsim
