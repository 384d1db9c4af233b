#include "popsim/experiments.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <sstream>

#include "popsim/error.hpp"

namespace popsim {

namespace {

std::size_t next_pow2(double x) {
  std::size_t n = 16;
  while (static_cast<double>(n) < x) n *= 2;
  return n;
}

std::vector<std::string> split_list(const std::string& s) {
  std::vector<std::string> out;
  std::stringstream ss(s);
  std::string item;
  while (std::getline(ss, item, ',')) {
    const auto b = item.find_first_not_of(" \t");
    const auto e = item.find_last_not_of(" \t");
    if (b != std::string::npos) out.push_back(item.substr(b, e - b + 1));
  }
  return out;
}

double positive(const Config& cfg, const std::string& key) {
  const double v = cfg.number(key);
  if (!(v > 0.0)) throw ConfigError("'" + key + "' must be positive", key, cfg.entry(key).line);
  return v;
}

double nonnegative(const Config& cfg, const std::string& key) {
  const double v = cfg.number(key);
  if (!(v >= 0.0)) throw ConfigError("'" + key + "' must be nonnegative", key, cfg.entry(key).line);
  return v;
}

/// Re-raises a library error with the scenario name prefixed, keeping its type
[[noreturn]] void rethrow_with_context(const std::string& scenario) {
  try {
    throw;
  } catch (const AliasingError& e) {
    throw AliasingError(scenario + ": " + e.what(), e.required_n());
  } catch (const GuardBandError& e) {
    throw GuardBandError(scenario + ": " + e.what(), e.required_n());
  } catch (const NullOutcomeError& e) {
    throw NullOutcomeError(scenario + ": " + e.what());
  } catch (const ResolutionError& e) {
    throw ResolutionError(scenario + ": " + e.what());
  } catch (const ModelMismatchError& e) {
    throw ModelMismatchError(scenario + ": " + e.what());
  } catch (const ConfigError&) {
    throw;
  } catch (const Error& e) {
    throw Error(scenario + ": " + e.what());
  }
}

void check_window(const JointField2D& j, const Scenario& s, const GaussianBiphoton& g) {
  if (!s.guards.enabled) return;
  for (Arm arm : {Arm::one, Arm::two}) {
    const Density1D m = marginal(j, other(arm));
    std::vector<Complex> amp(m.values.size());
    for (std::size_t i = 0; i < amp.size(); ++i) amp[i] = std::sqrt(m.values[i]);
    const double frac = j.is_zero() ? 1.0 : guard_band_fraction(amp, s.guards.band_fraction);
    if (frac > s.guards.band_tolerance) {
      const Grid1D& grid = j.grid(arm);
      const std::size_t need =
          next_pow2(2.0 * 7.0 * g.marginal_rms(arm) / ((1.0 - 2.0 * s.guards.band_fraction) * grid.spacing()));
      std::ostringstream msg;
      msg << "photon-" << (arm == Arm::one ? 1 : 2) << " sampling window of n = " << grid.size() << " holds "
          << frac << " of the probability in its outer guard band (limit " << s.guards.band_tolerance
          << "); use n >= " << need;
      throw GuardBandError(msg.str(), need);
    }
  }
}

/// Local spatial frequency of the Gaussian amplitude must stay below the grid Nyquist limit
void check_bandwidth(const Scenario& s, const GaussianBiphoton& g, const Grid1D& g1, const Grid1D& g2) {
  if (!s.guards.enabled) return;
  const Eigen::Matrix2d im = g.exponent().imag();
  const double r1 = 7.0 * g.marginal_rms(Arm::one), r2 = 7.0 * g.marginal_rms(Arm::two);
  const double k1 = std::abs(im(0, 0)) * r1 + std::abs(im(0, 1)) * r2;
  const double k2 = std::abs(im(1, 1)) * r2 + std::abs(im(0, 1)) * r1;
  const double nyq = std::numbers::pi * (1.0 - 2.0 * s.guards.band_fraction);
  for (auto [kmax, grid] : {std::pair{k1, &g1}, std::pair{k2, &g2}}) {
    if (kmax * grid->spacing() > nyq) {
      const std::size_t need = next_pow2(grid->size() * kmax * grid->spacing() / nyq);
      std::ostringstream msg;
      msg << "biphoton phase curvature exceeds the Nyquist limit of a grid with spacing " << grid->spacing()
          << " m; use n >= " << need << " samples over the same window";
      throw AliasingError(msg.str(), need);
    }
  }
}

}  // namespace

std::string to_string(ScenarioKind k) {
  switch (k) {
    case ScenarioKind::popper_a: return "popper_a";
    case ScenarioKind::popper_b: return "popper_b";
    case ScenarioKind::ks: return "ks";
    case ScenarioKind::ext1: return "ext1";
    case ScenarioKind::ext2: return "ext2";
  }
  return "unknown";
}

const std::vector<std::string>& scenario_names() {
  static const std::vector<std::string> names{"popper_a", "popper_b", "ks", "ext1", "ext2"};
  return names;
}

ScenarioKind parse_scenario_kind(const std::string& name) {
  if (name == "popper_a") return ScenarioKind::popper_a;
  if (name == "popper_b") return ScenarioKind::popper_b;
  if (name == "ks") return ScenarioKind::ks;
  if (name == "ext1") return ScenarioKind::ext1;
  if (name == "ext2") return ScenarioKind::ext2;
  const std::string near = nearest_key(name, scenario_names());
  throw ConfigError("unknown scenario '" + name + "'" + (near.empty() ? "" : " (did you mean '" + near + "'?)"),
                    "scenario", 0, near);
}

GridSettings GridSettings::doubled() const {
  return {2 * window_n, 2 * click_n, 2 * samples_per_slit, 2 * click_samples_per_slit};
}

Interval Scenario::click_region() const {
  if (const auto* a = std::get_if<Aperture>(&click_element)) return a->opening;
  if (const auto* m = std::get_if<MirrorPatch>(&click_element)) return m->patch;
  throw InvalidArgument("click element must be an aperture or a mirror patch");
}

const SpreadReport& ScenarioResult::report(DetectionModel m) const {
  for (const SpreadReport& r : reports)
    if (r.model == m) return r;
  throw InvalidArgument("scenario " + scenario + " has no " + to_string(m) + " report");
}

Scenario build_scenario(const std::string& name, const Config& cfg) {
  Scenario s;
  s.kind = parse_scenario_kind(name);
  s.name = name;

  s.constants.hbar = positive(cfg, "constants.hbar");
  s.constants.wavelength = positive(cfg, "constants.wavelength");
  s.source.sigma_plus = positive(cfg, "source.sigma_plus");
  s.source.sigma_minus = positive(cfg, "source.sigma_minus");
  try {
    s.source.geometry = parse_emission_geometry(cfg.text("source.emission_geometry"));
  } catch (const InvalidArgument& e) {
    throw ConfigError(e.what(), "source.emission_geometry", cfg.entry("source.emission_geometry").line,
                      nearest_key(cfg.text("source.emission_geometry"), {"back_to_back", "collinear_folded"}));
  }
  if (s.source.sigma_plus == s.source.sigma_minus)
    throw ConfigError("contradictory overrides: source.sigma_plus == source.sigma_minus gives an unentangled source",
                      "source.sigma_plus", cfg.entry("source.sigma_plus").line);

  const double width = positive(cfg, "geometry.slit_width");
  const double center = cfg.number("geometry.slit_center");
  s.slit_a = {center, width};
  s.slit_b = {center, width};

  s.grid = {cfg.count("grid.n"), cfg.count("grid.click_arm_n"), cfg.count("grid.samples_per_slit"),
            cfg.count("grid.click_samples_per_slit")};
  if (s.grid.samples_per_slit == 0 || s.grid.click_samples_per_slit == 0)
    throw ConfigError("samples per slit must be positive", "grid.samples_per_slit", cfg.entry("grid.samples_per_slit").line);

  s.scan = {positive(cfg, "scan.half_range"), positive(cfg, "scan.step"), positive(cfg, "geometry.d2_distance")};
  const double dy = width / static_cast<double>(s.grid.samples_per_slit);
  const double ratio = s.scan.step / dy;
  if (std::abs(ratio - std::round(ratio)) > 1e-6 * ratio || std::round(ratio) < 1.0) {
    std::ostringstream msg;
    msg << "contradictory overrides: scan.step = " << s.scan.step
        << " m is not an integer multiple of geometry.slit_width / grid.samples_per_slit = " << dy << " m";
    throw ConfigError(msg.str(), "scan.step", cfg.entry("scan.step").line);
  }

  const std::string method = cfg.text("numerics.method");
  if (method == "angular_spectrum") s.method = PropagationMethod::angular_spectrum;
  else if (method == "fraunhofer") s.method = PropagationMethod::fraunhofer;
  else
    throw ConfigError("numerics.method must be \"angular_spectrum\" or \"fraunhofer\"", "numerics.method",
                      cfg.entry("numerics.method").line, nearest_key(method, {"angular_spectrum", "fraunhofer"}));
  const std::string coherence = cfg.text("numerics.coherence");
  if (coherence == "coherent") s.coherence = Coherence::coherent;
  else if (coherence == "incoherent") s.coherence = Coherence::incoherent;
  else
    throw ConfigError("numerics.coherence must be \"coherent\" or \"incoherent\"", "numerics.coherence",
                      cfg.entry("numerics.coherence").line, nearest_key(coherence, {"coherent", "incoherent"}));
  s.guards = {true, cfg.number("numerics.guard_band_fraction"), positive(cfg, "numerics.guard_tolerance"),
              positive(cfg, "numerics.nyquist_tolerance")};
  if (!(s.guards.band_fraction > 0.0 && s.guards.band_fraction < 0.5))
    throw ConfigError("numerics.guard_band_fraction must lie in (0, 0.5)", "numerics.guard_band_fraction",
                      cfg.entry("numerics.guard_band_fraction").line);
  s.timing_tolerance = nonnegative(cfg, "numerics.timing_tolerance");

  const std::string models_key = "models." + to_string(s.kind);
  for (const std::string& m : split_list(cfg.text(models_key))) {
    try {
      s.models.push_back(parse_detection_model(m));
    } catch (const InvalidArgument& e) {
      throw ConfigError(e.what(), models_key, cfg.entry(models_key).line,
                        nearest_key(m, {"ci-collapse", "unitary-coincidence", "mwi-isolated-probe"}));
    }
  }
  if (s.models.empty()) throw ConfigError("'" + models_key + "' lists no detection model", models_key, cfg.entry(models_key).line);

  const ImagingLayout imaging{positive(cfg, "geometry.source_to_lens"), cfg.number("geometry.focal_length"),
                              positive(cfg, "geometry.lens_to_slit"), positive(cfg, "geometry.open_arm_to_slit")};
  if (imaging.focal_length == 0.0)
    throw ConfigError("geometry.focal_length must be nonzero", "geometry.focal_length", cfg.entry("geometry.focal_length").line);

  switch (s.kind) {
    case ScenarioKind::popper_a:
    case ScenarioKind::popper_b: {
      const double l = positive(cfg, "geometry.popper_slit_distance");
      s.click_path = {{FreeSpace{l}}};
      s.observed_path = {{FreeSpace{l}}};
      s.click_element = Aperture{s.slit_a};
      s.click_to_d1 = nonnegative(cfg, "geometry.slit_to_d1");
      s.physical_b = s.kind == ScenarioKind::popper_a;
      s.d1_to_d2 = s.path_to_d1() + s.path_to_d2();
      break;
    }
    case ScenarioKind::ks: {
      s.imaging = imaging;
      s.lens_in_click_arm = true;
      s.click_path = {{FreeSpace{imaging.source_to_lens}, ThinLens{imaging.focal_length}, FreeSpace{imaging.lens_to_image}}};
      s.observed_path = {{FreeSpace{imaging.open_arm}}};
      s.click_element = Aperture{s.slit_a};
      s.click_to_d1 = nonnegative(cfg, "geometry.slit_to_d1");
      // D1 and D2 sit on opposite sides of the source along the beam line.
      s.d1_to_d2 = s.path_to_d1() + s.path_to_d2();
      break;
    }
    case ScenarioKind::ext1:
    case ScenarioKind::ext2: {
      s.imaging = imaging;
      const double fold = positive(cfg, "geometry.fold_after_lens");
      if (fold >= imaging.lens_to_image)
        throw ConfigError("contradictory overrides: geometry.fold_after_lens must be shorter than geometry.lens_to_slit",
                          "geometry.fold_after_lens", cfg.entry("geometry.fold_after_lens").line);
      s.click_path = {{FreeSpace{imaging.open_arm}}};
      s.observed_path = {{FreeSpace{imaging.source_to_lens}, ThinLens{imaging.focal_length}, FreeSpace{fold},
                          Mirror{-1}, FreeSpace{imaging.lens_to_image - fold}}};
      s.click_element = MirrorPatch{s.slit_a};
      s.click_to_d1 = positive(cfg, "geometry.mirror_patch_to_d1");
      s.d1_to_d2 = positive(cfg, "geometry.d1_to_d2");
      break;
    }
  }
  return s;
}

Scenario physical_slit_counterpart(const Scenario& s) {
  Scenario p = s;
  p.name = s.name + "_physical_b";
  p.physical_b = true;
  p.models = {DetectionModel::ci_collapse};
  return p;
}

TimingReport verify_timing(const Scenario& s) {
  TimingReport t;
  t.tolerance = s.timing_tolerance;
  t.condition1_residual = s.path_to_b() - s.path_to_d1();
  t.condition1_ok = std::abs(t.condition1_residual) <= s.timing_tolerance;
  t.condition2_margin = s.path_to_d2() - (s.path_to_d1() + s.d1_to_d2);
  t.condition2_ok = t.condition2_margin > s.timing_tolerance;
  return t;
}

std::optional<ImagingReport> audit_imaging(const Scenario& s) {
  if (!s.imaging) return std::nullopt;
  const double tol = 1e-9;
  if (s.lens_in_click_arm) return imaging_audit(s.click_path, s.observed_path, tol);
  return imaging_audit(s.observed_path, s.click_path, tol);
}

JointField2D slit_plane_state(const Scenario& s) {
  try {
    const GaussianBiphoton g =
        GaussianBiphoton(s.source).through(Arm::one, s.click_path, s.constants).through(Arm::two, s.observed_path, s.constants);
    const Grid1D g1 = Grid1D::with_spacing(s.grid.click_n, s.slit_a.width / static_cast<double>(s.grid.click_samples_per_slit));
    const Grid1D g2 = Grid1D::with_spacing(s.grid.window_n, s.slit_b.width / static_cast<double>(s.grid.samples_per_slit));
    check_bandwidth(s, g, g1, g2);
    JointField2D j = g.sample(g1, g2);
    check_window(j, s, g);
    if (s.physical_b) j = apply_element(j, Arm::two, Aperture{s.slit_b}, s.constants, s.guards);
    return j.normalized();
  } catch (...) {
    rethrow_with_context(s.name);
  }
}

D2Plane d2_plane(const Scenario& s) {
  return {s.scan, s.slit_b, s.slit_b.width, s.constants, s.method, s.coherence, s.guards};
}

ScenarioResult run_scenario(const Scenario& s) {
  ScenarioResult res;
  res.scenario = s.name;
  res.timing = verify_timing(s);
  res.imaging = audit_imaging(s);
  const JointField2D j = slit_plane_state(s);
  try {
    const Interval region = s.click_region();
    const D2Plane plane = d2_plane(s);
    for (DetectionModel m : s.models) {
      SpreadReport r = [&] {
        switch (m) {
          case DetectionModel::ci_collapse:
            return detect_d2(click_project(j, region, Arm::one).state, m, plane, region);
          case DetectionModel::unitary_coincidence:
            return detect_d2(j, m, plane, region);
          case DetectionModel::mwi_isolated_probe:
            return detect_d2(entangle_environment(j, region, Arm::one), m, plane, region);
        }
        throw InvalidArgument("unknown detection model");
      }();
      r.scenario = s.name;
      res.reports.push_back(std::move(r));
    }
  } catch (...) {
    rethrow_with_context(s.name);
  }
  return res;
}

ConditionalSweep collett_loudon_sweep(const Scenario& popper_b, const Config& cfg, Coherence coherence) {
  const double lo = positive(cfg, "collett_loudon.sigma_plus_min");
  const double hi = positive(cfg, "collett_loudon.sigma_plus_max");
  const std::size_t points = cfg.count("collett_loudon.points");
  if (points < 2 || !(hi > lo))
    throw ConfigError("collett_loudon sweep needs at least two points over an increasing range", "collett_loudon.points",
                      cfg.entry("collett_loudon.points").line);
  ConditionalOptions opt;
  opt.coherence = coherence;
  opt.slit_samples = cfg.count("collett_loudon.slit_samples");
  const TwoArmLayout layout{popper_b.click_path, popper_b.observed_path};
  ConditionalSweep sweep;
  sweep.slit_width = popper_b.slit_a.width;
  for (std::size_t i = 0; i < points; ++i) {
    const double t = static_cast<double>(i) / static_cast<double>(points - 1);
    SourceParams sp = popper_b.source;
    sp.sigma_plus = lo * std::pow(hi / lo, t);
    sweep.sigma_plus.push_back(sp.sigma_plus);
    sweep.width.push_back(collett_loudon_conditional(sp, layout, popper_b.slit_a, popper_b.constants, opt));
  }
  return sweep;
}

std::vector<std::uint64_t> sample_clicks(const SpreadReport& r, double expected_clicks, std::uint64_t seed) {
  if (!(expected_clicks >= 0.0)) throw InvalidArgument("expected click count must be nonnegative");
  std::mt19937_64 rng(seed);
  std::vector<std::uint64_t> counts(r.probability.size(), 0);
  for (std::size_t i = 0; i < counts.size(); ++i) {
    const double mean = expected_clicks * r.probability[i];
    if (mean <= 0.0) continue;
    std::poisson_distribution<std::uint64_t> draw(mean);
    counts[i] = draw(rng);
  }
  return counts;
}

}  // namespace popsim
