#pragma once
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "popsim/config.hpp"
#include "popsim/fields.hpp"
#include "popsim/measurement.hpp"
#include "popsim/optics.hpp"
#include "popsim/source.hpp"
#include "popsim/spread.hpp"

namespace popsim {

enum class ScenarioKind { popper_a, popper_b, ks, ext1, ext2 };

std::string to_string(ScenarioKind k);
ScenarioKind parse_scenario_kind(const std::string& name);
const std::vector<std::string>& scenario_names();

/// @brief Lens-arm distances that the imaging layouts share
struct ImagingLayout {
  double source_to_lens = 0.0;
  double focal_length = 0.0;
  double lens_to_image = 0.0;
  double open_arm = 0.0;

  bool operator==(const ImagingLayout&) const = default;
};

struct GridSettings {
  std::size_t window_n = 4096;
  std::size_t click_n = 1024;
  std::size_t samples_per_slit = 64;
  std::size_t click_samples_per_slit = 16;

  /// Same windows sampled twice as finely
  GridSettings doubled() const;
};

/// @brief Fully resolved optical layout; photon 1 (arm 1) is the photon whose detector clicks
struct Scenario {
  std::string name;
  ScenarioKind kind = ScenarioKind::ks;
  PhysicalConstants constants;
  SourceParams source;

  OpticalPath click_path;       ///< source to the click plane (slit A or mirror MA)
  Element click_element;        ///< Aperture or MirrorPatch
  double click_to_d1 = 0.0;
  OpticalPath observed_path;    ///< source to the slit-B plane
  Interval slit_a;
  Interval slit_b;
  bool physical_b = false;
  double d1_to_d2 = 0.0;
  std::optional<ImagingLayout> imaging;
  bool lens_in_click_arm = false;

  GridSettings grid;
  ScanGeometry scan;
  PropagationMethod method = PropagationMethod::angular_spectrum;
  Coherence coherence = Coherence::coherent;
  NumericalGuards guards;
  double timing_tolerance = 1e-9;
  std::vector<DetectionModel> models;

  Interval click_region() const;
  double path_to_d1() const { return click_path.length() + click_to_d1; }
  double path_to_b() const { return observed_path.length(); }
  double path_to_d2() const { return observed_path.length() + scan.distance; }
};

/// @brief Path-length audit of when the D1 click can be known at the D2 side
struct TimingReport {
  bool condition1_ok = false;
  double condition1_residual = 0.0;   ///< source->B minus source->D1 [m]
  bool condition2_ok = false;
  double condition2_margin = 0.0;     ///< source->D2 minus (source->D1 + D1->D2) [m]
  double tolerance = 0.0;
};

struct ScenarioResult {
  std::string scenario;
  TimingReport timing;
  std::optional<ImagingReport> imaging;
  std::vector<SpreadReport> reports;

  const SpreadReport& report(DetectionModel m) const;
};

Scenario build_scenario(const std::string& name, const Config& config);
/// The layout of `s` with a physical slit B and the ci-collapse model only
Scenario physical_slit_counterpart(const Scenario& s);
TimingReport verify_timing(const Scenario& s);
std::optional<ImagingReport> audit_imaging(const Scenario& s);

/// Biphoton sampled at the click plane (arm 1) and slit-B plane (arm 2), normalized
JointField2D slit_plane_state(const Scenario& s);
D2Plane d2_plane(const Scenario& s);
ScenarioResult run_scenario(const Scenario& s);

/// @brief Lens-free sweep of the conditional width over the source size
struct ConditionalSweep {
  std::vector<double> sigma_plus;
  std::vector<double> width;
  double slit_width = 0.0;
};

ConditionalSweep collett_loudon_sweep(const Scenario& popper_b, const Config& config,
                                      Coherence coherence);

/// Poisson detector counts per scan position for `expected_clicks` mean detections
std::vector<std::uint64_t> sample_clicks(const SpreadReport& r, double expected_clicks, std::uint64_t seed);

}  // namespace popsim
