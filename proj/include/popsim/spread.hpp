#pragma once
#include <span>
#include <string>
#include <vector>

#include "popsim/detection_model.hpp"
#include "popsim/fields.hpp"
#include "popsim/optics.hpp"

namespace popsim {

/// @brief Lattice of D2 detector positions y_s = s * step, |y_s| <= half_range
struct ScanGeometry {
  double half_range = 0.06;   ///< [m]
  double step = 2e-5;         ///< [m]
  double distance = 3.0;      ///< virtual-slit plane to D2, a [m]

  void validate() const;
  std::vector<double> positions() const;
  /// p_y per metre of detector offset: p / a
  double momentum_per_metre(const PhysicalConstants& c) const { return c.momentum() / distance; }
};

/// Central mass fraction used by the truncated RMS
inline constexpr double kRmsMassWindow = 0.999;

/// @brief The three spread estimators, all in momentum units
struct SpreadEstimates {
  double hwhm = 0.0;
  double rms_truncated = 0.0;
  double p95_halfwidth = 0.0;
};

// Position-unit estimators on a sampled distribution (weights need not be normalized).
double hwhm(std::span<const double> p, std::span<const double> y);
double rms_truncated(std::span<const double> p, std::span<const double> y,
                     double mass_window = kRmsMassWindow);
double p95_halfwidth(std::span<const double> p, std::span<const double> y);

SpreadEstimates spread_estimators(std::span<const double> distribution, const ScanGeometry& scan,
                                  const PhysicalConstants& c);

/// @brief D2 arrival distribution plus spread estimates and provenance
struct SpreadReport {
  std::string scenario;
  DetectionModel model = DetectionModel::ci_collapse;
  std::vector<double> positions;     ///< y [m]
  std::vector<double> probability;   ///< sums to 1
  double momentum_per_metre = 0.0;   ///< p / a
  SpreadEstimates spread;
  double slit_width = 0.0;
  double reference = 0.0;            ///< hbar / d_slit

  // Provenance
  PropagationMethod method = PropagationMethod::angular_spectrum;
  Coherence coherence = Coherence::coherent;
  double fresnel_number = 0.0;       ///< launch half-width^2 / (lambda a)
  std::size_t window_n = 0;          ///< photon-2 samples at the slit plane
  std::size_t click_n = 0;           ///< photon-1 samples at the click plane
  double window_spacing = 0.0;
  std::size_t launch_n = 0;          ///< largest padded grid used for the final propagation
  std::size_t components = 0;        ///< mixture components propagated

  std::vector<double> p_y() const;
  double ratio() const { return spread.hwhm / reference; }
  bool far_field() const { return fresnel_number < 0.1; }
};

/// L1 distance between two distributions on the same scan
double l1_distance(std::span<const double> a, std::span<const double> b);

}  // namespace popsim
