#pragma once
#include <Eigen/Core>
#include <array>
#include <string>

#include "popsim/fields.hpp"
#include "popsim/optics.hpp"

namespace popsim {

enum class EmissionGeometry { back_to_back, collinear_folded };

std::string to_string(EmissionGeometry g);
EmissionGeometry parse_emission_geometry(const std::string& s);

/// @brief Double-Gaussian SPDC source parameters
struct SourceParams {
  double sigma_plus = 5e-4;    ///< Width of the center-of-mass coordinate [m]
  double sigma_minus = 2e-4;   ///< Width of the relative coordinate [m]
  EmissionGeometry geometry = EmissionGeometry::back_to_back;

  void validate() const;
};

/// @brief Analytic Gaussian biphoton psi = N exp(-y^T A y / 2) carried through Gaussian optics
///
/// Free space, thin lenses and fold mirrors keep the amplitude Gaussian, so the
/// state is propagated exactly up to the first aperture and sampled there.
class GaussianBiphoton {
 public:
  explicit GaussianBiphoton(const SourceParams& sp);

  GaussianBiphoton through(Arm arm, const Element& e, const PhysicalConstants& c) const;
  GaussianBiphoton through(Arm arm, const OpticalPath& path, const PhysicalConstants& c) const;

  /// Normalized amplitude up to a global phase
  Complex amplitude(double y1, double y2) const;
  /// Samples the amplitude on the tensor grid without renormalizing
  JointField2D sample(const Grid1D& g1, const Grid1D& g2) const;

  /// Covariance matrix of |psi|^2
  Eigen::Matrix2d intensity_covariance() const;
  double marginal_rms(Arm arm) const;
  const Eigen::Matrix2cd& exponent() const { return a_; }

 private:
  explicit GaussianBiphoton(const Eigen::Matrix2cd& a) : a_(a) {}
  Eigen::Matrix2cd a_;
};

/// Samples the source-plane biphoton on the given grids, normalized to 1
JointField2D make_biphoton(const SourceParams& sp, const Grid1D& g1, const Grid1D& g2);

/// Schmidt number K = 1 / sum(lambda^2) from the singular values of the sampled kernel
double schmidt_number(const JointField2D& j);

struct SlitDecomposition {
  JointField2D psi_a;   ///< rows with y1 inside slit A
  JointField2D psi_b;   ///< complement
};

SlitDecomposition decompose_slit_basis(const JointField2D& j, const Interval& slit_a,
                                       const Interval& virtual_b);

/// @brief Source-to-slit-plane paths of both arms
struct TwoArmLayout {
  OpticalPath arm1;   ///< source to the plane of slit A
  OpticalPath arm2;   ///< source to the plane of the virtual slit
};

struct ConditionalOptions {
  Coherence coherence = Coherence::coherent;
  std::size_t slit_samples = 32;        ///< Samples across slit A
  std::size_t samples_per_rms = 64;     ///< Arm-2 samples per conditional length scale
};

/// RMS width of photon 2 at the virtual-slit plane given photon 1 in slit A (no lenses)
double collett_loudon_conditional(const SourceParams& sp, const TwoArmLayout& layout,
                                  const Interval& slit_a, const PhysicalConstants& c,
                                  const ConditionalOptions& opt = {});
/// Conditional photon-2 density at the virtual-slit plane on an adaptive grid
Density1D ghost_conditional_density(const SourceParams& sp, const TwoArmLayout& layout,
                                    const Interval& slit_a, const PhysicalConstants& c,
                                    const ConditionalOptions& opt = {});
/// Same width without the no-lens precondition (imaging control cases)
double ghost_conditional_width(const SourceParams& sp, const TwoArmLayout& layout,
                               const Interval& slit_a, const PhysicalConstants& c,
                               const ConditionalOptions& opt = {});

}  // namespace popsim
