#pragma once
#include <optional>
#include <span>
#include <string>
#include <variant>
#include <vector>

#include "popsim/fields.hpp"

namespace popsim {

struct FreeSpace {
  double distance = 0.0;
};
struct ThinLens {
  double focal_length = 0.0;
};
/// Plane fold mirror; y -> fold_sign * y
struct Mirror {
  int fold_sign = -1;
};
struct Aperture {
  Interval opening;
};
/// Mirror that reflects only inside its patch and transmits the rest
struct MirrorPatch {
  Interval patch;
};

using Element = std::variant<FreeSpace, ThinLens, Mirror, Aperture, MirrorPatch>;

void validate(const Element& e);
std::string describe(const Element& e);
/// Free-space distance contributed by the element (zero for thin elements)
double path_length(const Element& e);
bool is_unitary(const Element& e);

/// @brief Ordered element list of one arm with cumulative path bookkeeping
struct OpticalPath {
  std::vector<Element> elements;

  double length() const;
  std::size_t lens_count() const;
  /// Path length travelled before the first lens
  double length_before_lens() const;
  double length_after_lens() const;
  double focal_length() const;
};

enum class PropagationMethod { angular_spectrum, fraunhofer };

/// @brief Wraparound and bandwidth guards applied after every propagation
struct NumericalGuards {
  bool enabled = true;
  double band_fraction = 0.05;    ///< Outer fraction of the grid on each side
  double band_tolerance = 1e-6;   ///< Maximum probability fraction in that band
  double nyquist_tolerance = 1e-2; ///< Maximum spectral fraction in the outer momentum band

  static NumericalGuards disabled() { return {false, 0.05, 1e-6, 1e-2}; }
};

/// Fraction of |psi|^2 in the outer band of the grid
double guard_band_fraction(std::span<const Complex> amps, double band_fraction);
/// Throws AliasingError if the momentum spectrum reaches the edge of the band
void nyquist_audit(const Field1D& f, const PhysicalConstants& c, const NumericalGuards& g);

Field1D propagate_free(const Field1D& f, double distance, const PhysicalConstants& c,
                       PropagationMethod method = PropagationMethod::angular_spectrum,
                       const NumericalGuards& guards = {});
/// Angular-spectrum propagation of one arm of a joint field
JointField2D propagate_free(const JointField2D& j, Arm arm, double distance,
                            const PhysicalConstants& c, const NumericalGuards& guards = {});

/// Smallest grid length (same spacing) that holds the field after `distance`
std::size_t minimal_grid_n(const Field1D& f, double distance, const PhysicalConstants& c,
                           const NumericalGuards& guards = {});
/// Zero-pads a field symmetrically to n samples at unchanged spacing
Field1D embed(const Field1D& f, std::size_t n);

/// Far-field |psi|^2 at detector positions, scaled by p_y = y p / distance
std::vector<double> fraunhofer_density(const Field1D& f, double distance, const PhysicalConstants& c,
                                       std::span<const double> positions);

/// @brief Outcome of a mirror patch: reflected part inside, transmitted part outside
template <class State>
struct PatchSplit {
  std::optional<State> reflected;
  std::optional<State> transmitted;
  double reflected_weight = 0.0;
  double transmitted_weight = 0.0;
};

/// Unitary elements and apertures; a mirror patch returns its reflected part
Field1D apply_element(const Field1D& f, const Element& e, const PhysicalConstants& c,
                      const NumericalGuards& guards = {});
JointField2D apply_element(const JointField2D& j, Arm arm, const Element& e,
                           const PhysicalConstants& c, const NumericalGuards& guards = {});
PatchSplit<Field1D> split_mirror_patch(const Field1D& f, const MirrorPatch& m);
PatchSplit<JointField2D> split_mirror_patch(const JointField2D& j, Arm arm, const MirrorPatch& m);

/// @brief Two-photon thin-lens imaging check in the unfolded-path picture
struct ImagingReport {
  double object_distance = 0.0;     ///< s_o, measured from the lens back through the source
  double image_distance = 0.0;      ///< s_i, from the lens to the image plane
  double focal_length = 0.0;
  double residual = 0.0;            ///< 1/s_o + 1/s_i - 1/f [1/m]
  double required_image_distance = 0.0;
  double magnification = 0.0;
  bool satisfied = false;
};

ImagingReport imaging_audit(double object_distance, double image_distance, double focal_length,
                            double tolerance = 1e-9);
/// Lens arm runs source -> lens -> image plane; the object plane sits at the end of other_arm
ImagingReport imaging_audit(const OpticalPath& lens_arm, const OpticalPath& other_arm,
                            double tolerance = 1e-9);

}  // namespace popsim
