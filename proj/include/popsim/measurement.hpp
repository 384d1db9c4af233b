#pragma once
#include <string>
#include <vector>

#include "popsim/detection_model.hpp"
#include "popsim/fields.hpp"
#include "popsim/optics.hpp"
#include "popsim/spread.hpp"

namespace popsim {

/// @brief Environment pointer state label; different labels are orthogonal
class BranchTag {
 public:
  explicit BranchTag(std::string label);
  const std::string& label() const { return label_; }
  bool operator==(const BranchTag&) const = default;

 private:
  std::string label_;
};

struct Branch {
  BranchTag tag;
  JointField2D component;   ///< not renormalized; its norm is the branch weight
};

/// @brief Biphoton entangled with orthogonal environment states, plus the probe register
///
/// No member combines components of different tags coherently, except `merged`,
/// which models deliberately erasing the which-branch record.
class BranchState {
 public:
  explicit BranchState(std::vector<Branch> branches, bool probe_entangled = false);

  const std::vector<Branch>& branches() const { return branches_; }
  double total_probability() const;
  double weight(const BranchTag& tag) const;
  /// The |A> register: false for the isolated probe that stays un-entangled
  bool probe_entangled() const { return probe_entangled_; }

  BranchState merged(const BranchTag& a, const BranchTag& b, const BranchTag& into) const;

 private:
  std::vector<Branch> branches_;
  bool probe_entangled_;
};

double born_probability(const JointField2D& j, Arm arm, const Interval& region);

struct Projection {
  JointField2D state;
  double probability;
};

Projection click_project(const JointField2D& j, const Interval& slit, Arm arm);

/// Branches M_a (clicked arm inside the slit) and M_b (outside)
BranchState entangle_environment(const JointField2D& j, const Interval& slit, Arm arm);

/// @brief Final free flight from the virtual-slit plane to the D2 scan
struct D2Plane {
  ScanGeometry scan;
  Interval virtual_slit;
  double slit_width = 0.0;   ///< d in the reference spread hbar / d
  PhysicalConstants constants;
  PropagationMethod method = PropagationMethod::angular_spectrum;
  Coherence coherence = Coherence::coherent;
  NumericalGuards guards;
};

/// Photon 1 is always the clicked arm; photon 2 is propagated to D2
SpreadReport detect_d2(const JointField2D& state, DetectionModel model, const D2Plane& plane,
                       const Interval& coincidence_slit);
SpreadReport detect_d2(const BranchState& state, DetectionModel model, const D2Plane& plane,
                       const Interval& coincidence_slit);

/// @brief Unnormalized D2 intensity over the scan and how it was obtained
struct ScanIntensity {
  std::vector<double> values;
  std::size_t launch_n = 0;
  double launch_halfwidth = 0.0;
};

/// Incoherent sum of weighted components propagated to the scan positions
ScanIntensity propagate_to_scan(const std::vector<Field1D>& components,
                                const std::vector<double>& weights, const D2Plane& plane);

/// Photon-2 density after free flight, integrated over photon 1
Density1D photon2_marginal(const JointField2D& j, double distance, const PhysicalConstants& c,
                           const NumericalGuards& guards = {});

/// @brief Photon-2 intensity per branch and their sum (no cross terms exist)
struct BranchIntensities {
  Grid1D grid;
  std::vector<double> total;
  std::vector<std::vector<double>> per_branch;
};

BranchIntensities photon2_branch_intensities(const BranchState& s, double distance,
                                             const PhysicalConstants& c,
                                             const NumericalGuards& guards = {});

}  // namespace popsim
