#pragma once
#include <complex>
#include <cstddef>
#include <iosfwd>
#include <numbers>
#include <span>
#include <vector>

namespace popsim {

using Complex = std::complex<double>;

/// @brief Physical constants shared by every scenario
struct PhysicalConstants {
  double hbar = 1.0;              ///< Action unit (natural units by default)
  double wavelength = 702.2e-9;   ///< Photon wavelength [m]

  double wavenumber() const { return 2.0 * std::numbers::pi / wavelength; }
  /// Total photon momentum p = hbar k
  double momentum() const { return hbar * wavenumber(); }
  void validate() const;
};

/// @brief Photon label; arm 1 always carries the photon whose detector clicks
enum class Arm { one = 1, two = 2 };

inline Arm other(Arm a) { return a == Arm::one ? Arm::two : Arm::one; }

/// @brief Uniform centered power-of-two sampling of one transverse axis
class Grid1D {
 public:
  Grid1D(std::size_t n, double extent);
  static Grid1D with_spacing(std::size_t n, double spacing);

  std::size_t size() const { return n_; }
  double extent() const { return extent_; }
  double spacing() const { return spacing_; }
  double coordinate(std::size_t j) const {
    return (static_cast<double>(j) - static_cast<double>(n_ / 2)) * spacing_;
  }
  double min() const { return coordinate(0); }
  double max() const { return coordinate(n_ - 1); }

  bool operator==(const Grid1D&) const = default;

 private:
  std::size_t n_;
  double extent_;
  double spacing_;
};

/// True when both grids have the same n and spacings equal to relative tol
bool same_lattice(const Grid1D& a, const Grid1D& b, double rel_tol = 1e-12);

/// @brief Half-open interval [center - width/2, center + width/2)
struct Interval {
  double center = 0.0;
  double width = 0.0;

  double lo() const { return center - 0.5 * width; }
  double hi() const { return center + 0.5 * width; }
  /// Membership with edges shifted by `tol` so lattice points on the lower edge count
  bool contains(double y, double tol = 0.0) const { return y >= lo() - tol && y < hi() - tol; }
  static Interval whole_axis() { return {0.0, 1e300}; }
};

/// Index range [first, last) of grid samples inside the interval
struct IndexRange {
  std::size_t first = 0;
  std::size_t last = 0;
  std::size_t count() const { return last - first; }
  bool empty() const { return last <= first; }
};
IndexRange indices_in(const Grid1D& g, const Interval& region);

enum class Domain { position, momentum };

/// @brief Sampled single-photon amplitude; |psi|^2 * spacing sums to probability
class Field1D {
 public:
  Field1D(Grid1D grid, std::vector<Complex> amplitudes, Domain domain = Domain::position);

  const Grid1D& grid() const { return grid_; }
  Domain domain() const { return domain_; }
  std::span<const Complex> amplitudes() const { return amps_; }
  const Complex& operator[](std::size_t j) const { return amps_[j]; }

  double norm2() const;
  Field1D normalized() const;
  Field1D scaled(double factor) const;
  std::vector<double> intensity() const;

 private:
  Grid1D grid_;
  std::vector<Complex> amps_;
  Domain domain_;
};

/// @brief Real distribution sampled on a grid (densities, marginals)
struct Density1D {
  Grid1D grid;
  std::vector<double> values;

  double integral() const;
};

/// @brief Biphoton amplitude psi(y1, y2); row-major with arm 1 as the slow index
class JointField2D {
 public:
  JointField2D(Grid1D grid1, Grid1D grid2, std::vector<Complex> amplitudes);
  /// Zero-norm joint fields are only reachable through these two factories
  static JointField2D zeros(Grid1D grid1, Grid1D grid2);
  static JointField2D allow_zero(Grid1D grid1, Grid1D grid2, std::vector<Complex> amplitudes);

  const Grid1D& grid(Arm a) const { return a == Arm::one ? g1_ : g2_; }
  std::size_t n1() const { return g1_.size(); }
  std::size_t n2() const { return g2_.size(); }
  std::span<const Complex> amplitudes() const { return amps_; }
  const Complex& at(std::size_t i1, std::size_t i2) const { return amps_[i1 * g2_.size() + i2]; }
  std::span<const Complex> row(std::size_t i1) const {
    return std::span<const Complex>(amps_).subspan(i1 * g2_.size(), g2_.size());
  }

  double norm2() const;
  bool is_zero() const;
  JointField2D normalized() const;

 private:
  struct Unchecked {};
  JointField2D(Grid1D grid1, Grid1D grid2, std::vector<Complex> amplitudes, Unchecked);

  Grid1D g1_;
  Grid1D g2_;
  std::vector<Complex> amps_;
};

JointField2D product(const Field1D& f1, const Field1D& f2);

/// Field with arm-2 samples of row i1 (not renormalized)
Field1D row_field(const JointField2D& j, std::size_t i1);

Field1D to_momentum_space(const Field1D& f, const PhysicalConstants& c);
Field1D from_momentum_space(const Field1D& f, const PhysicalConstants& c);
/// Momentum grid paired with a position grid: spacing 2 pi hbar / (n dy)
Grid1D momentum_grid(const Grid1D& position, const PhysicalConstants& c);

/// Integrates |psi|^2 over `integrated` and returns the density on the other arm
Density1D marginal(const JointField2D& j, Arm integrated);

enum class Coherence { coherent, incoherent };

/// @brief Weighted incoherent ensemble of normalized single-photon states
struct Mixture {
  std::vector<Field1D> components;
  std::vector<double> weights;   ///< Sum to 1

  Density1D density() const;
};

struct Conditional {
  Mixture state;        ///< One component when coherent
  double probability;   ///< Born weight of the region
};

/// Projects `arm` onto the region and returns the conditional state of the other arm
Conditional condition_on_region(const JointField2D& j, Arm arm, const Interval& region,
                                Coherence coherence = Coherence::coherent);

void write_field(std::ostream& os, const Field1D& f);
Field1D read_field(std::istream& is);

}  // namespace popsim
