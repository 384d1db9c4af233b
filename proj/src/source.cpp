#include "popsim/source.hpp"

#include <algorithm>
#include <Eigen/Dense>
#include <Eigen/SVD>
#include <cmath>
#include <sstream>

#include "popsim/error.hpp"

namespace popsim {

namespace {

constexpr double kPi = std::numbers::pi;
constexpr std::size_t kMaxConditionalN = std::size_t{1} << 20;

std::size_t next_pow2(double x) {
  std::size_t n = 16;
  while (static_cast<double>(n) < x) n *= 2;
  return n;
}

int index(Arm a) { return a == Arm::one ? 0 : 1; }

}  // namespace

std::string to_string(EmissionGeometry g) {
  return g == EmissionGeometry::back_to_back ? "back_to_back" : "collinear_folded";
}

EmissionGeometry parse_emission_geometry(const std::string& s) {
  if (s == "back_to_back") return EmissionGeometry::back_to_back;
  if (s == "collinear_folded") return EmissionGeometry::collinear_folded;
  throw InvalidArgument("unknown emission geometry '" + s + "'");
}

void SourceParams::validate() const {
  if (!(sigma_plus > 0.0) || !std::isfinite(sigma_plus)) throw InvalidArgument("sigma_plus must be positive");
  if (!(sigma_minus > 0.0) || !std::isfinite(sigma_minus))
    throw InvalidArgument("sigma_minus must be positive");
}

GaussianBiphoton::GaussianBiphoton(const SourceParams& sp) {
  sp.validate();
  const double ip = 1.0 / (sp.sigma_plus * sp.sigma_plus);
  const double im = 1.0 / (sp.sigma_minus * sp.sigma_minus);
  const double diag = 0.25 * (ip + im);
  double off = 0.25 * (ip - im);
  // Each back-to-back photon is described in its own frame, which mirrors arm 2.
  if (sp.geometry == EmissionGeometry::back_to_back) off = -off;
  a_ << diag, off, off, diag;
}

GaussianBiphoton GaussianBiphoton::through(Arm arm, const Element& e, const PhysicalConstants& c) const {
  validate(e);
  const int i = index(arm);
  Eigen::Matrix2cd a = a_;
  if (const auto* s = std::get_if<FreeSpace>(&e)) {
    if (s->distance == 0.0) return *this;
    Eigen::Matrix2cd inv = a.inverse();
    inv(i, i) += Complex(0.0, s->distance / c.wavenumber());
    a = inv.inverse();
    a(0, 1) = a(1, 0) = 0.5 * (a(0, 1) + a(1, 0));
  } else if (const auto* l = std::get_if<ThinLens>(&e)) {
    a(i, i) += Complex(0.0, c.wavenumber() / l->focal_length);
  } else if (const auto* m = std::get_if<Mirror>(&e)) {
    if (m->fold_sign == -1) a(0, 1) = a(1, 0) = -a(0, 1);
  } else {
    throw InvalidArgument("element " + describe(e) + " does not preserve the Gaussian form");
  }
  return GaussianBiphoton(a);
}

GaussianBiphoton GaussianBiphoton::through(Arm arm, const OpticalPath& path, const PhysicalConstants& c) const {
  GaussianBiphoton g = *this;
  for (const Element& e : path.elements) g = g.through(arm, e, c);
  return g;
}

Complex GaussianBiphoton::amplitude(double y1, double y2) const {
  const Eigen::Matrix2d re = a_.real();
  const double norm = std::pow(re.determinant(), 0.25) / std::sqrt(kPi);
  const Complex q = a_(0, 0) * y1 * y1 + 2.0 * a_(0, 1) * y1 * y2 + a_(1, 1) * y2 * y2;
  return norm * std::exp(-0.5 * q);
}

JointField2D GaussianBiphoton::sample(const Grid1D& g1, const Grid1D& g2) const {
  const std::size_t n1 = g1.size(), n2 = g2.size();
  std::vector<Complex> a(n1 * n2);
  const Eigen::Matrix2d re = a_.real();
  const double norm = std::pow(re.determinant(), 0.25) / std::sqrt(kPi);
  std::vector<Complex> c22(n2);
  for (std::size_t k = 0; k < n2; ++k) {
    const double y2 = g2.coordinate(k);
    c22[k] = std::exp(-0.5 * a_(1, 1) * y2 * y2);
  }
  for (std::size_t i = 0; i < n1; ++i) {
    const double y1 = g1.coordinate(i);
    const double edge = std::max(std::abs(g2.coordinate(0)), std::abs(g2.coordinate(n2 - 1)));
    if (std::abs(a_(0, 1).real() * y1) * edge > 300.0 || 0.5 * a_(0, 0).real() * y1 * y1 > 300.0) {
      // Separate factors would overflow; evaluate the full exponent instead.
      for (std::size_t k = 0; k < n2; ++k) {
        const double y2 = g2.coordinate(k);
        a[i * n2 + k] = norm * std::exp(-0.5 * (a_(0, 0) * y1 * y1 + 2.0 * a_(0, 1) * y1 * y2 + a_(1, 1) * y2 * y2));
      }
      continue;
    }
    const Complex c11 = norm * std::exp(-0.5 * a_(0, 0) * y1 * y1);
    // exp(-A12 y1 y2) advanced along y2 by a constant complex ratio.
    const Complex step = std::exp(-a_(0, 1) * y1 * g2.spacing());
    Complex cross = std::exp(-a_(0, 1) * y1 * g2.coordinate(0));
    for (std::size_t k = 0; k < n2; ++k) {
      if (k % 512 == 0) cross = std::exp(-a_(0, 1) * y1 * g2.coordinate(k));
      a[i * n2 + k] = c11 * cross * c22[k];
      cross *= step;
    }
  }
  return JointField2D::allow_zero(g1, g2, std::move(a));
}

Eigen::Matrix2d GaussianBiphoton::intensity_covariance() const {
  return (2.0 * a_.real()).inverse();
}

double GaussianBiphoton::marginal_rms(Arm arm) const {
  const int i = index(arm);
  return std::sqrt(intensity_covariance()(i, i));
}

JointField2D make_biphoton(const SourceParams& sp, const Grid1D& g1, const Grid1D& g2) {
  sp.validate();
  const double finest = std::min(sp.sigma_plus, sp.sigma_minus);
  for (const Grid1D* g : {&g1, &g2}) {
    if (g->spacing() * 8.0 > finest) {
      std::ostringstream msg;
      msg << "grid spacing " << g->spacing() << " m resolves "
          << (sp.sigma_minus <= sp.sigma_plus ? "sigma_minus" : "sigma_plus") << " = " << finest
          << " m with fewer than 8 samples";
      throw ResolutionError(msg.str());
    }
  }
  JointField2D j = GaussianBiphoton(sp).sample(g1, g2);
  if (j.is_zero()) throw ResolutionError("source lies entirely outside the sampling window");
  return j.normalized();
}

double schmidt_number(const JointField2D& j) {
  const std::size_t n1 = j.n1(), n2 = j.n2();
  Eigen::MatrixXcd m(static_cast<Eigen::Index>(n1), static_cast<Eigen::Index>(n2));
  for (std::size_t i = 0; i < n1; ++i)
    for (std::size_t k = 0; k < n2; ++k) m(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(k)) = j.at(i, k);
  Eigen::BDCSVD<Eigen::MatrixXcd> svd(m);
  const Eigen::VectorXd s2 = svd.singularValues().array().square();
  const double total = s2.sum();
  if (!(total > 0.0)) throw InvalidArgument("Schmidt number of a zero field");
  const double purity = (s2 / total).array().square().sum();
  return 1.0 / purity;
}

SlitDecomposition decompose_slit_basis(const JointField2D& j, const Interval& slit_a,
                                       const Interval& virtual_b) {
  const Grid1D& g1 = j.grid(Arm::one);
  const Grid1D& g2 = j.grid(Arm::two);
  if (indices_in(g1, slit_a).empty()) throw InvalidArgument("slit A lies outside the arm-1 grid");
  if (indices_in(g2, virtual_b).empty()) throw InvalidArgument("virtual slit B lies outside the arm-2 grid");
  const IndexRange r = indices_in(g1, slit_a);
  const std::size_t n2 = j.n2();
  std::vector<Complex> a(j.amplitudes().size()), b(j.amplitudes().size());
  for (std::size_t i = 0; i < j.n1(); ++i) {
    auto& dst = (i >= r.first && i < r.last) ? a : b;
    auto row = j.row(i);
    std::copy(row.begin(), row.end(), dst.begin() + static_cast<std::ptrdiff_t>(i * n2));
  }
  return {JointField2D::allow_zero(g1, g2, std::move(a)), JointField2D::allow_zero(g1, g2, std::move(b))};
}

Density1D ghost_conditional_density(const SourceParams& sp, const TwoArmLayout& layout,
                                    const Interval& slit_a, const PhysicalConstants& c,
                                    const ConditionalOptions& opt) {
  const GaussianBiphoton g =
      GaussianBiphoton(sp).through(Arm::one, layout.arm1, c).through(Arm::two, layout.arm2, c);

  const double dy1 = slit_a.width / static_cast<double>(opt.slit_samples);
  const std::size_t n1 = next_pow2(2.0 * (std::abs(slit_a.center) + slit_a.width) / dy1);
  const Grid1D g1 = Grid1D::with_spacing(n1, dy1);

  // Intensity exponent y^T Re(A) y: conditional width and drift of y2 given y1.
  const Eigen::Matrix2d re = g.exponent().real();
  const double cond_std = 1.0 / std::sqrt(2.0 * re(1, 1));
  const double reach = std::abs(re(0, 1) / re(1, 1)) * (std::abs(slit_a.center) + slit_a.width);
  const double dy2 = std::min(cond_std, slit_a.width) / static_cast<double>(opt.samples_per_rms);
  const double half = (reach + 12.0 * cond_std) / 0.9;
  const std::size_t n2 = next_pow2(2.0 * half / dy2);
  if (n2 > kMaxConditionalN) {
    std::ostringstream msg;
    msg << "conditional window needs n = " << n2 << " samples (limit " << kMaxConditionalN << ")";
    throw ResolutionError(msg.str());
  }
  const Grid1D g2 = Grid1D::with_spacing(n2, dy2);

  const JointField2D j = g.sample(g1, g2);
  if (j.is_zero()) throw NullOutcomeError("biphoton vanishes on the sampling window");
  return condition_on_region(j, Arm::one, slit_a, opt.coherence).state.density();
}

double ghost_conditional_width(const SourceParams& sp, const TwoArmLayout& layout,
                               const Interval& slit_a, const PhysicalConstants& c,
                               const ConditionalOptions& opt) {
  const Density1D d = ghost_conditional_density(sp, layout, slit_a, c, opt);
  const Grid1D& g2 = d.grid;
  const std::size_t n2 = g2.size();
  double w = 0.0, m1 = 0.0;
  for (std::size_t k = 0; k < n2; ++k) {
    w += d.values[k];
    m1 += d.values[k] * g2.coordinate(k);
  }
  const double mean = m1 / w;
  double m2 = 0.0;
  for (std::size_t k = 0; k < n2; ++k) {
    const double y = g2.coordinate(k) - mean;
    m2 += d.values[k] * y * y;
  }
  return std::sqrt(m2 / w);
}

double collett_loudon_conditional(const SourceParams& sp, const TwoArmLayout& layout,
                                  const Interval& slit_a, const PhysicalConstants& c,
                                  const ConditionalOptions& opt) {
  if (layout.arm1.lens_count() != 0 || layout.arm2.lens_count() != 0)
    throw InvalidArgument("the no-lens conditional width requires lens-free arms");
  return ghost_conditional_width(sp, layout, slit_a, c, opt);
}

}  // namespace popsim
