#include "popsim/fields.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <istream>
#include <ostream>
#include <sstream>
#include <string>

#include "fft.hpp"
#include "popsim/error.hpp"

namespace popsim {

namespace {

bool is_power_of_two(std::size_t n) { return n != 0 && (n & (n - 1)) == 0; }

double sum_norm2(std::span<const Complex> a) {
  double s = 0.0;
  for (const Complex& v : a) s += std::norm(v);
  return s;
}

void require_finite(std::span<const Complex> a, const char* what) {
  for (const Complex& v : a) {
    if (!std::isfinite(v.real()) || !std::isfinite(v.imag()))
      throw InvalidArgument(std::string(what) + ": non-finite amplitude");
  }
}

std::string format_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

}  // namespace

void PhysicalConstants::validate() const {
  if (!(hbar > 0.0) || !std::isfinite(hbar)) throw InvalidArgument("hbar must be positive");
  if (!(wavelength > 0.0) || !std::isfinite(wavelength))
    throw InvalidArgument("wavelength must be positive");
}

Grid1D::Grid1D(std::size_t n, double extent) : n_(n), extent_(extent), spacing_(extent / n) {
  if (n < 16 || !is_power_of_two(n))
    throw InvalidArgument("grid size must be a power of two >= 16, got " + std::to_string(n));
  if (!(extent > 0.0) || !std::isfinite(extent)) throw InvalidArgument("grid extent must be positive");
}

Grid1D Grid1D::with_spacing(std::size_t n, double spacing) {
  return Grid1D(n, spacing * static_cast<double>(n));
}

bool same_lattice(const Grid1D& a, const Grid1D& b, double rel_tol) {
  return a.size() == b.size() &&
         std::abs(a.spacing() - b.spacing()) <= rel_tol * std::max(a.spacing(), b.spacing());
}

IndexRange indices_in(const Grid1D& g, const Interval& region) {
  if (!(region.width > 0.0)) throw InvalidArgument("region width must be positive");
  const double tol = 1e-9 * g.spacing();
  const double half = static_cast<double>(g.size() / 2);
  double lo = std::ceil((region.lo() - tol) / g.spacing() + half);
  double hi = std::ceil((region.hi() - tol) / g.spacing() + half);
  lo = std::clamp(lo, 0.0, static_cast<double>(g.size()));
  hi = std::clamp(hi, 0.0, static_cast<double>(g.size()));
  IndexRange r{static_cast<std::size_t>(lo), static_cast<std::size_t>(hi)};
  // Guard the rounding of the closed-form bounds against the membership rule.
  while (r.first < r.last && !region.contains(g.coordinate(r.first), tol)) ++r.first;
  while (r.last < g.size() && region.contains(g.coordinate(r.last), tol)) ++r.last;
  while (r.last > r.first && !region.contains(g.coordinate(r.last - 1), tol)) --r.last;
  return r;
}

Field1D::Field1D(Grid1D grid, std::vector<Complex> amplitudes, Domain domain)
    : grid_(grid), amps_(std::move(amplitudes)), domain_(domain) {
  if (amps_.size() != grid_.size()) throw InvalidArgument("field length does not match grid");
  require_finite(amps_, "Field1D");
  if (sum_norm2(amps_) == 0.0) throw InvalidArgument("Field1D: zero-norm field");
}

double Field1D::norm2() const { return sum_norm2(amps_) * grid_.spacing(); }

Field1D Field1D::normalized() const { return scaled(1.0 / std::sqrt(norm2())); }

Field1D Field1D::scaled(double factor) const {
  std::vector<Complex> a(amps_);
  for (Complex& v : a) v *= factor;
  return Field1D(grid_, std::move(a), domain_);
}

std::vector<double> Field1D::intensity() const {
  std::vector<double> out(amps_.size());
  std::transform(amps_.begin(), amps_.end(), out.begin(), [](const Complex& v) { return std::norm(v); });
  return out;
}

double Density1D::integral() const {
  double s = 0.0;
  for (double v : values) s += v;
  return s * grid.spacing();
}

JointField2D::JointField2D(Grid1D grid1, Grid1D grid2, std::vector<Complex> amplitudes)
    : JointField2D(grid1, grid2, std::move(amplitudes), Unchecked{}) {
  if (amps_.size() != g1_.size() * g2_.size()) throw InvalidArgument("joint field shape mismatch");
  require_finite(amps_, "JointField2D");
  if (sum_norm2(amps_) == 0.0) throw InvalidArgument("JointField2D: zero-norm field");
}

JointField2D::JointField2D(Grid1D grid1, Grid1D grid2, std::vector<Complex> amplitudes, Unchecked)
    : g1_(grid1), g2_(grid2), amps_(std::move(amplitudes)) {}

JointField2D JointField2D::zeros(Grid1D grid1, Grid1D grid2) {
  return JointField2D(grid1, grid2, std::vector<Complex>(grid1.size() * grid2.size()), Unchecked{});
}

JointField2D JointField2D::allow_zero(Grid1D grid1, Grid1D grid2, std::vector<Complex> amplitudes) {
  if (amplitudes.size() != grid1.size() * grid2.size()) throw InvalidArgument("joint field shape mismatch");
  require_finite(amplitudes, "JointField2D");
  return JointField2D(grid1, grid2, std::move(amplitudes), Unchecked{});
}

double JointField2D::norm2() const { return sum_norm2(amps_) * g1_.spacing() * g2_.spacing(); }

bool JointField2D::is_zero() const {
  return std::all_of(amps_.begin(), amps_.end(), [](const Complex& v) { return v == Complex{}; });
}

JointField2D JointField2D::normalized() const {
  if (is_zero()) throw NullOutcomeError("cannot normalize a zero joint field");
  const double s = 1.0 / std::sqrt(norm2());
  std::vector<Complex> a(amps_);
  for (Complex& v : a) v *= s;
  return JointField2D(g1_, g2_, std::move(a));
}

JointField2D product(const Field1D& f1, const Field1D& f2) {
  const std::size_t n1 = f1.grid().size(), n2 = f2.grid().size();
  std::vector<Complex> a(n1 * n2);
  for (std::size_t i = 0; i < n1; ++i)
    for (std::size_t j = 0; j < n2; ++j) a[i * n2 + j] = f1[i] * f2[j];
  return JointField2D(f1.grid(), f2.grid(), std::move(a));
}

Field1D row_field(const JointField2D& j, std::size_t i1) {
  auto r = j.row(i1);
  return Field1D(j.grid(Arm::two), std::vector<Complex>(r.begin(), r.end()));
}

Grid1D momentum_grid(const Grid1D& position, const PhysicalConstants& c) {
  return Grid1D(position.size(), 2.0 * std::numbers::pi * c.hbar / position.spacing());
}

Field1D to_momentum_space(const Field1D& f, const PhysicalConstants& c) {
  if (f.domain() != Domain::position) throw InvalidArgument("field is already in momentum space");
  std::vector<Complex> a(f.amplitudes().begin(), f.amplitudes().end());
  const double scale = f.grid().spacing() / std::sqrt(2.0 * std::numbers::pi * c.hbar);
  detail::centered_dft_many(a.data(), a.size(), 1, 1, a.size(), detail::FftSign::forward, scale);
  return Field1D(momentum_grid(f.grid(), c), std::move(a), Domain::momentum);
}

Field1D from_momentum_space(const Field1D& f, const PhysicalConstants& c) {
  if (f.domain() != Domain::momentum) throw InvalidArgument("field is not in momentum space");
  std::vector<Complex> a(f.amplitudes().begin(), f.amplitudes().end());
  const double scale = f.grid().spacing() / std::sqrt(2.0 * std::numbers::pi * c.hbar);
  detail::centered_dft_many(a.data(), a.size(), 1, 1, a.size(), detail::FftSign::backward, scale);
  // The dual of a momentum grid is the position grid it came from.
  return Field1D(Grid1D(f.grid().size(), 2.0 * std::numbers::pi * c.hbar / f.grid().spacing()),
                 std::move(a), Domain::position);
}

Density1D marginal(const JointField2D& j, Arm integrated) {
  const std::size_t n1 = j.n1(), n2 = j.n2();
  if (integrated == Arm::one) {
    std::vector<double> v(n2, 0.0);
    for (std::size_t i = 0; i < n1; ++i) {
      auto r = j.row(i);
      for (std::size_t k = 0; k < n2; ++k) v[k] += std::norm(r[k]);
    }
    for (double& x : v) x *= j.grid(Arm::one).spacing();
    return {j.grid(Arm::two), std::move(v)};
  }
  std::vector<double> v(n1, 0.0);
  for (std::size_t i = 0; i < n1; ++i) v[i] = sum_norm2(j.row(i)) * j.grid(Arm::two).spacing();
  return {j.grid(Arm::one), std::move(v)};
}

Density1D Mixture::density() const {
  if (components.empty()) throw InvalidArgument("empty mixture");
  Density1D d{components.front().grid(), std::vector<double>(components.front().grid().size(), 0.0)};
  for (std::size_t c = 0; c < components.size(); ++c) {
    const auto a = components[c].amplitudes();
    for (std::size_t k = 0; k < a.size(); ++k) d.values[k] += weights[c] * std::norm(a[k]);
  }
  return d;
}

Conditional condition_on_region(const JointField2D& j, Arm arm, const Interval& region,
                                Coherence coherence) {
  const Grid1D& g = j.grid(arm);
  const Grid1D& go = j.grid(other(arm));
  const IndexRange r = indices_in(g, region);
  if (r.empty()) throw NullOutcomeError("region holds no grid samples of the conditioned arm");

  // Slices of the other arm at each sample of the region.
  auto slice = [&](std::size_t i) {
    std::vector<Complex> s(go.size());
    if (arm == Arm::one) {
      auto row = j.row(i);
      std::copy(row.begin(), row.end(), s.begin());
    } else {
      for (std::size_t k = 0; k < go.size(); ++k) s[k] = j.at(k, i);
    }
    return s;
  };

  double prob = 0.0;
  std::vector<std::vector<Complex>> slices;
  std::vector<double> weights;
  for (std::size_t i = r.first; i < r.last; ++i) {
    auto s = slice(i);
    const double w = sum_norm2(s) * go.spacing() * g.spacing();
    prob += w;
    slices.push_back(std::move(s));
    weights.push_back(w);
  }
  if (!(prob > 0.0)) throw NullOutcomeError("region carries zero Born weight");

  Mixture m;
  if (coherence == Coherence::coherent) {
    std::vector<Complex> acc(go.size());
    for (const auto& s : slices)
      for (std::size_t k = 0; k < acc.size(); ++k) acc[k] += s[k] * g.spacing();
    if (sum_norm2(acc) == 0.0)
      throw NullOutcomeError("coherent conditional vanishes by destructive interference");
    m.components.push_back(Field1D(go, std::move(acc)).normalized());
    m.weights.push_back(1.0);
  } else {
    for (std::size_t s = 0; s < slices.size(); ++s) {
      if (weights[s] == 0.0) continue;
      m.components.push_back(Field1D(go, std::move(slices[s])).normalized());
      m.weights.push_back(weights[s] / prob);
    }
  }
  return {std::move(m), prob / j.norm2()};
}

void write_field(std::ostream& os, const Field1D& f) {
  os << "# popsim-field 1\n";
  os << "# domain " << (f.domain() == Domain::position ? "position" : "momentum") << "\n";
  os << "# n " << f.grid().size() << "\n";
  os << "# extent " << format_double(f.grid().extent()) << "\n";
  os << "# columns y value_re value_im\n";
  for (std::size_t j = 0; j < f.grid().size(); ++j) {
    os << format_double(f.grid().coordinate(j)) << ' ' << format_double(f[j].real()) << ' '
       << format_double(f[j].imag()) << '\n';
  }
}

Field1D read_field(std::istream& is) {
  std::string line;
  std::size_t n = 0;
  double extent = 0.0;
  Domain domain = Domain::position;
  std::vector<Complex> amps;
  while (std::getline(is, line)) {
    if (line.empty()) continue;
    std::istringstream ls(line);
    if (line[0] == '#') {
      std::string hash, key;
      ls >> hash >> key;
      if (key == "n") ls >> n;
      else if (key == "extent") {
        std::string v;
        ls >> v;
        extent = std::strtod(v.c_str(), nullptr);
      } else if (key == "domain") {
        std::string v;
        ls >> v;
        domain = v == "momentum" ? Domain::momentum : Domain::position;
      }
      continue;
    }
    std::string y, re, im;
    if (!(ls >> y >> re >> im)) throw InvalidArgument("malformed field row: " + line);
    amps.emplace_back(std::strtod(re.c_str(), nullptr), std::strtod(im.c_str(), nullptr));
  }
  if (n == 0) throw InvalidArgument("field header lacks grid size");
  return Field1D(Grid1D(n, extent), std::move(amps), domain);
}

}  // namespace popsim
