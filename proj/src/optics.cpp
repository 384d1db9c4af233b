#include "popsim/optics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <sstream>

#include "fft.hpp"
#include "popsim/error.hpp"

namespace popsim {

namespace {

constexpr double kPi = std::numbers::pi;

template <class... Ts>
struct Overloaded : Ts... {
  using Ts::operator()...;
};
template <class... Ts>
Overloaded(Ts...) -> Overloaded<Ts...>;

std::size_t next_pow2(double x) {
  std::size_t n = 16;
  while (static_cast<double>(n) < x) n *= 2;
  return n;
}

/// Mass fraction outside [-P, P] of a centered distribution is below `tail`
double tail_bound(std::span<const double> mass, double spacing, double tail) {
  const double total = std::accumulate(mass.begin(), mass.end(), 0.0);
  const std::size_t n = mass.size();
  const std::size_t half = n / 2;
  double outside = 0.0;
  // Walk inward from the edges, accumulating what lies beyond radius r.
  for (std::size_t r = half; r > 0; --r) {
    double ring = mass[half - r];
    if (half + r < n) ring += mass[half + r];
    if (outside + ring > tail * total) return static_cast<double>(r) * spacing;
    outside += ring;
  }
  return spacing;
}

void check_guard_band(std::span<const Complex> amps, const NumericalGuards& g, std::size_t n,
                      const char* where) {
  if (!g.enabled) return;
  const double frac = guard_band_fraction(amps, g.band_fraction);
  if (frac > g.band_tolerance) {
    std::ostringstream msg;
    msg << where << ": " << frac << " of the probability lies in the outer "
        << g.band_fraction * 100 << "% guard band (limit " << g.band_tolerance
        << "); enlarge the grid";
    throw GuardBandError(msg.str(), 2 * n);
  }
}

void fold(std::vector<Complex>& a, std::size_t n, std::size_t howmany, std::size_t stride,
          std::size_t dist) {
  // y_j -> -y_j maps index j to (n - j) mod n on the centered lattice.
  for (std::size_t h = 0; h < howmany; ++h) {
    Complex* s = a.data() + h * dist;
    for (std::size_t j = 1; j < n / 2; ++j) std::swap(s[j * stride], s[(n - j) * stride]);
  }
}

/// Applies the paraxial transfer function to `howmany` sequences along one axis
void transfer(std::vector<Complex>& a, const Grid1D& g, std::size_t howmany, std::size_t stride,
              std::size_t dist, double distance, const PhysicalConstants& c) {
  const std::size_t n = g.size();
  const double scale = g.spacing() / std::sqrt(2.0 * kPi * c.hbar);
  detail::centered_dft_many(a.data(), n, howmany, stride, dist, detail::FftSign::forward, scale);
  const Grid1D pg = momentum_grid(g, c);
  const double pscale = pg.spacing() / std::sqrt(2.0 * kPi * c.hbar);
  std::vector<Complex> h(n);
  for (std::size_t m = 0; m < n; ++m) {
    const double p = pg.coordinate(m);
    h[m] = std::polar(pscale, -p * p * distance / (2.0 * c.hbar * c.hbar * c.wavenumber()));
  }
  for (std::size_t s = 0; s < howmany; ++s) {
    Complex* seq = a.data() + s * dist;
    for (std::size_t m = 0; m < n; ++m) seq[m * stride] *= h[m];
  }
  detail::centered_dft_many(a.data(), n, howmany, stride, dist, detail::FftSign::backward, 1.0);
}

}  // namespace

void validate(const Element& e) {
  std::visit(Overloaded{
                 [](const FreeSpace& s) {
                   if (!(s.distance >= 0.0) || !std::isfinite(s.distance))
                     throw InvalidArgument("free-space distance must be >= 0");
                 },
                 [](const ThinLens& l) {
                   if (l.focal_length == 0.0 || std::isnan(l.focal_length))
                     throw InvalidArgument("focal length must be nonzero");
                 },
                 [](const Mirror& m) {
                   if (m.fold_sign != 1 && m.fold_sign != -1)
                     throw InvalidArgument("mirror fold sign must be +1 or -1");
                 },
                 [](const Aperture& a) {
                   if (!(a.opening.width > 0.0)) throw InvalidArgument("aperture width must be > 0");
                 },
                 [](const MirrorPatch& m) {
                   if (!(m.patch.width > 0.0)) throw InvalidArgument("mirror patch width must be > 0");
                 },
             },
             e);
}

std::string describe(const Element& e) {
  std::ostringstream os;
  std::visit(Overloaded{
                 [&](const FreeSpace& s) { os << "free_space(" << s.distance << ")"; },
                 [&](const ThinLens& l) { os << "thin_lens(" << l.focal_length << ")"; },
                 [&](const Mirror& m) { os << "mirror(" << m.fold_sign << ")"; },
                 [&](const Aperture& a) {
                   os << "aperture(" << a.opening.center << ", " << a.opening.width << ")";
                 },
                 [&](const MirrorPatch& m) {
                   os << "mirror_patch(" << m.patch.center << ", " << m.patch.width << ")";
                 },
             },
             e);
  return os.str();
}

double path_length(const Element& e) {
  if (const auto* s = std::get_if<FreeSpace>(&e)) return s->distance;
  return 0.0;
}

bool is_unitary(const Element& e) {
  return std::holds_alternative<FreeSpace>(e) || std::holds_alternative<ThinLens>(e) ||
         std::holds_alternative<Mirror>(e);
}

double OpticalPath::length() const {
  double s = 0.0;
  for (const Element& e : elements) s += path_length(e);
  return s;
}

std::size_t OpticalPath::lens_count() const {
  return static_cast<std::size_t>(std::count_if(elements.begin(), elements.end(), [](const Element& e) {
    return std::holds_alternative<ThinLens>(e);
  }));
}

double OpticalPath::length_before_lens() const {
  double s = 0.0;
  for (const Element& e : elements) {
    if (std::holds_alternative<ThinLens>(e)) return s;
    s += path_length(e);
  }
  throw InvalidArgument("optical path contains no lens");
}

double OpticalPath::length_after_lens() const { return length() - length_before_lens(); }

double OpticalPath::focal_length() const {
  for (const Element& e : elements)
    if (const auto* l = std::get_if<ThinLens>(&e)) return l->focal_length;
  throw InvalidArgument("optical path contains no lens");
}

double guard_band_fraction(std::span<const Complex> amps, double band_fraction) {
  const std::size_t n = amps.size();
  const auto band = static_cast<std::size_t>(std::ceil(band_fraction * static_cast<double>(n)));
  double total = 0.0, outer = 0.0;
  for (std::size_t j = 0; j < n; ++j) {
    const double v = std::norm(amps[j]);
    total += v;
    if (j < band || j >= n - band) outer += v;
  }
  return total > 0.0 ? outer / total : 0.0;
}

namespace {

void nyquist_check_spectrum(std::span<const Complex> spectrum, const NumericalGuards& g, std::size_t n) {
  if (!g.enabled) return;
  const double frac = guard_band_fraction(spectrum, g.band_fraction);
  if (frac > g.nyquist_tolerance) {
    std::ostringstream msg;
    msg << "Nyquist audit: " << frac << " of the momentum spectrum lies in the outer "
        << g.band_fraction * 100 << "% of the band (limit " << g.nyquist_tolerance
        << "); at least n = " << 2 * n << " at the same extent is required";
    throw AliasingError(msg.str(), 2 * n);
  }
}

}  // namespace

void nyquist_audit(const Field1D& f, const PhysicalConstants& c, const NumericalGuards& g) {
  const Field1D p = to_momentum_space(f, c);
  nyquist_check_spectrum(p.amplitudes(), g, f.grid().size());
}

Field1D propagate_free(const Field1D& f, double distance, const PhysicalConstants& c,
                       PropagationMethod method, const NumericalGuards& guards) {
  validate(FreeSpace{distance});
  if (method == PropagationMethod::angular_spectrum) {
    if (distance == 0.0) return f;
    const Field1D spec = to_momentum_space(f, c);
    nyquist_check_spectrum(spec.amplitudes(), guards, f.grid().size());
    std::vector<Complex> a(f.amplitudes().begin(), f.amplitudes().end());
    transfer(a, f.grid(), 1, 1, a.size(), distance, c);
    check_guard_band(a, guards, a.size(), "angular-spectrum propagation");
    return Field1D(f.grid(), std::move(a));
  }
  if (!(distance > 0.0)) throw InvalidArgument("Fraunhofer propagation needs a positive distance");
  const Field1D spec = to_momentum_space(f, c);
  nyquist_check_spectrum(spec.amplitudes(), guards, f.grid().size());
  const double k = c.wavenumber();
  const Grid1D out = Grid1D(f.grid().size(), spec.grid().extent() * distance / (c.hbar * k));
  const double amp = std::sqrt(c.hbar * k / distance);
  std::vector<Complex> a(out.size());
  for (std::size_t j = 0; j < out.size(); ++j) {
    const double y = out.coordinate(j);
    a[j] = amp * spec[j] * std::polar(1.0, k * y * y / (2.0 * distance) - kPi / 4.0);
  }
  return Field1D(out, std::move(a));
}

JointField2D propagate_free(const JointField2D& j, Arm arm, double distance,
                            const PhysicalConstants& c, const NumericalGuards& guards) {
  validate(FreeSpace{distance});
  if (distance == 0.0) return j;
  std::vector<Complex> a(j.amplitudes().begin(), j.amplitudes().end());
  const std::size_t n1 = j.n1(), n2 = j.n2();
  if (arm == Arm::one) {
    transfer(a, j.grid(Arm::one), n2, n2, 1, distance, c);
  } else {
    transfer(a, j.grid(Arm::two), n1, 1, n2, distance, c);
  }
  JointField2D out(j.grid(Arm::one), j.grid(Arm::two), std::move(a));
  const Density1D m = marginal(out, other(arm));
  if (guards.enabled) {
    std::vector<Complex> as_amp(m.values.size());
    for (std::size_t i = 0; i < m.values.size(); ++i) as_amp[i] = std::sqrt(m.values[i]);
    check_guard_band(as_amp, guards, m.values.size(), "joint angular-spectrum propagation");
  }
  return out;
}

std::size_t minimal_grid_n(const Field1D& f, double distance, const PhysicalConstants& c,
                           const NumericalGuards& guards) {
  const Field1D spec = to_momentum_space(f, c);
  const double tail = 1e-12;
  const double p_max = tail_bound(spec.intensity(), spec.grid().spacing(), tail);
  const double y_max = tail_bound(f.intensity(), f.grid().spacing(), tail);
  const double shift = p_max * distance / (c.hbar * c.wavenumber());
  const double half = (y_max + shift) / (1.0 - 2.0 * guards.band_fraction);
  return std::max(f.grid().size(), next_pow2(2.0 * half / f.grid().spacing()));
}

Field1D embed(const Field1D& f, std::size_t n) {
  const std::size_t m = f.grid().size();
  if (n < m) throw InvalidArgument("embed target is smaller than the field");
  if (n == m) return f;
  std::vector<Complex> a(n);
  const std::size_t offset = n / 2 - m / 2;
  std::copy(f.amplitudes().begin(), f.amplitudes().end(), a.begin() + static_cast<std::ptrdiff_t>(offset));
  return Field1D(Grid1D::with_spacing(n, f.grid().spacing()), std::move(a), f.domain());
}

std::vector<double> fraunhofer_density(const Field1D& f, double distance, const PhysicalConstants& c,
                                       std::span<const double> positions) {
  if (!(distance > 0.0)) throw InvalidArgument("Fraunhofer distance must be positive");
  const Grid1D& g = f.grid();
  const auto a = f.amplitudes();
  std::size_t first = 0, last = a.size();
  while (first < last && a[first] == Complex{}) ++first;
  while (last > first && a[last - 1] == Complex{}) --last;
  const double k = c.wavenumber();
  const double pref = g.spacing() * g.spacing() / (2.0 * kPi * c.hbar) * c.hbar * k / distance;
  std::vector<double> out(positions.size());
  for (std::size_t s = 0; s < positions.size(); ++s) {
    const double q = k * positions[s] / distance;
    // Direct sum: psi~(q) ~ sum_j psi_j exp(-i q y_j); phase advanced by rotation.
    const Complex step = std::polar(1.0, -q * g.spacing());
    Complex rot = std::polar(1.0, -q * g.coordinate(first));
    Complex acc{};
    for (std::size_t j = first; j < last; ++j) {
      acc += a[j] * rot;
      rot *= step;
      if ((j - first) % 256 == 255) rot = std::polar(1.0, -q * g.coordinate(j + 1));
    }
    out[s] = pref * std::norm(acc);
  }
  return out;
}

Field1D apply_element(const Field1D& f, const Element& e, const PhysicalConstants& c,
                      const NumericalGuards& guards) {
  validate(e);
  const Grid1D& g = f.grid();
  return std::visit(
      Overloaded{
          [&](const FreeSpace& s) { return propagate_free(f, s.distance, c, PropagationMethod::angular_spectrum, guards); },
          [&](const ThinLens& l) {
            std::vector<Complex> a(f.amplitudes().begin(), f.amplitudes().end());
            const double k = c.wavenumber();
            for (std::size_t j = 0; j < a.size(); ++j) {
              const double y = g.coordinate(j);
              a[j] *= std::polar(1.0, -k * y * y / (2.0 * l.focal_length));
            }
            return Field1D(g, std::move(a));
          },
          [&](const Mirror& m) {
            std::vector<Complex> a(f.amplitudes().begin(), f.amplitudes().end());
            if (m.fold_sign == -1) fold(a, a.size(), 1, 1, a.size());
            return Field1D(g, std::move(a));
          },
          [&](const Aperture& ap) {
            const IndexRange r = indices_in(g, ap.opening);
            if (r.empty()) throw InvalidArgument("aperture lies outside the grid");
            std::vector<Complex> a(g.size());
            std::copy(f.amplitudes().begin() + static_cast<std::ptrdiff_t>(r.first),
                      f.amplitudes().begin() + static_cast<std::ptrdiff_t>(r.last),
                      a.begin() + static_cast<std::ptrdiff_t>(r.first));
            if (std::all_of(a.begin(), a.end(), [](const Complex& v) { return v == Complex{}; }))
              throw NullOutcomeError("aperture blocks the whole field");
            return Field1D(g, std::move(a));
          },
          [&](const MirrorPatch& m) {
            auto split = split_mirror_patch(f, m);
            if (!split.reflected) throw NullOutcomeError("mirror patch reflects nothing");
            return *split.reflected;
          },
      },
      e);
}

JointField2D apply_element(const JointField2D& j, Arm arm, const Element& e,
                           const PhysicalConstants& c, const NumericalGuards& guards) {
  validate(e);
  const Grid1D& g = j.grid(arm);
  const std::size_t n1 = j.n1(), n2 = j.n2();
  auto per_sample = [&](auto&& fn) {
    std::vector<Complex> a(j.amplitudes().begin(), j.amplitudes().end());
    for (std::size_t i1 = 0; i1 < n1; ++i1)
      for (std::size_t i2 = 0; i2 < n2; ++i2) {
        const std::size_t idx = arm == Arm::one ? i1 : i2;
        a[i1 * n2 + i2] = fn(a[i1 * n2 + i2], idx);
      }
    return a;
  };
  return std::visit(
      Overloaded{
          [&](const FreeSpace& s) { return propagate_free(j, arm, s.distance, c, guards); },
          [&](const ThinLens& l) {
            const double k = c.wavenumber();
            std::vector<Complex> phase(g.size());
            for (std::size_t i = 0; i < g.size(); ++i) {
              const double y = g.coordinate(i);
              phase[i] = std::polar(1.0, -k * y * y / (2.0 * l.focal_length));
            }
            return JointField2D(j.grid(Arm::one), j.grid(Arm::two),
                                per_sample([&](Complex v, std::size_t i) { return v * phase[i]; }));
          },
          [&](const Mirror& m) {
            std::vector<Complex> a(j.amplitudes().begin(), j.amplitudes().end());
            if (m.fold_sign == -1) {
              if (arm == Arm::one) fold(a, n1, n2, n2, 1);
              else fold(a, n2, n1, 1, n2);
            }
            return JointField2D(j.grid(Arm::one), j.grid(Arm::two), std::move(a));
          },
          [&](const Aperture& ap) {
            const IndexRange r = indices_in(g, ap.opening);
            if (r.empty()) throw InvalidArgument("aperture lies outside the grid");
            auto a = per_sample([&](Complex v, std::size_t i) {
              return (i >= r.first && i < r.last) ? v : Complex{};
            });
            if (std::all_of(a.begin(), a.end(), [](const Complex& v) { return v == Complex{}; }))
              throw NullOutcomeError("aperture blocks the whole joint field");
            return JointField2D(j.grid(Arm::one), j.grid(Arm::two), std::move(a));
          },
          [&](const MirrorPatch& m) {
            auto split = split_mirror_patch(j, arm, m);
            if (!split.reflected) throw NullOutcomeError("mirror patch reflects nothing");
            return *split.reflected;
          },
      },
      e);
}

PatchSplit<Field1D> split_mirror_patch(const Field1D& f, const MirrorPatch& m) {
  validate(m);
  const Grid1D& g = f.grid();
  const IndexRange r = indices_in(g, m.patch);
  if (r.empty()) throw InvalidArgument("mirror patch lies outside the grid");
  std::vector<Complex> in(g.size()), out(g.size());
  for (std::size_t j = 0; j < g.size(); ++j) (j >= r.first && j < r.last ? in : out)[j] = f[j];
  PatchSplit<Field1D> s;
  auto weight = [&](const std::vector<Complex>& a) {
    double w = 0.0;
    for (const Complex& v : a) w += std::norm(v);
    return w * g.spacing();
  };
  s.reflected_weight = weight(in);
  s.transmitted_weight = weight(out);
  if (s.reflected_weight > 0.0) s.reflected = Field1D(g, std::move(in), f.domain());
  if (s.transmitted_weight > 0.0) s.transmitted = Field1D(g, std::move(out), f.domain());
  return s;
}

PatchSplit<JointField2D> split_mirror_patch(const JointField2D& j, Arm arm, const MirrorPatch& m) {
  validate(m);
  const Grid1D& g = j.grid(arm);
  const IndexRange r = indices_in(g, m.patch);
  if (r.empty()) throw InvalidArgument("mirror patch lies outside the grid");
  const std::size_t n1 = j.n1(), n2 = j.n2();
  std::vector<Complex> in(n1 * n2), out(n1 * n2);
  for (std::size_t i1 = 0; i1 < n1; ++i1)
    for (std::size_t i2 = 0; i2 < n2; ++i2) {
      const std::size_t idx = arm == Arm::one ? i1 : i2;
      (idx >= r.first && idx < r.last ? in : out)[i1 * n2 + i2] = j.at(i1, i2);
    }
  const double cell = j.grid(Arm::one).spacing() * j.grid(Arm::two).spacing();
  auto weight = [&](const std::vector<Complex>& a) {
    double w = 0.0;
    for (const Complex& v : a) w += std::norm(v);
    return w * cell;
  };
  PatchSplit<JointField2D> s;
  s.reflected_weight = weight(in);
  s.transmitted_weight = weight(out);
  if (s.reflected_weight > 0.0) s.reflected = JointField2D(j.grid(Arm::one), j.grid(Arm::two), std::move(in));
  if (s.transmitted_weight > 0.0)
    s.transmitted = JointField2D(j.grid(Arm::one), j.grid(Arm::two), std::move(out));
  return s;
}

ImagingReport imaging_audit(double object_distance, double image_distance, double focal_length,
                            double tolerance) {
  ImagingReport r;
  r.object_distance = object_distance;
  r.image_distance = image_distance;
  r.focal_length = focal_length;
  r.residual = 1.0 / object_distance + 1.0 / image_distance - 1.0 / focal_length;
  const double inv = 1.0 / focal_length - 1.0 / object_distance;
  r.required_image_distance = inv != 0.0 ? 1.0 / inv : std::numeric_limits<double>::infinity();
  r.magnification = -image_distance / object_distance;
  r.satisfied = std::abs(r.residual) <= tolerance / std::abs(focal_length);
  return r;
}

ImagingReport imaging_audit(const OpticalPath& lens_arm, const OpticalPath& other_arm, double tolerance) {
  if (lens_arm.lens_count() != 1) throw InvalidArgument("imaging audit needs exactly one lens in the lens arm");
  if (other_arm.lens_count() != 0) throw InvalidArgument("imaging audit expects no lens in the object arm");
  const double s_o = lens_arm.length_before_lens() + other_arm.length();
  return imaging_audit(s_o, lens_arm.length_after_lens(), lens_arm.focal_length(), tolerance);
}

}  // namespace popsim
