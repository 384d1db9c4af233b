#pragma once
// Independent reference computations for the tests. Nothing here calls into the library.
#include <cmath>
#include <complex>
#include <functional>
#include <numbers>
#include <utility>
#include <vector>

namespace oracle {

constexpr double kPi = std::numbers::pi;

/// Gauss-Legendre nodes and weights on [-1, 1]
inline std::pair<std::vector<double>, std::vector<double>> gauss_legendre(int n) {
  std::vector<double> x(n), w(n);
  for (int i = 0; i < n; ++i) {
    double z = std::cos(kPi * (i + 0.75) / (n + 0.5));
    double dp = 0.0;
    for (int it = 0; it < 100; ++it) {
      double p0 = 1.0, p1 = z;
      for (int k = 2; k <= n; ++k) {
        const double p2 = ((2.0 * k - 1.0) * z * p1 - (k - 1.0) * p0) / k;
        p0 = p1;
        p1 = p2;
      }
      dp = n * (z * p1 - p0) / (z * z - 1.0);
      const double dz = p1 / dp;
      z -= dz;
      if (std::abs(dz) < 1e-16) break;
    }
    x[i] = z;
    w[i] = 2.0 / ((1.0 - z * z) * dp * dp);
  }
  return {x, w};
}

/// Composite Gauss-Legendre rule over [a, b] with `panels` panels of `order` points
class Quadrature {
 public:
  Quadrature(double a, double b, int panels, int order = 16) {
    const auto [x, w] = gauss_legendre(order);
    const double h = (b - a) / panels;
    for (int p = 0; p < panels; ++p) {
      const double mid = a + (p + 0.5) * h;
      for (int i = 0; i < order; ++i) {
        nodes.push_back(mid + 0.5 * h * x[i]);
        weights.push_back(0.5 * h * w[i]);
      }
    }
  }

  double integrate(const std::function<double(double)>& f) const {
    double s = 0.0;
    for (std::size_t i = 0; i < nodes.size(); ++i) s += weights[i] * f(nodes[i]);
    return s;
  }

  std::vector<double> nodes;
  std::vector<double> weights;
};

/// Sum_j psi_j exp(-i p y_j / hbar) dy / sqrt(2 pi hbar), term by term
inline std::complex<double> dft_sum(const std::vector<std::complex<double>>& psi, const std::vector<double>& y,
                                    double dy, double p, double hbar) {
  std::complex<double> acc{};
  for (std::size_t j = 0; j < psi.size(); ++j) acc += psi[j] * std::exp(std::complex<double>(0.0, -p * y[j] / hbar));
  return acc * dy / std::sqrt(2.0 * kPi * hbar);
}

/// |integral over the slit of exp(-i k y' y / a) dy'|^2 evaluated by quadrature, unnormalized
inline double rect_far_field(double d, double k, double a, double y) {
  const Quadrature q(-0.5 * d, 0.5 * d, 8, 24);
  const double re = q.integrate([&](double u) { return std::cos(k * u * y / a); });
  const double im = q.integrate([&](double u) { return -std::sin(k * u * y / a); });
  return re * re + im * im;
}

/// Unnormalized biphoton amplitude; mirror = -1 when arm 2 is reflected (back-to-back emission)
inline double biphoton(double y1, double y2, double sigma_plus, double sigma_minus, double mirror) {
  const double s = y1 + mirror * y2, r = y1 - mirror * y2;
  return std::exp(-s * s / (8.0 * sigma_plus * sigma_plus) - r * r / (8.0 * sigma_minus * sigma_minus));
}

/// 2-D probability integrals of |biphoton|^2 over a box
struct BiphotonQuadrature {
  double sigma_plus, sigma_minus, mirror;
  double half_span;   ///< integration box [-half_span, half_span]^2 (before restriction)
  int panels = 200;

  double density(double y1, double y2) const {
    const double a = biphoton(y1, y2, sigma_plus, sigma_minus, mirror);
    return a * a;
  }

  /// Integral over y1 in [a1, b1] and y2 in [a2, b2]
  double box(double a1, double b1, double a2, double b2) const {
    const Quadrature q1(a1, b1, panels), q2(a2, b2, panels);
    double s = 0.0;
    for (std::size_t i = 0; i < q1.nodes.size(); ++i)
      for (std::size_t k = 0; k < q2.nodes.size(); ++k) s += q1.weights[i] * q2.weights[k] * density(q1.nodes[i], q2.nodes[k]);
    return s;
  }

  double total() const { return box(-half_span, half_span, -half_span, half_span); }

  /// RMS width of the photon-2 marginal
  double marginal_rms_arm2() const {
    const Quadrature q(-half_span, half_span, panels);
    double m0 = 0.0, m2 = 0.0;
    for (std::size_t k = 0; k < q.nodes.size(); ++k) {
      double row = 0.0;
      for (std::size_t i = 0; i < q.nodes.size(); ++i) row += q.weights[i] * density(q.nodes[i], q.nodes[k]);
      m0 += q.weights[k] * row;
      m2 += q.weights[k] * row * q.nodes[k] * q.nodes[k];
    }
    return std::sqrt(m2 / m0);
  }

  /// RMS width of photon 2 given photon 1 at y1 exactly
  double conditional_rms_arm2(double y1) const {
    const Quadrature q(-half_span, half_span, panels);
    double m0 = 0.0, m1 = 0.0, m2 = 0.0;
    for (std::size_t k = 0; k < q.nodes.size(); ++k) {
      const double v = q.weights[k] * density(y1, q.nodes[k]);
      m0 += v;
      m1 += v * q.nodes[k];
      m2 += v * q.nodes[k] * q.nodes[k];
    }
    const double mean = m1 / m0;
    return std::sqrt(m2 / m0 - mean * mean);
  }
};

/// Intensity RMS width of a Gaussian beam after free flight z, starting from waist RMS sigma
inline double gaussian_beam_rms(double sigma, double k, double z) {
  const double rayleigh = 2.0 * k * sigma * sigma;
  return sigma * std::sqrt(1.0 + (z / rayleigh) * (z / rayleigh));
}

/// Schmidt number of the double-Gaussian biphoton from the purity of its reduced state.
/// |psi|^2 ~ exp(-2 alpha (y1^2 + y2^2) - 4 beta y1 y2) has purity sqrt(1 - (beta/alpha)^2).
inline double schmidt_number(double sigma_plus, double sigma_minus) {
  const double ip = 1.0 / (sigma_plus * sigma_plus), im = 1.0 / (sigma_minus * sigma_minus);
  const double alpha = (ip + im) / 8.0, beta = (im - ip) / 8.0;
  return 1.0 / std::sqrt(1.0 - (beta / alpha) * (beta / alpha));
}

/// Image distance that satisfies 1/s_o + 1/s_i = 1/f
inline double thin_lens_image(double object, double focal) { return 1.0 / (1.0 / focal - 1.0 / object); }

}  // namespace oracle
