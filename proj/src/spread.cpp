#include "popsim/spread.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "popsim/error.hpp"

namespace popsim {

std::string to_string(DetectionModel m) {
  switch (m) {
    case DetectionModel::ci_collapse: return "ci-collapse";
    case DetectionModel::unitary_coincidence: return "unitary-coincidence";
    case DetectionModel::mwi_isolated_probe: return "mwi-isolated-probe";
  }
  return "unknown";
}

DetectionModel parse_detection_model(std::string_view s) {
  if (s == "ci-collapse") return DetectionModel::ci_collapse;
  if (s == "unitary-coincidence") return DetectionModel::unitary_coincidence;
  if (s == "mwi-isolated-probe") return DetectionModel::mwi_isolated_probe;
  throw InvalidArgument("unknown detection model '" + std::string(s) +
                        "' (expected ci-collapse, unitary-coincidence or mwi-isolated-probe)");
}

void ScanGeometry::validate() const {
  if (!(step > 0.0)) throw InvalidArgument("scan step must be positive");
  if (!(half_range >= step)) throw InvalidArgument("scan half range must be at least one step");
  if (!(distance > 0.0)) throw InvalidArgument("D2 distance must be positive");
  if (half_range / step > 5e6) throw InvalidArgument("scan has too many positions");
}

std::vector<double> ScanGeometry::positions() const {
  validate();
  const auto s = static_cast<long>(std::floor(half_range / step + 1e-9));
  std::vector<double> y;
  y.reserve(static_cast<std::size_t>(2 * s + 1));
  for (long i = -s; i <= s; ++i) y.push_back(static_cast<double>(i) * step);
  return y;
}

namespace {

void check_inputs(std::span<const double> p, std::span<const double> y) {
  if (p.size() != y.size() || p.empty()) throw InvalidArgument("distribution and positions differ in length");
  for (double v : p)
    if (!(v >= 0.0) || !std::isfinite(v)) throw InvalidArgument("distribution must be finite and nonnegative");
  if (!(std::accumulate(p.begin(), p.end(), 0.0) > 0.0)) throw InvalidArgument("distribution carries no mass");
}

}  // namespace

double hwhm(std::span<const double> p, std::span<const double> y) {
  check_inputs(p, y);
  const auto nonzero = std::count_if(p.begin(), p.end(), [](double v) { return v > 0.0; });
  if (nonzero < 2) throw InvalidArgument("hwhm undefined for a single-bin distribution");
  const std::size_t peak = static_cast<std::size_t>(std::max_element(p.begin(), p.end()) - p.begin());
  const double half = 0.5 * p[peak];
  auto crossing = [&](int dir) {
    std::size_t i = peak;
    while (true) {
      if ((dir < 0 && i == 0) || (dir > 0 && i + 1 == p.size()))
        throw ResolutionError("distribution does not fall to half maximum inside the scan");
      const std::size_t next = dir < 0 ? i - 1 : i + 1;
      if (p[next] < half) {
        const double t = (p[i] - half) / (p[i] - p[next]);
        return y[i] + t * (y[next] - y[i]);
      }
      i = next;
    }
  };
  return 0.5 * (crossing(+1) - crossing(-1));
}

double rms_truncated(std::span<const double> p, std::span<const double> y, double mass_window) {
  check_inputs(p, y);
  if (!(mass_window > 0.0 && mass_window <= 1.0)) throw InvalidArgument("mass window must lie in (0, 1]");
  const double total = std::accumulate(p.begin(), p.end(), 0.0);
  const double lo = 0.5 * (1.0 - mass_window) * total;
  const double hi = total - lo;
  // Weight of each bin clipped to the central cumulative window [lo, hi].
  std::vector<double> w(p.size());
  double before = 0.0;
  for (std::size_t i = 0; i < p.size(); ++i) {
    const double a = std::max(before, lo), b = std::min(before + p[i], hi);
    w[i] = std::max(0.0, b - a);
    before += p[i];
  }
  double s = 0.0, m = 0.0;
  for (std::size_t i = 0; i < p.size(); ++i) {
    s += w[i];
    m += w[i] * y[i];
  }
  m /= s;
  double v = 0.0;
  for (std::size_t i = 0; i < p.size(); ++i) v += w[i] * (y[i] - m) * (y[i] - m);
  return std::sqrt(v / s);
}

double p95_halfwidth(std::span<const double> p, std::span<const double> y) {
  check_inputs(p, y);
  const double total = std::accumulate(p.begin(), p.end(), 0.0);
  double mean = 0.0;
  for (std::size_t i = 0; i < p.size(); ++i) mean += p[i] * y[i];
  mean /= total;
  std::vector<std::size_t> order(p.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return std::abs(y[a] - mean) < std::abs(y[b] - mean);
  });
  double acc = 0.0;
  for (std::size_t i : order) {
    acc += p[i];
    if (acc >= 0.95 * total * (1.0 - 1e-12)) return std::abs(y[i] - mean);
  }
  return std::abs(y[order.back()] - mean);
}

SpreadEstimates spread_estimators(std::span<const double> distribution, const ScanGeometry& scan,
                                  const PhysicalConstants& c) {
  const std::vector<double> y = scan.positions();
  if (y.size() != distribution.size()) throw InvalidArgument("distribution does not match the scan");
  const double total = std::accumulate(distribution.begin(), distribution.end(), 0.0);
  if (std::abs(total - 1.0) > 1e-9) throw InvalidArgument("distribution is not normalized");
  const double f = scan.momentum_per_metre(c);
  return {f * hwhm(distribution, y), f * rms_truncated(distribution, y), f * p95_halfwidth(distribution, y)};
}

std::vector<double> SpreadReport::p_y() const {
  std::vector<double> p(positions.size());
  std::transform(positions.begin(), positions.end(), p.begin(),
                 [&](double y) { return y * momentum_per_metre; });
  return p;
}

double l1_distance(std::span<const double> a, std::span<const double> b) {
  if (a.size() != b.size()) throw InvalidArgument("L1 distance of distributions with different lengths");
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += std::abs(a[i] - b[i]);
  return s;
}

}  // namespace popsim
