#include "popsim/measurement.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>

#include "popsim/error.hpp"

namespace popsim {

namespace {

std::size_t next_pow2(double x) {
  std::size_t n = 16;
  while (static_cast<double>(n) < x) n *= 2;
  return n;
}

/// Splits the joint field into the parts with `arm` inside and outside the region
std::pair<JointField2D, JointField2D> split_by_region(const JointField2D& j, Arm arm, const Interval& region) {
  const IndexRange r = indices_in(j.grid(arm), region);
  if (r.empty()) throw InvalidArgument("region lies outside the grid of the clicked arm");
  const std::size_t n1 = j.n1(), n2 = j.n2();
  std::vector<Complex> in(n1 * n2), out(n1 * n2);
  for (std::size_t i1 = 0; i1 < n1; ++i1)
    for (std::size_t i2 = 0; i2 < n2; ++i2) {
      const std::size_t idx = arm == Arm::one ? i1 : i2;
      (idx >= r.first && idx < r.last ? in : out)[i1 * n2 + i2] = j.at(i1, i2);
    }
  return {JointField2D::allow_zero(j.grid(Arm::one), j.grid(Arm::two), std::move(in)),
          JointField2D::allow_zero(j.grid(Arm::one), j.grid(Arm::two), std::move(out))};
}

double row_weight(std::span<const Complex> row, double cell) {
  double s = 0.0;
  for (const Complex& v : row) s += std::norm(v);
  return s * cell;
}

SpreadReport make_report(DetectionModel model, const D2Plane& plane, const ScanIntensity& si,
                         const JointField2D& state, std::size_t components) {
  SpreadReport r;
  r.model = model;
  r.positions = plane.scan.positions();
  const double total = std::accumulate(si.values.begin(), si.values.end(), 0.0);
  if (!(total > 0.0)) throw NullOutcomeError("no probability reaches the D2 scan");
  r.probability.resize(si.values.size());
  for (std::size_t i = 0; i < si.values.size(); ++i) r.probability[i] = si.values[i] / total;
  r.momentum_per_metre = plane.scan.momentum_per_metre(plane.constants);
  r.spread = spread_estimators(r.probability, plane.scan, plane.constants);
  r.slit_width = plane.slit_width;
  r.reference = plane.constants.hbar / plane.slit_width;
  r.method = plane.method;
  r.coherence = plane.coherence;
  r.fresnel_number = si.launch_halfwidth * si.launch_halfwidth / (plane.constants.wavelength * plane.scan.distance);
  r.window_n = state.n2();
  r.click_n = state.n1();
  r.window_spacing = state.grid(Arm::two).spacing();
  r.launch_n = si.launch_n;
  r.components = components;
  return r;
}

}  // namespace

BranchTag::BranchTag(std::string label) : label_(std::move(label)) {
  if (label_.empty()) throw InvalidArgument("branch tag label must not be empty");
}

BranchState::BranchState(std::vector<Branch> branches, bool probe_entangled)
    : branches_(std::move(branches)), probe_entangled_(probe_entangled) {
  if (branches_.empty()) throw InvalidArgument("branch state needs at least one branch");
  for (std::size_t a = 0; a < branches_.size(); ++a) {
    for (std::size_t b = a + 1; b < branches_.size(); ++b)
      if (branches_[a].tag == branches_[b].tag)
        throw InvalidArgument("duplicate branch tag '" + branches_[a].tag.label() + "'");
    if (!(branches_[a].component.grid(Arm::one) == branches_[0].component.grid(Arm::one)) ||
        !(branches_[a].component.grid(Arm::two) == branches_[0].component.grid(Arm::two)))
      throw InvalidArgument("branch components live on different grids");
  }
  const double p = total_probability();
  if (std::abs(p - 1.0) > 1e-9) {
    std::ostringstream msg;
    msg << "branch probabilities sum to " << p << ", not 1";
    throw InvalidArgument(msg.str());
  }
}

double BranchState::total_probability() const {
  double s = 0.0;
  for (const Branch& b : branches_) s += b.component.norm2();
  return s;
}

double BranchState::weight(const BranchTag& tag) const {
  for (const Branch& b : branches_)
    if (b.tag == tag) return b.component.norm2();
  return 0.0;
}

BranchState BranchState::merged(const BranchTag& a, const BranchTag& b, const BranchTag& into) const {
  const Branch* ba = nullptr;
  const Branch* bb = nullptr;
  std::vector<Branch> out;
  for (const Branch& br : branches_) {
    if (br.tag == a) ba = &br;
    else if (br.tag == b) bb = &br;
    else out.push_back(br);
  }
  if (!ba || !bb) throw InvalidArgument("merge needs two existing branch tags");
  std::vector<Complex> sum(ba->component.amplitudes().begin(), ba->component.amplitudes().end());
  auto other_amps = bb->component.amplitudes();
  for (std::size_t i = 0; i < sum.size(); ++i) sum[i] += other_amps[i];
  JointField2D merged_component(ba->component.grid(Arm::one), ba->component.grid(Arm::two), std::move(sum));
  // Erasing the record rescales the survivors so the merged state stays normalized.
  double rest = 0.0;
  for (const Branch& br : out) rest += br.component.norm2();
  const double m = merged_component.norm2();
  const double scale = std::sqrt((1.0 - rest) / m);
  std::vector<Complex> scaled(merged_component.amplitudes().begin(), merged_component.amplitudes().end());
  for (Complex& v : scaled) v *= scale;
  out.push_back({into, JointField2D(merged_component.grid(Arm::one), merged_component.grid(Arm::two), std::move(scaled))});
  return BranchState(std::move(out), probe_entangled_);
}

double born_probability(const JointField2D& j, Arm arm, const Interval& region) {
  const IndexRange r = indices_in(j.grid(arm), region);
  if (r.empty()) return 0.0;
  const Density1D m = marginal(j, other(arm));
  double s = 0.0;
  for (std::size_t i = r.first; i < r.last; ++i) s += m.values[i];
  return s * m.grid.spacing() / j.norm2();
}

Projection click_project(const JointField2D& j, const Interval& slit, Arm arm) {
  auto [in, out] = split_by_region(j, arm, slit);
  const double p = in.norm2() / j.norm2();
  if (in.is_zero() || !(p > 0.0)) throw NullOutcomeError("detector region has zero Born weight");
  return {in.normalized(), p};
}

BranchState entangle_environment(const JointField2D& j, const Interval& slit, Arm arm) {
  auto [in, out] = split_by_region(j, arm, slit);
  if (in.is_zero()) throw NullOutcomeError("detector region has zero Born weight");
  const double total = j.norm2();
  auto rescale = [&](const JointField2D& f) {
    std::vector<Complex> a(f.amplitudes().begin(), f.amplitudes().end());
    const double s = 1.0 / std::sqrt(total);
    for (Complex& v : a) v *= s;
    return JointField2D(f.grid(Arm::one), f.grid(Arm::two), std::move(a));
  };
  std::vector<Branch> b;
  b.push_back({BranchTag("M_a"), rescale(in)});
  if (!out.is_zero()) b.push_back({BranchTag("M_b"), rescale(out)});
  return BranchState(std::move(b));
}

ScanIntensity propagate_to_scan(const std::vector<Field1D>& components, const std::vector<double>& weights,
                                const D2Plane& plane) {
  if (components.empty() || components.size() != weights.size())
    throw InvalidArgument("propagate_to_scan needs matching components and weights");
  const std::vector<double> y = plane.scan.positions();
  const PhysicalConstants& c = plane.constants;
  const double a = plane.scan.distance;
  ScanIntensity out;
  out.values.assign(y.size(), 0.0);

  // Launch half-width: p95 radius of the launch density of the mixture.
  {
    const Grid1D& g = components.front().grid();
    std::vector<double> dens(g.size(), 0.0), coord(g.size());
    for (std::size_t k = 0; k < components.size(); ++k) {
      if (!(components[k].grid() == g)) throw InvalidArgument("mixture components on different grids");
      for (std::size_t i = 0; i < g.size(); ++i) dens[i] += weights[k] * std::norm(components[k][i]);
    }
    for (std::size_t i = 0; i < g.size(); ++i) coord[i] = g.coordinate(i);
    out.launch_halfwidth = p95_halfwidth(dens, coord);
  }

  if (plane.method == PropagationMethod::fraunhofer) {
    for (std::size_t k = 0; k < components.size(); ++k) {
      if (weights[k] == 0.0) continue;
      nyquist_audit(components[k], c, plane.guards);
      const std::vector<double> d = fraunhofer_density(components[k], a, c, y);
      for (std::size_t s = 0; s < y.size(); ++s) out.values[s] += weights[k] * d[s];
    }
    out.launch_n = components.front().grid().size();
    return out;
  }

  const double dy = components.front().grid().spacing();
  const double ratio = plane.scan.step / dy;
  if (std::abs(ratio - std::round(ratio)) > 1e-6 * ratio || std::round(ratio) < 1.0) {
    std::ostringstream msg;
    msg << "scan step " << plane.scan.step << " m is not an integer multiple of the grid spacing " << dy << " m";
    throw InvalidArgument(msg.str());
  }
  const auto m = static_cast<std::size_t>(std::round(ratio));
  const std::size_t scan_n =
      next_pow2(2.0 * (plane.scan.half_range / dy + 2.0) / (1.0 - 2.0 * plane.guards.band_fraction));
  for (std::size_t k = 0; k < components.size(); ++k) {
    if (weights[k] == 0.0) continue;
    const std::size_t n = std::max(scan_n, minimal_grid_n(components[k], a, c, plane.guards));
    const Field1D launched = embed(components[k], n);
    const Field1D arrived = propagate_free(launched, a, c, PropagationMethod::angular_spectrum, plane.guards);
    const long centre = static_cast<long>(n / 2);
    const long half = static_cast<long>(y.size() / 2);
    for (std::size_t s = 0; s < y.size(); ++s) {
      const long idx = centre + (static_cast<long>(s) - half) * static_cast<long>(m);
      out.values[s] += weights[k] * std::norm(arrived[static_cast<std::size_t>(idx)]);
    }
    out.launch_n = std::max(out.launch_n, n);
  }
  return out;
}

SpreadReport detect_d2(const JointField2D& state, DetectionModel model, const D2Plane& plane,
                       const Interval& coincidence_slit) {
  switch (model) {
    case DetectionModel::ci_collapse: {
      // The projected state carries photon 1 only inside the clicked slit.
      const IndexRange r = indices_in(state.grid(Arm::one), coincidence_slit);
      for (std::size_t i = 0; i < state.n1(); ++i) {
        if (i >= r.first && i < r.last) continue;
        auto row = state.row(i);
        if (std::any_of(row.begin(), row.end(), [](const Complex& v) { return v != Complex{}; }))
          throw ModelMismatchError("ci-collapse expects a click-projected state (use click_project first)");
      }
      const Conditional cond = condition_on_region(state, Arm::one, coincidence_slit, plane.coherence);
      std::vector<Field1D> comps;
      std::vector<double> weights;
      for (std::size_t k = 0; k < cond.state.components.size(); ++k) {
        const Field1D& f = cond.state.components[k];
        const IndexRange b = indices_in(f.grid(), plane.virtual_slit);
        std::vector<Complex> inside(f.grid().size());
        for (std::size_t i = b.first; i < b.last; ++i) inside[i] = f[i];
        double w = 0.0;
        for (const Complex& v : inside) w += std::norm(v);
        if (w == 0.0) continue;
        Field1D localized(f.grid(), std::move(inside));
        weights.push_back(cond.state.weights[k] * localized.norm2());
        comps.push_back(localized.normalized());
      }
      if (comps.empty()) throw NullOutcomeError("photon 2 has no amplitude inside the virtual slit");
      return make_report(model, plane, propagate_to_scan(comps, weights, plane), state, comps.size());
    }
    case DetectionModel::unitary_coincidence: {
      const Conditional cond = condition_on_region(state, Arm::one, coincidence_slit, Coherence::incoherent);
      return make_report(model, plane, propagate_to_scan(cond.state.components, cond.state.weights, plane),
                         state, cond.state.components.size());
    }
    case DetectionModel::mwi_isolated_probe:
      throw ModelMismatchError("mwi-isolated-probe acts on a branch state (use entangle_environment first)");
  }
  throw InvalidArgument("unknown detection model");
}

SpreadReport detect_d2(const BranchState& state, DetectionModel model, const D2Plane& plane,
                       const Interval& coincidence_slit) {
  if (model != DetectionModel::mwi_isolated_probe)
    throw ModelMismatchError(to_string(model) + " acts on a joint field, not on a branch state");
  if (state.probe_entangled())
    throw ModelMismatchError("the isolated-probe model requires an un-entangled probe register");
  // Each branch contributes its own coincidence rows; branches are never added coherently.
  std::vector<Field1D> comps;
  std::vector<double> weights;
  for (const Branch& b : state.branches()) {
    const JointField2D& j = b.component;
    const IndexRange r = indices_in(j.grid(Arm::one), coincidence_slit);
    const double cell = j.grid(Arm::one).spacing() * j.grid(Arm::two).spacing();
    for (std::size_t i = r.first; i < r.last; ++i) {
      const double w = row_weight(j.row(i), cell);
      if (w == 0.0) continue;
      comps.push_back(row_field(j, i).normalized());
      weights.push_back(w);
    }
  }
  if (comps.empty()) throw NullOutcomeError("no branch carries a coincidence");
  return make_report(model, plane, propagate_to_scan(comps, weights, plane), state.branches().front().component,
                     comps.size());
}

Density1D photon2_marginal(const JointField2D& j, double distance, const PhysicalConstants& c,
                           const NumericalGuards& guards) {
  return marginal(propagate_free(j, Arm::two, distance, c, guards), Arm::one);
}

BranchIntensities photon2_branch_intensities(const BranchState& s, double distance, const PhysicalConstants& c,
                                             const NumericalGuards& guards) {
  const Grid1D g = s.branches().front().component.grid(Arm::two);
  BranchIntensities out{g, std::vector<double>(g.size(), 0.0), {}};
  for (const Branch& b : s.branches()) {
    Density1D d = photon2_marginal(b.component, distance, c, guards);
    for (std::size_t i = 0; i < g.size(); ++i) out.total[i] += d.values[i];
    out.per_branch.push_back(std::move(d.values));
  }
  return out;
}

}  // namespace popsim
