#include <doctest.h>

#include <random>

#include "oracles.hpp"
#include "popsim/error.hpp"
#include "popsim/source.hpp"

using namespace popsim;

TEST_CASE("equal widths give a product state") {
  const Grid1D g = Grid1D::with_spacing(128, 2e-5);
  const JointField2D j = make_biphoton({3e-4, 3e-4, EmissionGeometry::back_to_back}, g, g);
  CHECK(schmidt_number(j) == doctest::Approx(1.0).epsilon(1e-6));
}

TEST_CASE("Schmidt number of the default source matches the closed form") {
  const SourceParams sp;
  const Grid1D g = Grid1D::with_spacing(256, 2e-5);
  const JointField2D j = make_biphoton(sp, g, g);
  CHECK(schmidt_number(j) == doctest::Approx(oracle::schmidt_number(sp.sigma_plus, sp.sigma_minus)).epsilon(0.01));
}

TEST_CASE("conditional width at the source matches 2-D quadrature") {
  const double sp = 1e-3, sm = 1e-5;
  const Grid1D g1 = Grid1D::with_spacing(64, 1.25e-6), g2 = Grid1D::with_spacing(256, 1.25e-6);
  const JointField2D j = make_biphoton({sp, sm, EmissionGeometry::back_to_back}, g1, g2);
  const Field1D row = row_field(j, g1.size() / 2);
  double m0 = 0, m1 = 0, m2 = 0;
  for (std::size_t k = 0; k < g2.size(); ++k) {
    const double w = std::norm(row[k]), y = g2.coordinate(k);
    m0 += w;
    m1 += w * y;
    m2 += w * y * y;
  }
  const double width = std::sqrt(m2 / m0 - m1 * m1 / (m0 * m0));
  const oracle::BiphotonQuadrature q{sp, sm, -1.0, 1.6e-4};
  CHECK(width == doctest::Approx(q.conditional_rms_arm2(0.0)).epsilon(0.005));
}

TEST_CASE("emission geometry sets the sign of the position correlation") {
  const Grid1D g = Grid1D::with_spacing(128, 2e-5);
  for (auto [geom, mirror] : {std::pair{EmissionGeometry::back_to_back, -1.0}, std::pair{EmissionGeometry::collinear_folded, 1.0}}) {
    const JointField2D j = make_biphoton({5e-4, 2e-4, geom}, g, g);
    const double ref = oracle::biphoton(0.0, 0.0, 5e-4, 2e-4, mirror);
    for (std::size_t i : {40u, 64u, 90u})
      for (std::size_t k : {30u, 64u, 100u}) {
        const double expected = oracle::biphoton(g.coordinate(i), g.coordinate(k), 5e-4, 2e-4, mirror) / ref;
        CHECK(std::abs(j.at(i, k)) / std::abs(j.at(64, 64)) == doctest::Approx(expected).epsilon(1e-10));
      }
  }
}

TEST_CASE("under-resolved source names the violated scale") {
  const Grid1D g = Grid1D::with_spacing(128, 5e-5);
  try {
    make_biphoton({5e-4, 2e-4, EmissionGeometry::back_to_back}, g, g);
    FAIL("expected a resolution error");
  } catch (const ResolutionError& e) {
    CHECK(std::string(e.what()).find("sigma_minus") != std::string::npos);
  }
}

TEST_CASE("analytic propagation keeps the normalization") {
  const PhysicalConstants c;
  const GaussianBiphoton g = GaussianBiphoton(SourceParams{})
                                 .through(Arm::one, OpticalPath{{FreeSpace{0.5}, ThinLens{0.5}, FreeSpace{1.0}}}, c)
                                 .through(Arm::two, FreeSpace{0.5}, c);
  const Grid1D g1 = Grid1D::with_spacing(256, 4e-5), g2 = Grid1D::with_spacing(256, 4e-5);
  CHECK(g.sample(g1, g2).norm2() == doctest::Approx(1.0).epsilon(1e-6));
  CHECK_THROWS_AS(GaussianBiphoton(SourceParams{}).through(Arm::one, Aperture{{0.0, 1e-4}}, c), InvalidArgument);
}

TEST_CASE("slit-basis decomposition") {
  const Grid1D g = Grid1D::with_spacing(256, 2e-5);
  SUBCASE("slit A over the whole axis leaves nothing outside") {
    const JointField2D j = make_biphoton(SourceParams{}, g, g);
    const SlitDecomposition d = decompose_slit_basis(j, {0.0, 1.0}, {0.0, 1.6e-4});
    CHECK(d.psi_b.is_zero());
  }
  SUBCASE("parts are orthogonal and complete") {
    std::mt19937_64 rng(5);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    for (int t = 0; t < 20; ++t) {
      const SourceParams sp{2e-4 + 6e-4 * u(rng), 2e-4 + 2e-4 * u(rng), EmissionGeometry::back_to_back};
      const JointField2D j = make_biphoton(sp, g, g);
      const SlitDecomposition d = decompose_slit_basis(j, {(u(rng) - 0.5) * 1e-3, 1e-4 + 3e-4 * u(rng)}, {0.0, 1.6e-4});
      CHECK(std::abs(d.psi_a.norm2() + d.psi_b.norm2() - j.norm2()) < 1e-10);
    }
  }
  SUBCASE("slit weight of the default source matches 2-D quadrature") {
    const SourceParams sp;
    const double width = 1.6e-4;
    const JointField2D j = make_biphoton(sp, g, g);
    const SlitDecomposition d = decompose_slit_basis(j, {0.0, width}, {0.0, width});
    const oracle::BiphotonQuadrature q{sp.sigma_plus, sp.sigma_minus, -1.0, 2.56e-3, 100};
    const double expected = q.box(-0.5 * width, 0.5 * width, -2.56e-3, 2.56e-3) / q.total();
    CHECK(d.psi_a.norm2() == doctest::Approx(expected).epsilon(0.005));
  }
}

TEST_CASE("conditional width behind slit A") {
  const PhysicalConstants c;
  const Interval slit{0.0, 1.6e-4};
  const TwoArmLayout open{{{FreeSpace{1.0}}}, {{FreeSpace{1.0}}}};

  SUBCASE("a nearly point-like source spreads the partner far beyond the slit") {
    const double w = collett_loudon_conditional({1e-5, 1e-6, EmissionGeometry::back_to_back}, open, slit, c);
    CHECK(w > 10.0 * slit.width);
  }
  SUBCASE("lenses are refused by the lens-free computation") {
    const TwoArmLayout lens{{{FreeSpace{0.5}, ThinLens{0.5}, FreeSpace{1.0}}}, {{FreeSpace{0.5}}}};
    CHECK_THROWS_AS(collett_loudon_conditional(SourceParams{}, lens, slit, c), InvalidArgument);
  }
  SUBCASE("a lens imaging slit A onto the partner plane localizes it") {
    const TwoArmLayout lens{{{FreeSpace{0.5}, ThinLens{0.5}, FreeSpace{1.0}}}, {{FreeSpace{0.5}}}};
    const double w = ghost_conditional_width({1e-3, 1e-5, EmissionGeometry::back_to_back}, lens, slit, c);
    CHECK(w <= slit.width);
  }
}

TEST_CASE("analytic Gaussian propagation agrees with the sampled FFT route") {
  const PhysicalConstants c;
  const Grid1D g = Grid1D::with_spacing(512, 2e-5);
  const SourceParams sp;
  const NumericalGuards off = NumericalGuards::disabled();
  const OpticalPath arm2{{FreeSpace{0.3}, ThinLens{0.4}, FreeSpace{0.2}}};

  JointField2D fft = make_biphoton(sp, g, g);
  for (const Element& e : arm2.elements) fft = apply_element(fft, Arm::two, e, c, off);
  const JointField2D analytic = GaussianBiphoton(sp).through(Arm::two, arm2, c).sample(g, g).normalized();

  // The analytic route drops the global (Gouy) phase; align it at the peak.
  std::size_t peak = 0;
  for (std::size_t i = 0; i < fft.amplitudes().size(); ++i)
    if (std::abs(fft.amplitudes()[i]) > std::abs(fft.amplitudes()[peak])) peak = i;
  const Complex phase = fft.amplitudes()[peak] / analytic.amplitudes()[peak];
  double err = 0.0;
  for (std::size_t i = 0; i < fft.amplitudes().size(); ++i)
    err = std::max(err, std::abs(fft.amplitudes()[i] - phase * analytic.amplitudes()[i]));
  CHECK(std::abs(std::abs(phase) - 1.0) < 1e-6);
  CHECK(err / std::abs(fft.amplitudes()[peak]) < 1e-6);
}
