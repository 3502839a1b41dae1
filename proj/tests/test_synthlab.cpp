#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "hamest/synthlab.hpp"

using namespace hamest;
using namespace hamest::synthlab;

namespace {
constexpr double kTwoPi = 2.0 * M_PI;
}

TEST_CASE("still ion: zero detuning, constant coupling") {
  Scenario s = paper_like_scenarios().at("A");
  s.velocity = {VelocityProgram::Kind::raised_cosine, 0.0, 40e-6};
  s.t_off_s = linspace(0.0, 40e-6, 41);
  const auto truth = realize_truth(s);
  const double omega0 = s.rabi.value(s.z0);
  for (double t : {0.0, 13e-6, 27e-6, 40e-6}) {
    CHECK(std::abs(bspline::eval_curve(truth.delta, t)) <= 1e-6);
    CHECK(bspline::eval_curve(truth.omega, t) == doctest::Approx(omega0).epsilon(1e-9));
  }
}

TEST_CASE("plane-wave uniform motion pins the detuning value") {
  Scenario s = paper_like_scenarios().at("A");
  s.geometry.w0 *= 1e3;
  s.geometry.xi_cl = 0.0;
  s.velocity = {VelocityProgram::Kind::constant, 1.0, 45e-6};
  s.t_off_s = linspace(0.0, 40e-6, 41);
  const auto truth = realize_truth(s);
  const double expect = -s.geometry.wavenumber() * std::cos(M_PI / 4.0);  // -D * 1 m/s
  for (double t : {1e-6, 20e-6, 39e-6}) {
    CHECK(bspline::eval_curve(truth.delta, t) == doctest::Approx(expect).epsilon(1e-7));
  }
  CHECK(expect / kTwoPi == doctest::Approx(-0.9696e6).epsilon(1e-3));
}

TEST_CASE("ion far from the beam sees no coupling") {
  Scenario s = paper_like_scenarios().at("A");
  s.rabi.center = 12e-6 + 10.0 * s.rabi.half_width;
  s.t_off_s = linspace(0.0, 40e-6, 41);
  const auto truth = realize_truth(s);
  for (double t : {0.0, 20e-6, 40e-6})
    CHECK(std::abs(bspline::eval_curve(truth.omega, t)) <= 1e-10 * s.rabi.peak);
}

TEST_CASE("truth inversion closes the loop on the velocity") {
  const Scenario s = paper_like_scenarios().at("A");
  const auto truth = realize_truth(s);
  std::vector<double> grid = linspace(0.0, 40e-6, 81);
  const auto prof =
      beamgeom::velocity_from_detuning(truth.delta, 0.0, s.geometry, s.z0, grid);
  for (std::size_t i = 0; i < grid.size(); ++i)
    CHECK(std::abs(prof.zdot_m_s[i] - s.velocity.value(grid[i])) <= 1e-6);
}

TEST_CASE("dataset generation is deterministic and concentrated at high shots") {
  Scenario s = paper_like_scenarios().at("A");
  s.t_off_s = linspace(0.0, 20e-6, 9);
  s.delta_L_rad_s = linspace(-kTwoPi * 1e6, kTwoPi * 1e6, 7);
  s.shots = 1000000;
  const auto truth = realize_truth(s);
  const auto grid = qdyn::population_grid(truth, s.t_off_s, s.delta_L_rad_s, {});
  const auto data = generate_dataset(s);
  for (int i = 0; i < data.rows(); ++i)
    for (int j = 0; j < data.cols(); ++j)
      CHECK(std::abs(data.sigma_z(i, j) - grid(i, j)) <= 0.005);

  s.shots = 100;
  const auto d1 = generate_dataset(s);
  const auto d2 = generate_dataset(s);
  CHECK((d1.counts - d2.counts).cwiseAbs().maxCoeff() == 0);
  Scenario s2 = s;
  s2.seed = 999;
  const auto d3 = generate_dataset(s2);
  CHECK((d1.counts - d3.counts).cwiseAbs().maxCoeff() != 0);
}

TEST_CASE("preset family invariants") {
  auto presets = paper_like_scenarios();
  REQUIRE(presets.size() == 4);
  const Scenario& a = presets.at("A");
  const Scenario& b = presets.at("B");
  const Scenario& c = presets.at("C");
  const Scenario& d = presets.at("D");

  // A and B share the transport program; the beam moved by 64 um.
  CHECK(a.velocity.v_peak == b.velocity.v_peak);
  CHECK(static_cast<int>(a.velocity.kind) == static_cast<int>(b.velocity.kind));
  CHECK(b.geometry.z_c - a.geometry.z_c == doctest::Approx(64e-6));
  CHECK(b.rabi.center - a.rabi.center == doctest::Approx(64e-6));
  CHECK(a.geometry.xi_cl == b.geometry.xi_cl);

  // C and D share the beam, differ in transport.
  CHECK(c.rabi.center == d.rabi.center);
  CHECK(c.rabi.peak == d.rabi.peak);
  CHECK(c.geometry.z_c == d.geometry.z_c);
  CHECK((c.velocity.v_peak != d.velocity.v_peak ||
         static_cast<int>(c.velocity.kind) != static_cast<int>(d.velocity.kind)));

  // 0.5 us sampling pitch: Nyquist at 1 MHz.
  const double pitch = a.t_off_s[1] - a.t_off_s[0];
  CHECK(pitch == doctest::Approx(0.5e-6).epsilon(1e-12));
  CHECK(0.5 / pitch == doctest::Approx(1e6).epsilon(1e-12));
  CHECK(a.t_off_s.size() == 100);
  CHECK(a.delta_L_rad_s.size() == 101);

  const Scenario ny = nyquist_scenario();
  CHECK(ny.t_off_s[1] - ny.t_off_s[0] == doctest::Approx(2e-6).epsilon(1e-12));
  CHECK(ny.rabi.peak == doctest::Approx(kTwoPi * 0.95e6));
}
