#include "hamest/synthlab.hpp"

#include <algorithm>
#include <cmath>

#include "hamest/rk45.hpp"

namespace hamest::synthlab {

double VelocityProgram::value(double t) const {
  if (t < 0.0 || t > t_end) return 0.0;
  switch (kind) {
    case Kind::constant:
      return v_peak;
    case Kind::raised_cosine:
      return 0.5 * v_peak * (1.0 - std::cos(2.0 * M_PI * t / t_end));
    case Kind::sine_sq_sharp: {
      const double s = std::sin(M_PI * t / t_end);
      return v_peak * s * s * s * s;
    }
  }
  return 0.0;
}

double RabiProfile::value(double z) const {
  const double q = (z - center) / half_width;
  return peak * std::exp(-2.0 * q * q);
}

void Scenario::validate() const {
  geometry.validate();
  if (t_off_s.empty() || delta_L_rad_s.empty())
    throw ValidationError("scenario: empty measurement grid");
  for (std::size_t i = 0; i + 1 < t_off_s.size(); ++i) {
    if (t_off_s[i + 1] <= t_off_s[i])
      throw ValidationError("scenario: t_off grid must be strictly increasing");
  }
  if (t_off_s.front() < 0.0) throw ValidationError("scenario: t_off must start at >= 0");
  if (shots < 1) throw ValidationError("scenario: shots >= 1");
  if (!(velocity.t_end > 0.0)) throw ValidationError("scenario: velocity t_end > 0");
  if (!(rabi.half_width > 0.0)) throw ValidationError("scenario: rabi half_width > 0");
  if (!(truth_knot_pitch > 0.0) || truth_order < 2)
    throw ValidationError("scenario: bad truth basis");
}

std::vector<double> linspace(double lo, double hi, int n) {
  if (n < 1) throw ValidationError("linspace: n >= 1");
  std::vector<double> v(n);
  if (n == 1) {
    v[0] = lo;
    return v;
  }
  for (int i = 0; i < n - 1; ++i) v[i] = lo + (hi - lo) * i / (n - 1);
  v[n - 1] = hi;
  return v;
}

qdyn::HamiltonianModel realize_truth(const Scenario& scn) {
  scn.validate();
  const double t_max = scn.t_off_s.back();
  if (!(t_max > 0.0)) throw ValidationError("realize_truth: zero-length horizon");

  // Trajectory by quadrature of the transport program on a dense grid.
  const int dense = std::max(64, static_cast<int>(std::ceil(t_max / scn.truth_knot_pitch)) * 5);
  std::vector<double> tg(dense + 1);
  for (int i = 0; i < dense; ++i) tg[i] = t_max * i / dense;
  tg[dense] = t_max;

  std::vector<double> z(dense + 1);
  {
    std::array<double, 1> y{scn.z0};
    OdeOptions opt;
    opt.rel_tol = 1e-12;
    opt.abs_tol = 1e-18;
    integrate_dopri5<1>(
        [&](double t, const std::array<double, 1>&, std::array<double, 1>& dy) {
          dy[0] = scn.velocity.value(t);
        },
        y, 0.0, std::span<const double>(tg), opt,
        [&](std::size_t i, double, const std::array<double, 1>& yy) { z[i] = yy[0]; });
  }

  std::vector<bspline::WeightedSample> sd(dense + 1), so(dense + 1);
  for (int i = 0; i <= dense; ++i) {
    const double u = z[i] - scn.geometry.z_c;
    sd[i] = {tg[i], -beamgeom::doppler_denominator(scn.geometry, u) * scn.velocity.value(tg[i]),
             1.0};
    so[i] = {tg[i], scn.rabi.value(z[i]), 1.0};
  }

  const int n_basis =
      scn.truth_order + std::max(1, static_cast<int>(std::llround(t_max / scn.truth_knot_pitch)) - 1);
  const auto kv = bspline::build_knots(0.0, t_max, n_basis, scn.truth_order);
  return qdyn::make_model(bspline::fit_samples(sd, kv), bspline::fit_samples(so, kv));
}

objective::Dataset generate_dataset(const Scenario& scn, const qdyn::SolverConfig& cfg) {
  const auto truth = realize_truth(scn);
  const auto grid = qdyn::population_grid(truth, scn.t_off_s, scn.delta_L_rad_s, cfg);
  const auto counts = qdyn::sample_measurements(grid, scn.shots, scn.seed);
  std::map<std::string, std::string> meta{
      {"scenario", scn.name},
      {"seed", std::to_string(scn.seed)},
      {"generator", "synthlab"},
  };
  return objective::make_dataset(scn.t_off_s, scn.delta_L_rad_s, counts, scn.shots,
                                 std::move(meta));
}

namespace {

Scenario base_scenario() {
  Scenario s;
  // The ramp spans the whole sampled window so the truth curves carry no
  // interior curvature kink; total travel 29.7 um, crossing near midway.
  s.velocity = {VelocityProgram::Kind::raised_cosine, 1.2, 49.5e-6};
  s.geometry.wavelength = 299792458.0 / 411.0420e12;
  s.geometry.w0 = 10e-6;
  s.geometry.alpha = 3.0 * M_PI / 4.0;
  s.geometry.xi_cl = -2.27e-3;
  s.geometry.z_c = 15e-6;
  s.rabi = {2.0 * M_PI * 250e3, 75e-6, 15e-6};
  s.t_off_s = linspace(0.0, 49.5e-6, 100);
  s.delta_L_rad_s = linspace(-2.0 * M_PI * 1.5e6, 2.0 * M_PI * 1.5e6, 101);
  s.shots = 100;
  s.z0 = 0.0;
  return s;
}

}  // namespace

std::map<std::string, Scenario> paper_like_scenarios() {
  std::map<std::string, Scenario> presets;

  Scenario a = base_scenario();
  a.name = "A";
  a.seed = 1;
  presets["A"] = a;

  // Same transport, beam displaced along the axis: crossing and coupling
  // center move together, the waist offset is invariant under the shift.
  Scenario b = a;
  b.name = "B";
  b.seed = 2;
  b.geometry.z_c += 64e-6;
  b.rabi.center += 64e-6;
  presets["B"] = b;

  Scenario c = base_scenario();
  c.name = "C";
  c.seed = 3;
  c.velocity = {VelocityProgram::Kind::raised_cosine, 1.0, 49.5e-6};
  presets["C"] = c;

  Scenario d = c;
  d.name = "D";
  d.seed = 4;
  d.velocity = {VelocityProgram::Kind::sine_sq_sharp, 1.6, 49.5e-6};
  presets["D"] = d;

  return presets;
}

Scenario nyquist_scenario() {
  Scenario s = base_scenario();
  s.name = "nyquist";
  s.seed = 5;
  s.rabi = {2.0 * M_PI * 0.95e6, 6e-6, 12e-6};
  s.t_off_s = linspace(0.0, 40e-6, 21);  // 2 us pitch, Nyquist 250 kHz
  s.delta_L_rad_s = linspace(-2.0 * M_PI * 1.5e6, 2.0 * M_PI * 1.5e6, 41);
  return s;
}

}  // namespace hamest::synthlab
