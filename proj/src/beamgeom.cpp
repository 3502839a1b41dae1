#include "hamest/beamgeom.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "hamest/rk45.hpp"

namespace hamest::beamgeom {

namespace {

struct Gradient {
  double gk, gx;  // d(phase)/d(kappa), d(phase)/d(xi)
};

Gradient phase_gradient(const BeamGeometry& geom, double kappa, double xi) {
  const double k = geom.wavenumber();
  const double xr = geom.rayleigh();
  const double u = xi * xi + xr * xr;
  Gradient g;
  g.gk = k * kappa * xi / u;
  g.gx = k - xr / u + 0.5 * k * kappa * kappa * (xr * xr - xi * xi) / (u * u);
  return g;
}

// Symmetric second derivatives of the phase in (kappa, xi).
struct Hessian {
  double kk, kx, xx;
};

Hessian phase_hessian(const BeamGeometry& geom, double kappa, double xi) {
  const double k = geom.wavenumber();
  const double xr = geom.rayleigh();
  const double u = xi * xi + xr * xr;
  Hessian h;
  h.kk = k * xi / u;
  h.kx = k * kappa * (xr * xr - xi * xi) / (u * u);
  h.xx = 2.0 * xi * xr / (u * u) -
         k * kappa * kappa * xi * (3.0 * xr * xr - xi * xi) / (u * u * u);
  return h;
}

// cos(theta) and its derivative along the transport coordinate.
void cos_theta_and_slope(const BeamGeometry& geom, double u, double& c, double& cp) {
  const double sa = std::sin(geom.alpha), ca = std::cos(geom.alpha);
  const double kappa = u * sa;
  const double xi = geom.xi_cl + u * ca;
  const Gradient g = phase_gradient(geom, kappa, xi);
  const double n2 = g.gk * g.gk + g.gx * g.gx;
  const double n = std::sqrt(n2);
  if (n == 0.0) throw NumericError("wavefront: vanishing phase gradient");
  const double dot = g.gk * ca + g.gx * sa;
  c = dot / n;

  const Hessian h = phase_hessian(geom, kappa, xi);
  const double dgk = h.kk * sa + h.kx * ca;
  const double dgx = h.kx * sa + h.xx * ca;
  const double ddot = dgk * ca + dgx * sa;
  const double dn = (g.gk * dgk + g.gx * dgx) / n;
  cp = ddot / n - dot * dn / n2;
}

}  // namespace

void BeamGeometry::validate() const {
  if (!(wavelength > 0.0)) throw ValidationError("beam geometry: wavelength > 0");
  if (!(w0 > 0.0)) throw ValidationError("beam geometry: w0 > 0");
}

double gouy_phase_field(const BeamGeometry& geom, double kappa, double xi) {
  geom.validate();
  const double k = geom.wavenumber();
  const double xr = geom.rayleigh();
  return k * xi - std::atan2(xi, xr) + 0.5 * k * kappa * kappa * xi / (xi * xi + xr * xr);
}

Eigen::Vector2d wavefront_normal(const BeamGeometry& geom, double kappa, double xi) {
  geom.validate();
  const Gradient g = phase_gradient(geom, kappa, xi);
  Eigen::Vector2d v(g.gk, g.gx);
  const double n = v.norm();
  if (n == 0.0) throw NumericError("wavefront_normal: vanishing phase gradient");
  return v / n;
}

double wavefront_angle(const BeamGeometry& geom, double u) {
  geom.validate();
  double c, cp;
  cos_theta_and_slope(geom, u, c, cp);
  return std::acos(std::clamp(c, -1.0, 1.0));
}

double doppler_denominator(const BeamGeometry& geom, double u) {
  geom.validate();
  double c, cp;
  cos_theta_and_slope(geom, u, c, cp);
  const double k = geom.wavenumber();
  return k * (cp * u + c);
}

double doppler_denominator_fd(const BeamGeometry& geom, double u, double step) {
  geom.validate();
  const double k = geom.wavenumber();
  const double kz = k * std::cos(wavefront_angle(geom, u));
  const double kzp = k *
                     (std::cos(wavefront_angle(geom, u + step)) -
                      std::cos(wavefront_angle(geom, u - step))) /
                     (2.0 * step);
  return kzp * u + kz;
}

VelocityProfile velocity_from_detuning(const bspline::SplineCurve& delta,
                                       double delta_L_ref, const BeamGeometry& geom,
                                       double z0, const std::vector<double>& t_grid,
                                       double rel_tol, double abs_tol) {
  geom.validate();
  delta.validate();
  if (t_grid.empty()) throw ValidationError("velocity_from_detuning: empty grid");
  for (std::size_t i = 0; i + 1 < t_grid.size(); ++i) {
    if (t_grid[i + 1] < t_grid[i])
      throw ValidationError("velocity_from_detuning: grid must be sorted ascending");
  }

  const double k = geom.wavenumber();
  auto rhs_value = [&](double t, double u) {
    const double tc = std::clamp(t, delta.t_start(), delta.t_end());
    const double d = doppler_denominator(geom, u);
    if (std::abs(d) < 0.01 * k)
      throw NumericError("velocity_from_detuning: Doppler denominator vanishes at z=" +
                         std::to_string(u + geom.z_c) + " m, t=" + std::to_string(t));
    return (delta_L_ref - bspline::eval_curve(delta, tc)) / d;
  };

  VelocityProfile out;
  out.t_s = t_grid;
  out.zdot_m_s.resize(t_grid.size());
  out.z_m.resize(t_grid.size());

  std::array<double, 1> y{z0 - geom.z_c};
  OdeOptions opt;
  opt.rel_tol = rel_tol;
  opt.abs_tol = abs_tol;
  auto rhs = [&](double t, const std::array<double, 1>& yy, std::array<double, 1>& dy) {
    dy[0] = rhs_value(t, yy[0]);
  };
  integrate_dopri5<1>(rhs, y, t_grid.front(), std::span<const double>(t_grid),
                      opt, [&](std::size_t i, double t, const std::array<double, 1>& yy) {
                        out.z_m[i] = yy[0] + geom.z_c;
                        out.zdot_m_s[i] = rhs_value(t, yy[0]);
                      });
  return out;
}

WaistOffsetFit fit_waist_offset(const VelocitySource& a, const VelocitySource& b,
                                const BeamGeometry& geom_template, double overlap_lo,
                                double overlap_hi, double bracket_lo, double bracket_hi,
                                int scan_points, double tol) {
  if (!(overlap_hi > overlap_lo))
    throw ValidationError("fit_waist_offset: empty overlap window");
  if (!(bracket_hi > bracket_lo) || scan_points < 5)
    throw ValidationError("fit_waist_offset: bad bracket");
  const double lo = std::max({overlap_lo, a.delta.t_start(), b.delta.t_start()});
  const double hi = std::min({overlap_hi, a.delta.t_end(), b.delta.t_end()});
  if (!(hi > lo))
    throw ValidationError("fit_waist_offset: overlap window outside both curves");

  // The trajectories are integrated from the dataset start so positions stay
  // anchored to the known initial conditions; only the overlap part is scored.
  std::vector<double> grid;
  const int lead = 16, pts = 64;
  const double t_first = std::max(a.delta.t_start(), b.delta.t_start());
  for (int i = 0; i < lead; ++i) grid.push_back(t_first + (lo - t_first) * i / lead);
  for (int i = 0; i <= pts; ++i) grid.push_back(lo + (hi - lo) * i / pts);

  auto overlap_objective = [&](double xi) {
    BeamGeometry ga = geom_template;
    ga.xi_cl = xi;
    ga.z_c = a.z_c;
    BeamGeometry gb = geom_template;
    gb.xi_cl = xi;
    gb.z_c = b.z_c;
    const VelocityProfile va = velocity_from_detuning(a.delta, a.delta_L_ref, ga, a.z0, grid);
    const VelocityProfile vb = velocity_from_detuning(b.delta, b.delta_L_ref, gb, b.z0, grid);
    double acc = 0.0;
    for (std::size_t i = lead; i + 1 < grid.size(); ++i) {
      const double d = va.zdot_m_s[i] - vb.zdot_m_s[i];
      acc += d * d * (grid[i + 1] - grid[i]);
    }
    return acc;
  };

  WaistOffsetFit fit;
  int best = 0;
  for (int i = 0; i < scan_points; ++i) {
    const double xi = bracket_lo + (bracket_hi - bracket_lo) * i / (scan_points - 1);
    const double f = overlap_objective(xi);
    fit.scan.emplace_back(xi, f);
    if (f < fit.scan[best].second) best = i;
  }

  double fmax = 0.0, fmin = fit.scan[best].second;
  for (const auto& [xi, f] : fit.scan) fmax = std::max(fmax, f);
  if (fmax <= 0.0 || (fmax - fmin) <= 1e-9 * fmax) {
    fit.degenerate = true;
    fit.xi_cl = fit.scan[best].first;
    fit.residual = fmin;
    return fit;
  }
  if (best == 0 || best == scan_points - 1)
    throw DegenerateError("fit_waist_offset: minimum not bracketed by the scan range");

  // Golden-section on the bracketing triple.
  double xl = fit.scan[best - 1].first, xr = fit.scan[best + 1].first;
  const double gr = 0.5 * (std::sqrt(5.0) - 1.0);
  double x1 = xr - gr * (xr - xl), x2 = xl + gr * (xr - xl);
  double f1 = overlap_objective(x1), f2 = overlap_objective(x2);
  while (xr - xl > tol) {
    if (f1 <= f2) {
      xr = x2;
      x2 = x1;
      f2 = f1;
      x1 = xr - gr * (xr - xl);
      f1 = overlap_objective(x1);
    } else {
      xl = x1;
      x1 = x2;
      f1 = f2;
      x2 = xl + gr * (xr - xl);
      f2 = overlap_objective(x2);
    }
  }
  fit.xi_cl = 0.5 * (xl + xr);
  fit.residual = overlap_objective(fit.xi_cl);
  return fit;
}

}  // namespace hamest::beamgeom
