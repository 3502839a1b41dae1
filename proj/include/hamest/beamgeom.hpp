#pragma once

#include <Eigen/Dense>
#include <vector>

#include "hamest/bspline.hpp"
#include "hamest/errors.hpp"

namespace hamest::beamgeom {

// Gaussian-beam phase geometry around the point where the transport line
// crosses the beam axis. Beam-frame coordinates: xi along the axis from the
// minimum waist, kappa perpendicular to it; a transport coordinate u
// (measured from the crossing) maps to (kappa, xi) = (u sin a, xi_cl + u cos a).
// z_c converts lab transport coordinates: u = z_lab - z_c.
struct BeamGeometry {
  double wavelength = 729.3475e-9;  // m
  double w0 = 10e-6;                // minimum waist, m
  double alpha = 3.0 * M_PI / 4.0;  // transport-axis angle, rad
  double xi_cl = 0.0;               // waist offset of the crossing, m
  double z_c = 0.0;                 // lab coordinate of the crossing, m

  double wavenumber() const { return 2.0 * M_PI / wavelength; }
  double rayleigh() const { return M_PI * w0 * w0 / wavelength; }
  void validate() const;
};

// Optical phase at beam-frame (kappa, xi): k xi - gouy(xi) + k kappa^2/(2 R(xi)),
// with the curvature term in the form k kappa^2 xi / (2 (xi^2 + xi_R^2)) that
// stays finite at the waist.
double gouy_phase_field(const BeamGeometry& geom, double kappa, double xi);

// Unit normal to the wavefront: normalized phase gradient in (kappa, xi).
Eigen::Vector2d wavefront_normal(const BeamGeometry& geom, double kappa, double xi);

// Angle between the wavefront normal and the transport direction at
// transport coordinate u (relative to the crossing).
double wavefront_angle(const BeamGeometry& geom, double u);

// D(u) = k_z'(u) u + k_z(u) with k_z = k cos(theta(u)); converts velocity to
// the phase-derivative detuning. Analytic derivative via the phase Hessian.
double doppler_denominator(const BeamGeometry& geom, double u);

// Same quantity with k_z' by central differences (default 1 nm step); kept as
// the independent cross-check of the analytic route.
double doppler_denominator_fd(const BeamGeometry& geom, double u, double step = 1e-9);

struct VelocityProfile {
  std::vector<double> t_s;
  std::vector<double> zdot_m_s;
  std::vector<double> z_m;          // lab coordinates
  std::vector<double> sigma_zdot;   // filled by ensemble propagation, else empty
};

// Integrates dz/dt = (delta_L_ref - delta(t)) / D(z) from the lab position z0
// and reports position and velocity on the given time grid. delta carries the
// offset-independent detuning, so delta_L_ref = 0 in that convention.
VelocityProfile velocity_from_detuning(const bspline::SplineCurve& delta,
                                       double delta_L_ref, const BeamGeometry& geom,
                                       double z0, const std::vector<double>& t_grid,
                                       double rel_tol = 1e-10, double abs_tol = 1e-15);

struct VelocitySource {
  bspline::SplineCurve delta;
  double delta_L_ref = 0.0;
  double z_c = 0.0;  // lab crossing coordinate for this dataset's beam
  double z0 = 0.0;   // lab ion position at t = 0
};

struct WaistOffsetFit {
  double xi_cl = 0.0;
  double residual = 0.0;  // integrated squared velocity mismatch at the optimum
  bool degenerate = false;
  std::vector<std::pair<double, double>> scan;  // (xi_cl, residual) table
};

// Scalar search for the waist offset that reconciles two velocity estimates
// of the same transport seen through displaced beams: coarse scan over
// [bracket_lo, bracket_hi], then golden-section refinement of the integrated
// squared velocity difference over the overlap window.
WaistOffsetFit fit_waist_offset(const VelocitySource& a, const VelocitySource& b,
                                const BeamGeometry& geom_template, double overlap_lo,
                                double overlap_hi, double bracket_lo = -10e-3,
                                double bracket_hi = 10e-3, int scan_points = 41,
                                double tol = 1e-6);

}  // namespace hamest::beamgeom
