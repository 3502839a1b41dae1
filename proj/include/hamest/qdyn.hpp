#pragma once

#include <Eigen/Dense>
#include <complex>
#include <cstdint>
#include <vector>

#include "hamest/bspline.hpp"

namespace hamest::qdyn {

// The estimation unknown: two spline curves sharing the domain [0, t_max].
// The total sigma-z coefficient during propagation is delta(t) + delta_L,
// i.e. delta holds the offset-independent part of the detuning.
struct HamiltonianModel {
  bspline::SplineCurve delta;  // rad/s
  bspline::SplineCurve omega;  // rad/s
  double t_max = 0.0;

  void validate() const;
};

HamiltonianModel make_model(bspline::SplineCurve delta, bspline::SplineCurve omega);

struct QubitState {
  std::complex<double> c0{1.0, 0.0};
  std::complex<double> c1{0.0, 0.0};
};

struct SolverConfig {
  double rel_tol = 1e-9;
  double abs_tol = 1e-12;
  double max_step = 0.0;   // seconds; 0 = uncapped
  double norm_tol = 1e-6;  // admissible squared-norm drift before erroring
};

// Schroedinger evolution from |0> under (1/2)(-Omega(t) sx + (delta(t)+delta_L) sz),
// hbar divided out, up to the shut-off time. The returned state is
// renormalized; drift beyond cfg.norm_tol throws NumericError.
QubitState propagate(const HamiltonianModel& model, double delta_L, double t_off,
                     const SolverConfig& cfg);

// <sigma_z> = |c0|^2 - |c1|^2, so the prepared |0> reads +1.
double expectation_sigma_z(const QubitState& state);

// One continuous trajectory per delta_L column, sampled at every t_off in
// ascending order; element (i, j) is <sigma_z> at (t_off[i], delta_L[j]).
// Columns are evaluated in parallel with results identical to serial.
Eigen::MatrixXd population_grid(const HamiltonianModel& model,
                                const std::vector<double>& t_off_list,
                                const std::vector<double>& delta_L_list,
                                const SolverConfig& cfg);

// Projection-noise sampling: counts of |1> outcomes per cell, drawn from
// Binomial(shots, (1 - <sigma_z>)/2) on a per-cell stream keyed by
// (seed, row, col). Identical on every platform.
Eigen::MatrixXi sample_measurements(const Eigen::MatrixXd& sigma_z_grid, int shots,
                                    std::uint64_t seed);

}  // namespace hamest::qdyn
