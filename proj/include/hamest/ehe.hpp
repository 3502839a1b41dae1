#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <vector>

#include "hamest/nls.hpp"
#include "hamest/objective.hpp"
#include "hamest/qdyn.hpp"

namespace hamest::ehe {

struct EheConfig {
  double t0 = 5e-6;         // initial horizon
  double tau = 2e-6;        // horizon extension step
  double chi2_bound = 1.5;  // acceptance gate on the reduced chi-squared

  // Seed search: few low-order splines, random restarts.
  int seed_n_delta = 2;
  int seed_n_omega = 2;
  int seed_order = 2;
  int seed_starts = 32;
  double seed_delta_range = 2.0 * M_PI * 500e3;  // rad/s, symmetric draw
  double seed_omega_max = 2.0 * M_PI * 500e3;    // rad/s, non-negative draw

  // Main basis: constant knot pitch keeps the parameter density fixed as the
  // horizon grows; the fallback ladder can add interior knots.
  int main_order = 4;
  double main_knot_pitch = 2e-6;
  int basis_increment = 2;
  int max_fallback_depth = 3;
  double bound_raise_factor = 1.5;
  double restart_perturb_scale = 0.05;

  std::uint64_t rng_seed = 1;
  NlsSettings nls;
  qdyn::SolverConfig solver{1e-8, 1e-11, 0.0, 1e-6};

  // Optional explicit starting model for the seed window, tried before the
  // random starts (the hook for prior knowledge).
  std::optional<qdyn::HamiltonianModel> initial_model;

  void validate() const;
};

// One knot vector per curve; parameters are the concatenated coefficients
// (delta first, then omega).
struct Basis {
  bspline::KnotVector delta_kv;
  bspline::KnotVector omega_kv;
  int size() const { return delta_kv.basis_count() + omega_kv.basis_count(); }
};

Basis main_basis(const EheConfig& cfg, double t_horizon, int extra_interior);
Eigen::VectorXd pack(const qdyn::HamiltonianModel& model);
qdyn::HamiltonianModel unpack(const Basis& basis, const Eigen::VectorXd& params);

// Residual function over the window rows at the given horizon; thread-safe.
ResidualFn window_residual_fn(const objective::Dataset& data, double t_horizon,
                              const Basis& basis, const qdyn::SolverConfig& solver);

struct WindowFit {
  qdyn::HamiltonianModel model;
  double chi2 = 0.0;
  NlsDiagnostics diag;
};

// Nonlinear refit of a window from an explicit start; used by the horizon
// loop, post-processing and the bootstrap.
WindowFit fit_window(const objective::Dataset& data, double t_horizon, const Basis& basis,
                     const Eigen::VectorXd& start, const NlsSettings& nls,
                     const qdyn::SolverConfig& solver, const JacobianFn& jac = nullptr);

struct SeedResult {
  qdyn::HamiltonianModel model;  // low-order seed-basis fit on [0, t0]
  double chi2 = 0.0;
  int starts_used = 0;
};

// Multi-start search on [0, t0] with the low-order seed basis; throws
// ConvergenceError when the budget is exhausted without reaching the bound.
// The promotion to the main basis happens in initial_state.
SeedResult seed_fit(const objective::Dataset& data, const EheConfig& cfg);

// One horizon extension: extrapolate, rebase onto knots covering the target,
// refit. Returns the input unchanged when the horizon is already full.
// flat_extension continues the curves at their endpoint values instead of the
// linear extrapolation; the ladder uses it as its alternative starting point,
// since the fitted endpoint slope is the noisiest feature of a window.
WindowFit extend_and_refit(const qdyn::HamiltonianModel& current,
                           const objective::Dataset& data, const EheConfig& cfg,
                           double t_target, int extra_interior,
                           std::uint64_t perturb_key = 0, bool flat_extension = false);

struct WindowTrace {
  double t_horizon = 0.0;
  double chi2 = 0.0;
  int n_params = 0;
  int fallbacks_used = 0;
  double chi2_bound = 0.0;  // bound in force when the window was accepted
  int nls_iterations = 0;
};

struct EheDiagnostics {
  int seed_starts_used = 0;
  int total_nls_iterations = 0;
  long residual_evals = 0;
  int bound_raises = 0;
  bool reached_full_horizon = false;
};

struct EstimationResult {
  qdyn::HamiltonianModel model;
  double final_chi2 = 0.0;
  std::vector<WindowTrace> trace;
  EheDiagnostics diagnostics;
};

// Loop state between accepted windows; serializable for resumable runs.
struct EheState {
  double t_horizon = 0.0;
  qdyn::HamiltonianModel model;
  int extra_interior = 0;
  double chi2_bound = 0.0;
  int window_index = 0;
  std::vector<WindowTrace> trace;
  EheDiagnostics diagnostics;
};

// Seed fit packaged as the first loop state (one trace entry at t0).
EheState initial_state(const objective::Dataset& data, const EheConfig& cfg);

// Extends the horizon until max(t_off), applying the fallback ladder
// (halve tau, add basis, perturbed restart) and raising the bound once the
// ladder is exhausted. on_window fires after every accepted window.
EstimationResult run_from(EheState state, const objective::Dataset& data,
                          const EheConfig& cfg,
                          const std::function<void(const EheState&)>& on_window = nullptr);

EstimationResult run(const objective::Dataset& data, const EheConfig& cfg,
                     const std::function<void(const EheState&)>& on_window = nullptr);

// Full-horizon re-optimization from the (optionally perturbed) previous
// optimum, with an optional basis-size override of +/- interior knots.
EstimationResult refit_full(const EstimationResult& result, const objective::Dataset& data,
                            const EheConfig& cfg, double perturb_scale = 0.0,
                            int basis_delta = 0, std::uint64_t perturb_key = 1);

}  // namespace hamest::ehe
