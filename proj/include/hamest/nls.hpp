#pragma once

#include <Eigen/Dense>
#include <functional>

#include "hamest/errors.hpp"

namespace hamest::ehe {

struct NlsSettings {
  int max_iterations = 100;
  double xtol = 1e-10;        // relative step tolerance
  double ftol = 1e-12;        // relative cost-decrease tolerance
  double lambda_init = 1e-3;  // initial damping
  double fd_rel = 1e-6;       // forward-difference step = max(fd_rel |p|, fd_abs)
  double fd_abs = 1e-3;       // rad/s
  // Keep the Jacobian from the start of the solve and refresh it only when a
  // damping sweep finds no decrease. Exact residuals still decide acceptance
  // and the stationary point, so the minimizer is unchanged to second order.
  bool frozen_jacobian = false;
};

enum class NlsStatus { converged_step, converged_cost, max_iterations, stalled };

struct NlsDiagnostics {
  NlsStatus status = NlsStatus::max_iterations;
  int iterations = 0;
  long residual_evals = 0;
  int jacobian_evals = 0;
  double initial_cost = 0.0;  // squared residual norms
  double final_cost = 0.0;
};

using ResidualFn = std::function<Eigen::VectorXd(const Eigen::VectorXd&)>;
using JacobianFn =
    std::function<Eigen::MatrixXd(const Eigen::VectorXd&, const Eigen::VectorXd&)>;

struct NlsResult {
  Eigen::VectorXd params;
  NlsDiagnostics diag;
};

// Forward-difference Jacobian, columns evaluated in parallel; fn must be
// safe to call concurrently.
Eigen::MatrixXd fd_jacobian(const ResidualFn& fn, const Eigen::VectorXd& p,
                            const Eigen::VectorXd& r0, const NlsSettings& settings,
                            long* eval_counter = nullptr);

// Levenberg-Marquardt with diagonal (Marquardt) scaling. Throws NumericError
// on non-finite residuals at the start; an exhausted iteration budget is
// reported through the status, not an exception. jac, when given, supplies
// the Jacobian instead of forward differences.
NlsResult nls_solve(const ResidualFn& fn, Eigen::VectorXd start,
                    const NlsSettings& settings, const JacobianFn& jac = nullptr);

}  // namespace hamest::ehe
