#include "hamest/nls.hpp"

#include <algorithm>
#include <cmath>

#include "hamest/parallel.hpp"

namespace hamest::ehe {

Eigen::MatrixXd fd_jacobian(const ResidualFn& fn, const Eigen::VectorXd& p,
                            const Eigen::VectorXd& r0, const NlsSettings& settings,
                            long* eval_counter) {
  const int n = static_cast<int>(p.size());
  Eigen::MatrixXd jac(r0.size(), n);
  parallel_for(static_cast<std::size_t>(n), [&](std::size_t i) {
    double h = std::max(settings.fd_rel * std::abs(p[i]), settings.fd_abs);
    // The base point can sit right at a validity guard of the forward model;
    // shrink the probe before giving up.
    for (int attempt = 0;; ++attempt) {
      Eigen::VectorXd pp = p;
      pp[i] += h;
      try {
        jac.col(i) = (fn(pp) - r0) / h;
        break;
      } catch (const NumericError&) {
        if (attempt >= 2) throw;
        h *= 0.125;
      }
    }
  });
  if (eval_counter) *eval_counter += n;
  return jac;
}

NlsResult nls_solve(const ResidualFn& fn, Eigen::VectorXd start,
                    const NlsSettings& settings, const JacobianFn& jac_fn) {
  NlsResult out;
  NlsDiagnostics& diag = out.diag;

  Eigen::VectorXd p = std::move(start);
  Eigen::VectorXd r = fn(p);
  diag.residual_evals = 1;
  if (!r.allFinite()) throw NumericError("nls_solve: non-finite residuals at start");
  double cost = r.squaredNorm();
  diag.initial_cost = cost;

  if (cost == 0.0) {
    diag.status = NlsStatus::converged_cost;
    diag.final_cost = 0.0;
    out.params = std::move(p);
    return out;
  }

  auto jacobian_at = [&](const Eigen::VectorXd& pt, const Eigen::VectorXd& rt) {
    ++diag.jacobian_evals;
    return jac_fn ? jac_fn(pt, rt) : fd_jacobian(fn, pt, rt, settings, &diag.residual_evals);
  };

  Eigen::MatrixXd jac = jacobian_at(p, r);
  bool jac_fresh = true;
  double lambda = settings.lambda_init;

  for (int iter = 1; iter <= settings.max_iterations; ++iter) {
    const Eigen::MatrixXd jtj = jac.transpose() * jac;
    const Eigen::VectorXd g = jac.transpose() * r;
    const double diag_floor = 1e-12 * std::max(jtj.diagonal().maxCoeff(), 1e-300);
    const Eigen::VectorXd scale = jtj.diagonal().cwiseMax(diag_floor);

    bool accepted = false;
    Eigen::VectorXd p_new, r_new, dp;
    double cost_new = cost;
    while (lambda <= 1e12) {
      Eigen::MatrixXd a = jtj;
      a.diagonal() += lambda * scale;
      Eigen::LDLT<Eigen::MatrixXd> ldlt(a);
      if (ldlt.info() == Eigen::Success) {
        dp = ldlt.solve(-g);
        p_new = p + dp;
        bool usable = true;
        try {
          r_new = fn(p_new);
          ++diag.residual_evals;
        } catch (const NumericError&) {
          // A wild trial can push the forward model past its validity guards;
          // treat it like any other rejected step.
          usable = false;
          ++diag.residual_evals;
        }
        if (usable && r_new.allFinite()) {
          cost_new = r_new.squaredNorm();
          if (cost_new < cost) {
            accepted = true;
            break;
          }
        }
      }
      lambda *= 10.0;
    }

    if (!accepted) {
      if (!jac_fresh) {
        jac = jacobian_at(p, r);
        jac_fresh = true;
        lambda = settings.lambda_init;
        continue;
      }
      diag.status = NlsStatus::stalled;
      diag.iterations = iter;
      break;
    }

    ++diag.iterations;
    const bool step_small = dp.norm() <= settings.xtol * (p.norm() + settings.xtol);
    const bool cost_small = (cost - cost_new) <= settings.ftol * cost;
    p = std::move(p_new);
    r = std::move(r_new);
    cost = cost_new;
    lambda = std::max(lambda * 0.3, 1e-14);

    if (step_small || cost_small) {
      diag.status = step_small ? NlsStatus::converged_step : NlsStatus::converged_cost;
      break;
    }
    if (iter == settings.max_iterations) {
      diag.status = NlsStatus::max_iterations;
      break;
    }
    if (settings.frozen_jacobian) {
      jac_fresh = false;
    } else {
      jac = jacobian_at(p, r);
      jac_fresh = true;
    }
  }

  diag.final_cost = cost;
  out.params = std::move(p);
  return out;
}

}  // namespace hamest::ehe
