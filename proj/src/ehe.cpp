#include "hamest/ehe.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include "hamest/rng.hpp"

namespace hamest::ehe {

namespace {

// Flip the coupling sign when its mean is negative: (Omega, delta) and
// (-Omega, delta) generate identical populations from |0>, so fits are
// reported with a positive-mean coupling.
void canonicalize_omega(qdyn::HamiltonianModel& model) {
  if (model.omega.coefficients.mean() < 0.0) model.omega.coefficients *= -1.0;
}

int interior_for_horizon(const EheConfig& cfg, double t_horizon) {
  const int segments =
      std::max<int>(1, static_cast<int>(std::llround(t_horizon / cfg.main_knot_pitch)));
  return segments - 1;
}

Eigen::VectorXd perturbed(const Eigen::VectorXd& p, int n_delta, double scale,
                          rng::Stream& rs) {
  Eigen::VectorXd out = p;
  const double rms_d = std::sqrt(p.head(n_delta).squaredNorm() / n_delta);
  const double rms_o = std::sqrt(p.tail(p.size() - n_delta).squaredNorm() /
                                 (p.size() - n_delta));
  for (int i = 0; i < p.size(); ++i) {
    const double rms = (i < n_delta) ? rms_d : rms_o;
    out[i] += scale * std::max(rms, 1e3) * rs.uniform(-1.0, 1.0);
  }
  return out;
}

}  // namespace

void EheConfig::validate() const {
  if (!(t0 > 0.0)) throw ValidationError("ehe config: t0 > 0");
  if (!(tau > 0.0)) throw ValidationError("ehe config: tau > 0");
  if (!(chi2_bound >= 1.0)) throw ValidationError("ehe config: chi2_bound >= 1");
  if (seed_order < 1 || seed_n_delta < seed_order || seed_n_omega < seed_order)
    throw ValidationError("ehe config: seed basis must satisfy n >= order >= 1");
  if (main_order < 2) throw ValidationError("ehe config: main_order >= 2");
  if (!(main_knot_pitch > 0.0)) throw ValidationError("ehe config: knot pitch > 0");
  if (seed_starts < 1) throw ValidationError("ehe config: seed_starts >= 1");
  if (max_fallback_depth < 0) throw ValidationError("ehe config: fallback depth >= 0");
  if (!(bound_raise_factor > 1.0)) throw ValidationError("ehe config: raise factor > 1");
}

Basis main_basis(const EheConfig& cfg, double t_horizon, int extra_interior) {
  const int interior = interior_for_horizon(cfg, t_horizon) + std::max(0, extra_interior);
  const int n_basis = cfg.main_order + interior;
  Basis b;
  b.delta_kv = bspline::build_knots(0.0, t_horizon, n_basis, cfg.main_order);
  b.omega_kv = b.delta_kv;
  return b;
}

Eigen::VectorXd pack(const qdyn::HamiltonianModel& model) {
  Eigen::VectorXd p(model.delta.coefficients.size() + model.omega.coefficients.size());
  p << model.delta.coefficients, model.omega.coefficients;
  return p;
}

qdyn::HamiltonianModel unpack(const Basis& basis, const Eigen::VectorXd& params) {
  const int nd = basis.delta_kv.basis_count();
  const int no = basis.omega_kv.basis_count();
  if (params.size() != nd + no)
    throw ValidationError("unpack: parameter count does not match basis");
  bspline::SplineCurve d{basis.delta_kv, params.head(nd)};
  bspline::SplineCurve o{basis.omega_kv, params.tail(no)};
  return qdyn::make_model(std::move(d), std::move(o));
}

ResidualFn window_residual_fn(const objective::Dataset& data, double t_horizon,
                              const Basis& basis, const qdyn::SolverConfig& solver) {
  const objective::FitWindow window = objective::window_for(data, t_horizon);
  std::vector<double> rows(data.t_off_s.begin(), data.t_off_s.begin() + window.rows);
  return [&data, window, rows, basis, solver](const Eigen::VectorXd& p) -> Eigen::VectorXd {
    const auto model = unpack(basis, p);
    const auto sim = qdyn::population_grid(model, rows, data.delta_L_rad_s, solver);
    return objective::residual_vector(data, window, sim);
  };
}

WindowFit fit_window(const objective::Dataset& data, double t_horizon, const Basis& basis,
                     const Eigen::VectorXd& start, const NlsSettings& nls,
                     const qdyn::SolverConfig& solver, const JacobianFn& jac) {
  const objective::FitWindow window = objective::window_for(data, t_horizon);
  const long n_points = static_cast<long>(window.rows) * data.cols();
  if (n_points <= basis.size() + 1)
    throw ValidationError("fit_window: window holds " + std::to_string(n_points) +
                          " points for " + std::to_string(basis.size()) + " parameters");

  const ResidualFn fn = window_residual_fn(data, t_horizon, basis, solver);
  NlsResult res = nls_solve(fn, start, nls, jac);

  WindowFit fit;
  fit.model = unpack(basis, res.params);
  fit.chi2 = res.diag.final_cost / static_cast<double>(n_points - basis.size() - 1);
  fit.diag = res.diag;
  return fit;
}

SeedResult seed_fit(const objective::Dataset& data, const EheConfig& cfg) {
  cfg.validate();
  objective::window_for(data, cfg.t0);  // rows must exist at or below t0

  Basis seed_basis;
  seed_basis.delta_kv = bspline::build_knots(0.0, cfg.t0, cfg.seed_n_delta, cfg.seed_order);
  seed_basis.omega_kv = bspline::build_knots(0.0, cfg.t0, cfg.seed_n_omega, cfg.seed_order);

  SeedResult best;
  double best_chi2 = std::numeric_limits<double>::infinity();
  int starts = 0;

  const bool has_prior = cfg.initial_model.has_value();
  const int budget = cfg.seed_starts + (has_prior ? 1 : 0);
  for (int s = 0; s < budget; ++s) {
    ++starts;
    Eigen::VectorXd p0(seed_basis.size());
    if (has_prior && s == 0) {
      const auto d = bspline::rebasis(cfg.initial_model->delta, seed_basis.delta_kv);
      const auto o = bspline::rebasis(cfg.initial_model->omega, seed_basis.omega_kv);
      p0 << d.coefficients, o.coefficients;
    } else {
      rng::Stream rs(cfg.rng_seed, 0x5eedULL, static_cast<std::uint64_t>(s));
      for (int i = 0; i < seed_basis.delta_kv.basis_count(); ++i)
        p0[i] = rs.uniform(-cfg.seed_delta_range, cfg.seed_delta_range);
      for (int i = 0; i < seed_basis.omega_kv.basis_count(); ++i)
        p0[seed_basis.delta_kv.basis_count() + i] = rs.uniform(0.0, cfg.seed_omega_max);
    }

    WindowFit low;
    try {
      low = fit_window(data, cfg.t0, seed_basis, p0, cfg.nls, cfg.solver);
    } catch (const NumericError&) {
      continue;  // hopeless start; try the next one
    }
    if (low.chi2 < best_chi2) {
      best_chi2 = low.chi2;
      best.model = low.model;
      best.chi2 = low.chi2;
    }
    if (best_chi2 <= cfg.chi2_bound) break;
  }

  best.starts_used = starts;
  if (!(best_chi2 <= cfg.chi2_bound))
    throw ConvergenceError(
        "seed_fit: no start reached the bound within the budget (best reduced "
        "chi-squared " +
        std::to_string(best_chi2) + " after " + std::to_string(starts) +
        " starts); adjust t0 or the seed basis");
  canonicalize_omega(best.model);
  return best;
}

WindowFit extend_and_refit(const qdyn::HamiltonianModel& current,
                           const objective::Dataset& data, const EheConfig& cfg,
                           double t_target, int extra_interior, std::uint64_t perturb_key,
                           bool flat_extension) {
  if (t_target <= current.t_max) {
    WindowFit same;
    same.model = current;
    const auto window = objective::window_for(data, current.t_max);
    std::vector<double> rows(data.t_off_s.begin(), data.t_off_s.begin() + window.rows);
    const auto sim = qdyn::population_grid(current, rows, data.delta_L_rad_s, cfg.solver);
    same.chi2 = objective::reduced_chi_squared(
        data, window, sim,
        static_cast<int>(current.delta.coefficients.size() + current.omega.coefficients.size()));
    return same;
  }

  const Basis basis = main_basis(cfg, t_target, extra_interior);
  auto extend_curve = [&](const bspline::SplineCurve& c, const bspline::KnotVector& kv) {
    if (!flat_extension) return bspline::rebasis(c, kv);
    const double edge = bspline::eval_curve(c, c.t_end());
    return bspline::project_function(
        [&](double t) { return t <= c.t_end() ? bspline::eval_curve(c, t) : edge; }, kv);
  };
  Eigen::VectorXd start(basis.size());
  start << extend_curve(current.delta, basis.delta_kv).coefficients,
      extend_curve(current.omega, basis.omega_kv).coefficients;
  if (perturb_key != 0) {
    rng::Stream rs(cfg.rng_seed, 0x7e57a7ULL, perturb_key);
    start = perturbed(start, basis.delta_kv.basis_count(), cfg.restart_perturb_scale, rs);
  }
  return fit_window(data, t_target, basis, start, cfg.nls, cfg.solver);
}

EheState initial_state(const objective::Dataset& data, const EheConfig& cfg) {
  cfg.validate();
  const SeedResult seed = seed_fit(data, cfg);

  // Promote the low-order seed onto the main basis over the same horizon;
  // that fit is the first accepted window.
  const Basis basis = main_basis(cfg, cfg.t0, 0);
  Eigen::VectorXd start(basis.size());
  start << bspline::rebasis(seed.model.delta, basis.delta_kv).coefficients,
      bspline::rebasis(seed.model.omega, basis.omega_kv).coefficients;
  WindowFit promoted = fit_window(data, cfg.t0, basis, start, cfg.nls, cfg.solver);

  EheState st;
  st.t_horizon = cfg.t0;
  st.model = promoted.model;
  st.extra_interior = 0;
  st.chi2_bound = cfg.chi2_bound;
  st.window_index = 0;
  st.diagnostics.seed_starts_used = seed.starts_used;
  st.diagnostics.total_nls_iterations += promoted.diag.iterations;
  st.diagnostics.residual_evals += promoted.diag.residual_evals;
  while (promoted.chi2 > st.chi2_bound) {
    st.chi2_bound *= cfg.bound_raise_factor;
    ++st.diagnostics.bound_raises;
  }
  st.trace.push_back(WindowTrace{cfg.t0, promoted.chi2,
                                 static_cast<int>(pack(promoted.model).size()), 0,
                                 st.chi2_bound, promoted.diag.iterations});
  return st;
}

EstimationResult run_from(EheState state, const objective::Dataset& data,
                          const EheConfig& cfg,
                          const std::function<void(const EheState&)>& on_window) {
  cfg.validate();
  const double t_last = data.t_off_s.back();

  while (state.t_horizon < t_last) {
    ++state.window_index;
    double tau_cur = cfg.tau;
    int extra = state.extra_interior;
    auto target_for = [&](double tau) {
      return (state.t_horizon + tau >= t_last) ? t_last : state.t_horizon + tau;
    };

    struct Attempt {
      WindowFit fit;
      double target;
      int extra;
      int rung;
    };
    std::vector<Attempt> attempts;
    auto try_attempt = [&](double tgt, int xtr, std::uint64_t key, bool flat) {
      Attempt a;
      a.target = tgt;
      a.extra = xtr;
      a.rung = static_cast<int>(attempts.size());
      try {
        a.fit = extend_and_refit(state.model, data, cfg, tgt, xtr, key, flat);
      } catch (const NumericError&) {
        a.fit.model = state.model;  // attempt failed numerically
        a.fit.chi2 = std::numeric_limits<double>::infinity();
      }
      attempts.push_back(std::move(a));
    };
    double target = target_for(tau_cur);
    try_attempt(target, extra, 0, false);

    int depth = 0;
    while (attempts.back().fit.chi2 > state.chi2_bound && depth < cfg.max_fallback_depth) {
      ++depth;
      std::uint64_t perturb_key = 0;
      bool flat = false;
      switch ((depth - 1) % 3) {
        case 0:  // shorter extension
          tau_cur *= 0.5;
          target = target_for(tau_cur);
          break;
        case 1:  // more basis functions
          extra += cfg.basis_increment;
          break;
        case 2:  // different starting point: flat extension, nudged
          flat = true;
          perturb_key = (static_cast<std::uint64_t>(state.window_index) << 8) +
                        static_cast<std::uint64_t>(depth);
          break;
      }
      attempts.push_back(
          {extend_and_refit(state.model, data, cfg, target, extra, perturb_key, flat),
           target, extra, depth});
    }

    // First attempt passing the bound wins, in ladder order; if none does,
    // raise the bound until the best one passes.
    const Attempt* accepted = nullptr;
    for (const auto& a : attempts) {
      if (a.fit.chi2 <= state.chi2_bound) {
        accepted = &a;
        break;
      }
    }
    if (!accepted) {
      const Attempt* best = &attempts.front();
      for (const auto& a : attempts)
        if (a.fit.chi2 < best->fit.chi2) best = &a;
      while (best->fit.chi2 > state.chi2_bound) {
        state.chi2_bound *= cfg.bound_raise_factor;
        ++state.diagnostics.bound_raises;
      }
      accepted = best;
    }

    state.model = accepted->fit.model;
    state.t_horizon = accepted->target;
    state.extra_interior = accepted->extra;
    for (const auto& a : attempts) {
      state.diagnostics.total_nls_iterations += a.fit.diag.iterations;
      state.diagnostics.residual_evals += a.fit.diag.residual_evals;
    }
    state.trace.push_back(WindowTrace{accepted->target, accepted->fit.chi2,
                                      static_cast<int>(pack(accepted->fit.model).size()),
                                      static_cast<int>(attempts.size()) - 1,
                                      state.chi2_bound, accepted->fit.diag.iterations});
    if (on_window) on_window(state);
  }

  EstimationResult out;
  canonicalize_omega(state.model);
  out.model = state.model;
  out.trace = std::move(state.trace);
  out.diagnostics = state.diagnostics;
  out.diagnostics.reached_full_horizon = true;

  const auto window = objective::window_for(data, t_last);
  const auto sim = qdyn::population_grid(out.model, data.t_off_s, data.delta_L_rad_s, cfg.solver);
  out.final_chi2 =
      objective::reduced_chi_squared(data, window, sim, static_cast<int>(pack(out.model).size()));
  return out;
}

EstimationResult run(const objective::Dataset& data, const EheConfig& cfg,
                     const std::function<void(const EheState&)>& on_window) {
  EheState st = initial_state(data, cfg);
  if (on_window) on_window(st);
  return run_from(std::move(st), data, cfg, on_window);
}

EstimationResult refit_full(const EstimationResult& result, const objective::Dataset& data,
                            const EheConfig& cfg, double perturb_scale, int basis_delta,
                            std::uint64_t perturb_key) {
  cfg.validate();
  const double t_last = data.t_off_s.back();
  if (result.model.t_max < t_last)
    throw ValidationError("refit_full: result does not cover the full horizon");

  Basis basis;
  if (basis_delta == 0) {
    basis.delta_kv = result.model.delta.knots;
    basis.omega_kv = result.model.omega.knots;
  } else {
    const int base_interior = result.model.delta.knots.basis_count() - cfg.main_order;
    const int interior = std::max(0, base_interior + basis_delta);
    basis.delta_kv = bspline::build_knots(0.0, result.model.t_max,
                                          cfg.main_order + interior, cfg.main_order);
    basis.omega_kv = basis.delta_kv;
  }

  Eigen::VectorXd start(basis.size());
  start << bspline::rebasis(result.model.delta, basis.delta_kv).coefficients,
      bspline::rebasis(result.model.omega, basis.omega_kv).coefficients;
  if (perturb_scale > 0.0) {
    rng::Stream rs(cfg.rng_seed, 0x9ef17ULL, perturb_key);
    start = perturbed(start, basis.delta_kv.basis_count(), perturb_scale, rs);
  }

  WindowFit fit = fit_window(data, t_last, basis, start, cfg.nls, cfg.solver);
  canonicalize_omega(fit.model);

  EstimationResult out;
  out.model = fit.model;
  out.trace = result.trace;
  out.trace.push_back(WindowTrace{t_last, fit.chi2, basis.size(), 0, cfg.chi2_bound,
                                  fit.diag.iterations});
  out.diagnostics = result.diagnostics;
  out.diagnostics.total_nls_iterations += fit.diag.iterations;
  out.diagnostics.residual_evals += fit.diag.residual_evals;
  out.diagnostics.reached_full_horizon = true;

  const auto window = objective::window_for(data, t_last);
  const auto sim = qdyn::population_grid(out.model, data.t_off_s, data.delta_L_rad_s, cfg.solver);
  out.final_chi2 =
      objective::reduced_chi_squared(data, window, sim, static_cast<int>(pack(out.model).size()));
  return out;
}

}  // namespace hamest::ehe
