#include "hamest/qdyn.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "hamest/parallel.hpp"
#include "hamest/rk45.hpp"
#include "hamest/rng.hpp"

namespace hamest::qdyn {

namespace {

using State = std::array<double, 4>;  // (Re c0, Im c0, Re c1, Im c1)

struct SchroedingerRhs {
  const HamiltonianModel& model;
  double delta_L;

  void operator()(double t, const State& y, State& dy) const {
    // Stage times can overshoot the domain edge by rounding; the curves are
    // defined on the closed domain, so clamp.
    const double tc = std::clamp(t, 0.0, model.t_max);
    const double half_d = 0.5 * (bspline::eval_curve(model.delta, tc) + delta_L);
    const double half_o = 0.5 * bspline::eval_curve(model.omega, tc);
    dy[0] = half_d * y[1] - half_o * y[3];
    dy[1] = -half_d * y[0] + half_o * y[2];
    dy[2] = -half_o * y[1] - half_d * y[3];
    dy[3] = half_o * y[0] + half_d * y[2];
  }
};

OdeOptions ode_options(const SolverConfig& cfg) {
  OdeOptions opt;
  opt.rel_tol = cfg.rel_tol;
  opt.abs_tol = cfg.abs_tol;
  opt.max_step = cfg.max_step;
  return opt;
}

QubitState normalized_state(const State& y, double norm_tol, double t) {
  const double n2 = y[0] * y[0] + y[1] * y[1] + y[2] * y[2] + y[3] * y[3];
  if (std::abs(n2 - 1.0) > norm_tol)
    throw NumericError("propagate: norm drift " + std::to_string(n2 - 1.0) + " at t=" +
                       std::to_string(t) + "; tighten solver tolerances");
  const double inv = 1.0 / std::sqrt(n2);
  return QubitState{{y[0] * inv, y[1] * inv}, {y[2] * inv, y[3] * inv}};
}

}  // namespace

void HamiltonianModel::validate() const {
  delta.validate();
  omega.validate();
  if (delta.t_start() != 0.0 || omega.t_start() != 0.0)
    throw ValidationError("model: curves must start at t=0");
  if (delta.t_end() != omega.t_end())
    throw ValidationError("model: delta and omega domains differ");
  if (!(t_max > 0.0) || t_max != delta.t_end())
    throw ValidationError("model: t_max must equal the curve domain end");
}

HamiltonianModel make_model(bspline::SplineCurve delta, bspline::SplineCurve omega) {
  HamiltonianModel m;
  m.t_max = delta.t_end();
  m.delta = std::move(delta);
  m.omega = std::move(omega);
  m.validate();
  return m;
}

QubitState propagate(const HamiltonianModel& model, double delta_L, double t_off,
                     const SolverConfig& cfg) {
  model.validate();
  if (!(cfg.rel_tol > 0.0) || !(cfg.abs_tol > 0.0))
    throw ValidationError("propagate: tolerances must be positive");
  if (t_off < 0.0 || t_off > model.t_max)
    throw ValidationError("propagate: t_off outside [0, t_max]");

  State y{1.0, 0.0, 0.0, 0.0};
  if (t_off == 0.0) return QubitState{};
  const double samples[1] = {t_off};
  integrate_dopri5<4>(SchroedingerRhs{model, delta_L}, y, 0.0,
                      std::span<const double>(samples, 1), ode_options(cfg),
                      [](std::size_t, double, const State&) {});
  return normalized_state(y, cfg.norm_tol, t_off);
}

double expectation_sigma_z(const QubitState& state) {
  return std::norm(state.c0) - std::norm(state.c1);
}

Eigen::MatrixXd population_grid(const HamiltonianModel& model,
                                const std::vector<double>& t_off_list,
                                const std::vector<double>& delta_L_list,
                                const SolverConfig& cfg) {
  model.validate();
  if (t_off_list.empty() || delta_L_list.empty())
    throw ValidationError("population_grid: empty axis");
  for (std::size_t i = 0; i + 1 < t_off_list.size(); ++i) {
    if (t_off_list[i + 1] < t_off_list[i])
      throw ValidationError("population_grid: t_off list must be sorted ascending");
  }
  if (t_off_list.front() < 0.0 || t_off_list.back() > model.t_max)
    throw ValidationError("population_grid: t_off outside [0, t_max]");

  const int rows = static_cast<int>(t_off_list.size());
  const int cols = static_cast<int>(delta_L_list.size());
  Eigen::MatrixXd grid(rows, cols);

  parallel_for(static_cast<std::size_t>(cols), [&](std::size_t j) {
    State y{1.0, 0.0, 0.0, 0.0};
    SchroedingerRhs rhs{model, delta_L_list[j]};
    integrate_dopri5<4>(
        rhs, y, 0.0, std::span<const double>(t_off_list.data(), t_off_list.size()),
        ode_options(cfg), [&](std::size_t i, double t, const State& ys) {
          grid(static_cast<int>(i), static_cast<int>(j)) =
              expectation_sigma_z(normalized_state(ys, cfg.norm_tol, t));
        });
  });
  return grid;
}

Eigen::MatrixXi sample_measurements(const Eigen::MatrixXd& sigma_z_grid, int shots,
                                    std::uint64_t seed) {
  if (shots < 1) throw ValidationError("sample_measurements: shots >= 1");
  Eigen::MatrixXi counts(sigma_z_grid.rows(), sigma_z_grid.cols());
  for (int i = 0; i < sigma_z_grid.rows(); ++i) {
    for (int j = 0; j < sigma_z_grid.cols(); ++j) {
      const double sz = sigma_z_grid(i, j);
      if (sz < -1.0 - 1e-9 || sz > 1.0 + 1e-9)
        throw ValidationError("sample_measurements: <sigma_z> outside [-1, 1]");
      const double p1 = std::clamp(0.5 * (1.0 - sz), 0.0, 1.0);
      rng::Stream cell(seed, static_cast<std::uint64_t>(i), static_cast<std::uint64_t>(j));
      counts(i, j) = cell.binomial(shots, p1);
    }
  }
  return counts;
}

}  // namespace hamest::qdyn
