#include "hamest/objective.hpp"

#include <algorithm>
#include <cmath>

namespace hamest::objective {

Dataset make_dataset(std::vector<double> t_off_s, std::vector<double> delta_L_rad_s,
                     Eigen::MatrixXi counts, int shots,
                     std::map<std::string, std::string> meta) {
  if (shots < 1) throw ValidationError("dataset: shots >= 1");
  if (t_off_s.empty() || delta_L_rad_s.empty()) throw ValidationError("dataset: empty axis");
  if (counts.rows() != static_cast<Eigen::Index>(t_off_s.size()) ||
      counts.cols() != static_cast<Eigen::Index>(delta_L_rad_s.size()))
    throw ValidationError("dataset: counts dims do not match axes");
  for (std::size_t i = 0; i + 1 < t_off_s.size(); ++i) {
    if (t_off_s[i + 1] < t_off_s[i])
      throw ValidationError("dataset: t_off must be sorted ascending");
  }

  Dataset d;
  d.t_off_s = std::move(t_off_s);
  d.delta_L_rad_s = std::move(delta_L_rad_s);
  d.counts = std::move(counts);
  d.shots = shots;
  d.meta = std::move(meta);
  d.sigma_z.resize(d.counts.rows(), d.counts.cols());
  d.sigma.resize(d.counts.rows(), d.counts.cols());
  for (int i = 0; i < d.counts.rows(); ++i) {
    for (int j = 0; j < d.counts.cols(); ++j) {
      const int c = d.counts(i, j);
      if (c < 0 || c > shots)
        throw ValidationError("dataset: count outside [0, shots] at (" +
                              std::to_string(i) + ", " + std::to_string(j) + ")");
      d.sigma_z(i, j) = 1.0 - 2.0 * static_cast<double>(c) / shots;
      d.sigma(i, j) = projection_sigma(c, shots);
    }
  }
  return d;
}

FitWindow window_for(const Dataset& data, double t_horizon) {
  int rows = 0;
  while (rows < data.rows() && data.t_off_s[rows] <= t_horizon) ++rows;
  if (rows == 0) throw ValidationError("fit window: no rows at or below the horizon");
  return FitWindow{t_horizon, rows};
}

double projection_sigma(int count, int shots) {
  if (shots < 1 || count < 0 || count > shots)
    throw ValidationError("projection_sigma: count outside [0, shots]");
  const double lo = 0.5 / shots;
  const double p = std::clamp(static_cast<double>(count) / shots, lo, 1.0 - lo);
  return 2.0 * std::sqrt(p * (1.0 - p) / shots);
}

Eigen::VectorXd residual_vector(const Dataset& data, const FitWindow& window,
                                const Eigen::MatrixXd& sim) {
  if (window.rows < 1 || window.rows > data.rows())
    throw ValidationError("residual_vector: bad window");
  if (sim.rows() != window.rows || sim.cols() != data.cols())
    throw ValidationError("residual_vector: sim dims do not match window");
  Eigen::VectorXd r(window.rows * data.cols());
  for (int i = 0; i < window.rows; ++i) {
    for (int j = 0; j < data.cols(); ++j)
      r[i * data.cols() + j] = (data.sigma_z(i, j) - sim(i, j)) / data.sigma(i, j);
  }
  return r;
}

double reduced_chi_squared(const Dataset& data, const FitWindow& window,
                           const Eigen::MatrixXd& sim, int n_params) {
  const Eigen::VectorXd r = residual_vector(data, window, sim);
  const long n = r.size();
  const long nu = n - n_params - 1;
  if (nu <= 0)
    throw ValidationError("reduced_chi_squared: non-positive degrees of freedom (N=" +
                          std::to_string(n) + ", n_params=" + std::to_string(n_params) + ")");
  return r.squaredNorm() / static_cast<double>(nu);
}

}  // namespace hamest::objective
