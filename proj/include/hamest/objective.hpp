#pragma once

#include <Eigen/Dense>
#include <map>
#include <string>
#include <vector>

#include "hamest/errors.hpp"

namespace hamest::objective {

// Measurement records over the (t_off, delta_L) grid. sigma_z and sigma are
// derived once at construction and the whole object is immutable afterwards.
struct Dataset {
  std::vector<double> t_off_s;
  std::vector<double> delta_L_rad_s;
  Eigen::MatrixXi counts;  // |1> outcomes, rows = t_off, cols = delta_L
  int shots = 0;
  std::map<std::string, std::string> meta;

  Eigen::MatrixXd sigma_z;  // 1 - 2 counts/shots
  Eigen::MatrixXd sigma;    // projection-noise weight per cell

  int rows() const { return static_cast<int>(t_off_s.size()); }
  int cols() const { return static_cast<int>(delta_L_rad_s.size()); }
};

Dataset make_dataset(std::vector<double> t_off_s, std::vector<double> delta_L_rad_s,
                     Eigen::MatrixXi counts, int shots,
                     std::map<std::string, std::string> meta = {});

// Rows with t_off <= t_horizon; all delta_L columns.
struct FitWindow {
  double t_horizon = 0.0;
  int rows = 0;
};
FitWindow window_for(const Dataset& data, double t_horizon);

// Projection-noise standard error on <sigma_z>: 2 sqrt(p(1-p)/shots) with the
// success fraction clamped half a shot away from 0 and 1 so the weight never
// vanishes.
double projection_sigma(int count, int shots);

// Flattened (meas - sim)/sigma over the window, row-major (t_off outer).
Eigen::VectorXd residual_vector(const Dataset& data, const FitWindow& window,
                                const Eigen::MatrixXd& sim);

// (1/nu) sum of squared weighted residuals, nu = N - n_params - 1.
double reduced_chi_squared(const Dataset& data, const FitWindow& window,
                           const Eigen::MatrixXd& sim, int n_params);

}  // namespace hamest::objective
