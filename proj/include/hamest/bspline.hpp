#pragma once

#include <Eigen/Dense>
#include <functional>
#include <vector>

#include "hamest/errors.hpp"

namespace hamest::bspline {

// Non-decreasing knot sequence of length basis_count + order, clamped at both
// ends (first and last `order` knots coincide) with strictly increasing
// interior knots. Order k = polynomial degree + 1, k >= 1.
struct KnotVector {
  std::vector<double> knots;
  int order = 4;

  int basis_count() const { return static_cast<int>(knots.size()) - order; }
  double t_start() const { return knots.front(); }
  double t_end() const { return knots.back(); }
  void validate() const;
  bool operator==(const KnotVector&) const = default;
};

// Clamped knot vector spanning [t_start, t_end] with n_basis - order interior
// knots on a uniform partition.
KnotVector build_knots(double t_start, double t_end, int n_basis, int order);

// Single basis function B_{i,k}(t) by the order-recursion with the
// zero-when-equal-knots weight convention. The order-1 indicator is half-open
// except on the span ending at the final knot, which is closed, so the basis
// sums to one on the whole closed domain.
double eval_basis(const KnotVector& kv, int i, double t);

// The `order` potentially nonzero basis values at t (triangular scheme);
// values[j] belongs to basis function first_index + j. Agrees with eval_basis.
struct BasisRow {
  int first_index = 0;
  Eigen::VectorXd values;
};
BasisRow basis_row(const KnotVector& kv, double t);

struct SplineCurve {
  KnotVector knots;
  Eigen::VectorXd coefficients;  // one per basis function, rad/s

  double t_start() const { return knots.t_start(); }
  double t_end() const { return knots.t_end(); }
  void validate() const;
  static SplineCurve constant(const KnotVector& kv, double value);
};

// Sum of coefficient-weighted basis functions. Throws DomainError outside
// [t_start, t_end]; use extrapolate for that.
double eval_curve(const SplineCurve& curve, double t);

// d^n S / dt^n via the exact derivative spline (coefficient differencing).
double curve_derivative(const SplineCurve& curve, double t, int deriv_order = 1);

// Inside the domain this is eval_curve; outside it continues the curve as the
// straight line matching value and slope at the nearest endpoint.
double extrapolate(const SplineCurve& curve, double t);

struct WeightedSample {
  double t = 0.0;
  double value = 0.0;
  double weight = 1.0;
};

// Weighted linear least squares for the coefficients. Requires at least as
// many samples as basis functions and a full-rank collocation matrix; a basis
// function with no sample in its support is reported with its knot span.
SplineCurve fit_samples(const std::vector<WeightedSample>& samples, const KnotVector& kv);

// Dense least-squares projection of an arbitrary function onto the basis:
// samples_per_span midpoints per knot span plus both endpoints.
SplineCurve project_function(const std::function<double(double)>& f,
                             const KnotVector& kv, int samples_per_span = 10);

// Re-fit the curve onto new knots whose domain contains the old one, sampling
// eval_curve inside the old domain and extrapolate on any extension.
SplineCurve rebasis(const SplineCurve& curve, const KnotVector& new_knots,
                    int samples_per_span = 10);

}  // namespace hamest::bspline
