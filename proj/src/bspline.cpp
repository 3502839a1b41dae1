#include "hamest/bspline.hpp"

#include <algorithm>
#include <cmath>
#include <string>

namespace hamest::bspline {

namespace {

std::string fmt(double x) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%g", x);
  return buf;
}

// B_{i,k}(t) over an explicit knot span view.
double basis_rec(const std::vector<double>& kn, int i, int k, double t) {
  if (k == 1) {
    const double a = kn[i], b = kn[i + 1];
    if (a <= t && t < b) return 1.0;
    // Closed right end only on the span reaching the final knot.
    if (t == b && b == kn.back() && a < b) return 1.0;
    return 0.0;
  }
  double acc = 0.0;
  const double d1 = kn[i + k - 1] - kn[i];
  if (d1 != 0.0) acc += (t - kn[i]) / d1 * basis_rec(kn, i, k - 1, t);
  const double d2 = kn[i + k] - kn[i + 1];
  const double w2 = (d2 != 0.0) ? (t - kn[i + 1]) / d2 : 0.0;
  acc += (1.0 - w2) * basis_rec(kn, i + 1, k - 1, t);
  return acc;
}

constexpr int kMaxOrder = 12;

// Span index s with kn[s] <= t < kn[s+1]; at or past the end, the last
// nonempty span. Valid spans for a clamped vector are [order-1, nb-1].
int find_span(const KnotVector& kv, double t) {
  const int nb = kv.basis_count();
  const auto& kn = kv.knots;
  if (t >= kn[nb]) return nb - 1;
  int s = static_cast<int>(std::upper_bound(kn.begin(), kn.end(), t) - kn.begin()) - 1;
  return std::clamp(s, kv.order - 1, nb - 1);
}

// Triangular scheme for the `order` nonzero basis values on span s.
void basis_values(const KnotVector& kv, int s, double t, double* out) {
  const int k = kv.order;
  const auto& kn = kv.knots;
  double left[kMaxOrder], right[kMaxOrder];
  out[0] = 1.0;
  for (int j = 1; j < k; ++j) {
    left[j] = t - kn[s + 1 - j];
    right[j] = kn[s + j] - t;
    double saved = 0.0;
    for (int r = 0; r < j; ++r) {
      const double den = right[r + 1] + left[j - r];
      const double tmp = out[r] / den;
      out[r] = saved + right[r + 1] * tmp;
      saved = left[j - r] * tmp;
    }
    out[j] = saved;
  }
}

}  // namespace

void KnotVector::validate() const {
  const int nb = basis_count();
  if (order < 1 || order > kMaxOrder)
    throw ValidationError("knot vector: order must be in [1, " +
                          std::to_string(kMaxOrder) + "]");
  if (nb < order)
    throw ValidationError("knot vector: need at least `order` basis functions, got " +
                          std::to_string(nb));
  for (std::size_t j = 1; j < knots.size(); ++j) {
    if (knots[j] < knots[j - 1])
      throw ValidationError("knot vector: knots must be non-decreasing");
  }
  if (!(t_end() > t_start())) throw ValidationError("knot vector: degenerate domain");
  for (int j = 0; j < order; ++j) {
    if (knots[j] != knots[0] || knots[knots.size() - 1 - j] != knots.back())
      throw ValidationError("knot vector: ends must be clamped (order-fold)");
  }
  // Spans touching interior knots must be nonempty so every evaluation path
  // stays division-safe: knots[order-1] < ... < knots[basis_count].
  for (int j = order - 1; j < nb; ++j) {
    if (!(knots[j] < knots[j + 1]))
      throw ValidationError("knot vector: repeated interior knot at t=" + fmt(knots[j]));
  }
}

KnotVector build_knots(double t_start, double t_end, int n_basis, int order) {
  if (!(t_end > t_start))
    throw ValidationError("build_knots: degenerate domain [" + fmt(t_start) + ", " +
                          fmt(t_end) + "]");
  if (order < 1 || n_basis < order)
    throw ValidationError("build_knots: require n_basis >= order >= 1, got n_basis=" +
                          std::to_string(n_basis) + " order=" + std::to_string(order));
  KnotVector kv;
  kv.order = order;
  kv.knots.resize(n_basis + order);
  const int m = n_basis - order;  // interior knots
  for (int j = 0; j < order; ++j) {
    kv.knots[j] = t_start;
    kv.knots[n_basis + order - 1 - j] = t_end;
  }
  for (int j = 1; j <= m; ++j)
    kv.knots[order - 1 + j] = t_start + (t_end - t_start) * j / (m + 1);
  return kv;
}

double eval_basis(const KnotVector& kv, int i, double t) {
  if (i < 0 || i >= kv.basis_count())
    throw ValidationError("eval_basis: index " + std::to_string(i) + " out of range [0, " +
                          std::to_string(kv.basis_count() - 1) + "]");
  if (!std::isfinite(t)) throw ValidationError("eval_basis: t must be finite");
  return basis_rec(kv.knots, i, kv.order, t);
}

BasisRow basis_row(const KnotVector& kv, double t) {
  const int s = find_span(kv, t);
  BasisRow row;
  row.first_index = s - kv.order + 1;
  row.values.resize(kv.order);
  basis_values(kv, s, t, row.values.data());
  return row;
}

void SplineCurve::validate() const {
  knots.validate();
  if (coefficients.size() != knots.basis_count())
    throw ValidationError("spline curve: coefficient count " +
                          std::to_string(coefficients.size()) + " != basis count " +
                          std::to_string(knots.basis_count()));
}

SplineCurve SplineCurve::constant(const KnotVector& kv, double value) {
  SplineCurve c;
  c.knots = kv;
  c.coefficients = Eigen::VectorXd::Constant(kv.basis_count(), value);
  return c;
}

double eval_curve(const SplineCurve& curve, double t) {
  if (t < curve.t_start() || t > curve.t_end())
    throw DomainError("eval_curve: t=" + fmt(t) + " outside [" + fmt(curve.t_start()) +
                      ", " + fmt(curve.t_end()) + "]");
  const int s = find_span(curve.knots, t);
  double vals[kMaxOrder];
  basis_values(curve.knots, s, t, vals);
  const int first = s - curve.knots.order + 1;
  double acc = 0.0;
  for (int j = 0; j < curve.knots.order; ++j)
    acc += curve.coefficients[first + j] * vals[j];
  return acc;
}

double curve_derivative(const SplineCurve& curve, double t, int deriv_order) {
  if (deriv_order < 0) throw ValidationError("curve_derivative: negative order");
  if (deriv_order == 0) return eval_curve(curve, t);
  const int k = curve.knots.order;
  if (k == 1) return 0.0;
  const auto& kn = curve.knots.knots;
  const int nb = curve.knots.basis_count();

  // Derivative spline: order k-1 over the knot vector stripped of its first
  // and last knot, coefficients by first differences.
  SplineCurve d;
  d.knots.order = k - 1;
  d.knots.knots.assign(kn.begin() + 1, kn.end() - 1);
  d.coefficients = Eigen::VectorXd::Zero(nb - 1);
  for (int i = 1; i < nb; ++i) {
    const double den = kn[i + k - 1] - kn[i];
    d.coefficients[i - 1] =
        (den != 0.0) ? (k - 1) * (curve.coefficients[i] - curve.coefficients[i - 1]) / den
                     : 0.0;
  }
  return curve_derivative(d, t, deriv_order - 1);
}

double extrapolate(const SplineCurve& curve, double t) {
  const double a = curve.t_start(), b = curve.t_end();
  if (t >= a && t <= b) return eval_curve(curve, t);
  const double e = (t < a) ? a : b;
  return eval_curve(curve, e) + curve_derivative(curve, e, 1) * (t - e);
}

SplineCurve fit_samples(const std::vector<WeightedSample>& samples, const KnotVector& kv) {
  kv.validate();
  const int nb = kv.basis_count();
  const int m = static_cast<int>(samples.size());
  if (m < nb)
    throw ValidationError("fit_samples: " + std::to_string(m) + " samples for " +
                          std::to_string(nb) + " basis functions");

  Eigen::MatrixXd a = Eigen::MatrixXd::Zero(m, nb);
  Eigen::VectorXd b(m);
  for (int j = 0; j < m; ++j) {
    const auto& s = samples[j];
    if (s.t < kv.t_start() || s.t > kv.t_end())
      throw ValidationError("fit_samples: sample t=" + fmt(s.t) + " outside knot domain");
    if (s.weight < 0.0) throw ValidationError("fit_samples: negative weight");
    const double w = std::sqrt(s.weight);
    const BasisRow row = basis_row(kv, s.t);
    for (int q = 0; q < kv.order; ++q) a(j, row.first_index + q) = w * row.values[q];
    b[j] = w * s.value;
  }

  for (int i = 0; i < nb; ++i) {
    if (a.col(i).lpNorm<Eigen::Infinity>() == 0.0)
      throw ValidationError("fit_samples: no sample support for basis " + std::to_string(i) +
                            " on span [" + fmt(kv.knots[i]) + ", " +
                            fmt(kv.knots[i + kv.order]) + "]");
  }

  Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(a);
  if (qr.rank() < nb)
    throw ValidationError("fit_samples: rank-deficient collocation matrix (rank " +
                          std::to_string(qr.rank()) + " of " + std::to_string(nb) + ")");
  SplineCurve c;
  c.knots = kv;
  c.coefficients = qr.solve(b);
  return c;
}

SplineCurve project_function(const std::function<double(double)>& f,
                             const KnotVector& kv, int samples_per_span) {
  kv.validate();
  if (samples_per_span < 1)
    throw ValidationError("project_function: samples_per_span >= 1");
  const auto& kn = kv.knots;
  std::vector<WeightedSample> samples;
  samples.push_back({kv.t_start(), f(kv.t_start()), 1.0});
  for (std::size_t s = 0; s + 1 < kn.size(); ++s) {
    const double lo = kn[s], hi = kn[s + 1];
    if (!(hi > lo)) continue;
    for (int q = 0; q < samples_per_span; ++q) {
      const double t = lo + (hi - lo) * (q + 0.5) / samples_per_span;
      samples.push_back({t, f(t), 1.0});
    }
  }
  samples.push_back({kv.t_end(), f(kv.t_end()), 1.0});
  return fit_samples(samples, kv);
}

SplineCurve rebasis(const SplineCurve& curve, const KnotVector& new_knots,
                    int samples_per_span) {
  new_knots.validate();
  curve.validate();
  if (new_knots.t_start() > curve.t_start() || new_knots.t_end() < curve.t_end())
    throw ValidationError("rebasis: new domain must contain the old domain");
  return project_function([&](double t) { return extrapolate(curve, t); }, new_knots,
                          samples_per_span);
}

}  // namespace hamest::bspline
