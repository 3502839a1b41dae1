#pragma once

#include <array>
#include <cmath>
#include <cstdint>
#include <span>

#include "hamest/errors.hpp"

namespace hamest {

struct OdeOptions {
  double rel_tol = 1e-9;
  double abs_tol = 1e-12;
  double max_step = 0.0;  // 0 = uncapped
  std::int64_t max_steps = 200000000;
};

namespace detail {

template <int N>
double error_norm(const std::array<double, N>& err, const std::array<double, N>& y0,
                  const std::array<double, N>& y1, double atol, double rtol) {
  double acc = 0.0;
  for (int i = 0; i < N; ++i) {
    const double sc = atol + rtol * std::max(std::abs(y0[i]), std::abs(y1[i]));
    const double q = err[i] / sc;
    acc += q * q;
  }
  return std::sqrt(acc / N);
}

}  // namespace detail

// Dormand-Prince 5(4) with FSAL. Step endpoints are forced onto every sample
// time, so emitted states carry full integration accuracy and the sampled
// trajectory of one call is a single continuous solution. emit(index, t, y)
// fires once per sample in ascending order. Fully deterministic: the step
// sequence is a pure function of (f, y0, samples, options).
template <int N, class Rhs, class Emit>
void integrate_dopri5(Rhs&& f, std::array<double, N>& y, double t0,
                      std::span<const double> samples, const OdeOptions& opt,
                      Emit&& emit) {
  using V = std::array<double, N>;
  if (samples.empty()) return;
  if (!(opt.rel_tol > 0.0) || !(opt.abs_tol > 0.0))
    throw ValidationError("ode: tolerances must be positive");

  const double t_end = samples.back();
  double t = t0;
  std::size_t next = 0;
  // Samples at or before the start are the initial state.
  while (next < samples.size() && samples[next] <= t0) {
    emit(next, t0, y);
    ++next;
  }
  if (next == samples.size()) return;

  V k1, k2, k3, k4, k5, k6, k7, ytmp, y5;
  f(t, y, k1);

  const double span = t_end - t0;
  double h;
  {
    // Hairer-style initial step guess.
    double d0 = detail::error_norm<N>(y, y, y, opt.abs_tol, opt.rel_tol);
    double d1 = detail::error_norm<N>(k1, y, y, opt.abs_tol, opt.rel_tol);
    double h0 = (d0 < 1e-5 || d1 < 1e-5) ? 1e-6 * span : 0.01 * (d0 / d1);
    h0 = std::min(h0, span);
    for (int i = 0; i < N; ++i) ytmp[i] = y[i] + h0 * k1[i];
    f(t + h0, ytmp, k2);
    V df;
    for (int i = 0; i < N; ++i) df[i] = k2[i] - k1[i];
    double d2 = detail::error_norm<N>(df, y, y, opt.abs_tol, opt.rel_tol) / h0;
    double dm = std::max(d1, d2);
    double h1 = (dm <= 1e-15) ? std::max(1e-6 * span, h0 * 1e-3)
                              : std::pow(0.01 / dm, 0.2);
    h = std::min({100.0 * h0, h1, span});
  }
  if (opt.max_step > 0.0) h = std::min(h, opt.max_step);

  std::int64_t steps = 0;
  while (next < samples.size()) {
    const double t_target = samples[next];
    double h_try = h;
    bool truncated = false;
    if (t + h_try >= t_target) {
      h_try = t_target - t;
      truncated = true;
    }
    const double h_floor = 16.0 * 2.220446049250313e-16 * std::max(std::abs(t), std::abs(span));
    if (h_try <= h_floor)
      throw NumericError("ode: step size underflow at t=" + std::to_string(t));
    if (++steps > opt.max_steps) throw NumericError("ode: step budget exhausted");

    // Stage evaluations (classic DOPRI5 tableau).
    for (int i = 0; i < N; ++i) ytmp[i] = y[i] + h_try * (0.2 * k1[i]);
    f(t + 0.2 * h_try, ytmp, k2);
    for (int i = 0; i < N; ++i)
      ytmp[i] = y[i] + h_try * (3.0 / 40.0 * k1[i] + 9.0 / 40.0 * k2[i]);
    f(t + 0.3 * h_try, ytmp, k3);
    for (int i = 0; i < N; ++i)
      ytmp[i] = y[i] + h_try * (44.0 / 45.0 * k1[i] - 56.0 / 15.0 * k2[i] + 32.0 / 9.0 * k3[i]);
    f(t + 0.8 * h_try, ytmp, k4);
    for (int i = 0; i < N; ++i)
      ytmp[i] = y[i] + h_try * (19372.0 / 6561.0 * k1[i] - 25360.0 / 2187.0 * k2[i] +
                                64448.0 / 6561.0 * k3[i] - 212.0 / 729.0 * k4[i]);
    f(t + 8.0 / 9.0 * h_try, ytmp, k5);
    for (int i = 0; i < N; ++i)
      ytmp[i] = y[i] + h_try * (9017.0 / 3168.0 * k1[i] - 355.0 / 33.0 * k2[i] +
                                46732.0 / 5247.0 * k3[i] + 49.0 / 176.0 * k4[i] -
                                5103.0 / 18656.0 * k5[i]);
    f(t + h_try, ytmp, k6);
    for (int i = 0; i < N; ++i)
      y5[i] = y[i] + h_try * (35.0 / 384.0 * k1[i] + 500.0 / 1113.0 * k3[i] +
                              125.0 / 192.0 * k4[i] - 2187.0 / 6784.0 * k5[i] +
                              11.0 / 84.0 * k6[i]);
    f(t + h_try, y5, k7);

    V err;
    for (int i = 0; i < N; ++i)
      err[i] = h_try * (71.0 / 57600.0 * k1[i] - 71.0 / 16695.0 * k3[i] +
                        71.0 / 1920.0 * k4[i] - 17253.0 / 339200.0 * k5[i] +
                        22.0 / 525.0 * k6[i] - 1.0 / 40.0 * k7[i]);
    const double en = detail::error_norm<N>(err, y, y5, opt.abs_tol, opt.rel_tol);
    const double fac =
        (en == 0.0) ? 5.0 : std::min(5.0, std::max(0.2, 0.9 * std::pow(en, -0.2)));

    if (en <= 1.0) {
      t = truncated ? t_target : t + h_try;
      y = y5;
      k1 = k7;  // FSAL
      while (next < samples.size() && samples[next] <= t) {
        emit(next, t, y);
        ++next;
      }
      // A step truncated to land on a sample says nothing about the cruise
      // step size, so keep it unless the controller wants more anyway.
      h = truncated ? std::max(h, h_try * fac) : h_try * fac;
    } else {
      h = h_try * std::max(0.2, 0.9 * std::pow(en, -0.2));
    }
    if (opt.max_step > 0.0) h = std::min(h, opt.max_step);
  }
}

}  // namespace hamest
