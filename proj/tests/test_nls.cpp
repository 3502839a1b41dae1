#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "hamest/nls.hpp"
#include "hamest/rng.hpp"

using namespace hamest;
using namespace hamest::ehe;

TEST_CASE("linear residuals solve to the exact solution") {
  Eigen::MatrixXd a(3, 3);
  a << 4, 1, 0, 1, 3, -1, 0, -1, 5;
  Eigen::VectorXd b(3);
  b << 1, -2, 0.5;
  const Eigen::VectorXd expect = a.colPivHouseholderQr().solve(b);

  auto fn = [&](const Eigen::VectorXd& p) -> Eigen::VectorXd { return a * p - b; };
  NlsSettings s;
  auto res = nls_solve(fn, Eigen::VectorXd::Zero(3), s);
  CHECK((res.params - expect).lpNorm<Eigen::Infinity>() <= 1e-8);
  CHECK(res.diag.final_cost <= 1e-16);
}

TEST_CASE("banana-valley residuals reach the curved minimum") {
  auto fn = [](const Eigen::VectorXd& p) -> Eigen::VectorXd {
    Eigen::VectorXd r(2);
    r[0] = 10.0 * (p[1] - p[0] * p[0]);
    r[1] = 1.0 - p[0];
    return r;
  };
  Eigen::VectorXd p0(2);
  p0 << -1.2, 1.0;
  NlsSettings s;
  s.max_iterations = 400;
  s.fd_abs = 1e-7;  // parameters are O(1), keep the absolute floor below scale
  s.xtol = 1e-14;
  s.ftol = 0.0;
  auto res = nls_solve(fn, p0, s);
  CHECK(std::abs(res.params[0] - 1.0) <= 1e-6);
  CHECK(std::abs(res.params[1] - 1.0) <= 1e-6);
}

TEST_CASE("starting at the optimum returns immediately") {
  Eigen::MatrixXd a(2, 2);
  a << 2, 0, 0, 3;
  Eigen::VectorXd b(2);
  b << 4, 9;
  auto fn = [&](const Eigen::VectorXd& p) -> Eigen::VectorXd { return a * p - b; };
  Eigen::VectorXd opt(2);
  opt << 2, 3;
  NlsSettings s;
  auto res = nls_solve(fn, opt, s);
  CHECK(res.diag.iterations <= 1);
  CHECK((res.params - opt).lpNorm<Eigen::Infinity>() == 0.0);
}

TEST_CASE("non-finite residuals at the start throw") {
  auto fn = [](const Eigen::VectorXd& p) -> Eigen::VectorXd {
    Eigen::VectorXd r(1);
    r[0] = std::sqrt(p[0]);  // NaN for negative start
    return r;
  };
  Eigen::VectorXd p0(1);
  p0 << -1.0;
  CHECK_THROWS_AS(nls_solve(fn, p0, NlsSettings{}), NumericError);
}

TEST_CASE("iteration limit is a status, not an exception") {
  auto fn = [](const Eigen::VectorXd& p) -> Eigen::VectorXd {
    Eigen::VectorXd r(2);
    r[0] = 10.0 * (p[1] - p[0] * p[0]);
    r[1] = 1.0 - p[0];
    return r;
  };
  Eigen::VectorXd p0(2);
  p0 << -1.2, 1.0;
  NlsSettings s;
  s.max_iterations = 2;
  auto res = nls_solve(fn, p0, s);
  CHECK(res.diag.status == NlsStatus::max_iterations);
  CHECK(res.diag.iterations == 2);
}

TEST_CASE("frozen Jacobian converges on a mildly nonlinear problem") {
  rng::Stream rs(7);
  Eigen::MatrixXd a(6, 3);
  for (int i = 0; i < 6; ++i)
    for (int j = 0; j < 3; ++j) a(i, j) = rs.uniform(-1.0, 1.0);
  Eigen::VectorXd target(6);
  for (int i = 0; i < 6; ++i) target[i] = rs.uniform(-0.5, 0.5);

  auto fn = [&](const Eigen::VectorXd& p) -> Eigen::VectorXd {
    Eigen::VectorXd r = a * p - target;
    r[0] += 0.05 * p[0] * p[0];
    r[3] += 0.05 * std::sin(p[1]);
    return r;
  };
  NlsSettings plain;
  plain.fd_abs = 1e-7;
  auto ref = nls_solve(fn, Eigen::VectorXd::Zero(3), plain);

  // Default stopping: a stationary point of the frozen normal equations,
  // second-order close to the true optimum.
  NlsSettings frozen = plain;
  frozen.frozen_jacobian = true;
  frozen.max_iterations = 300;
  auto res = nls_solve(fn, Eigen::VectorXd::Zero(3), frozen);
  CHECK((res.params - ref.params).lpNorm<Eigen::Infinity>() <= 2e-3);
  CHECK(res.diag.jacobian_evals <= ref.diag.jacobian_evals);

  // Forcing it past the cost plateau makes the stall-refresh cycle recover
  // the exact optimum.
  NlsSettings exact = frozen;
  exact.ftol = 0.0;
  exact.xtol = 0.0;
  exact.max_iterations = 400;
  auto res2 = nls_solve(fn, Eigen::VectorXd::Zero(3), exact);
  CHECK((res2.params - ref.params).lpNorm<Eigen::Infinity>() <= 1e-6);
}

TEST_CASE("user-supplied Jacobian is honored") {
  Eigen::MatrixXd a(2, 2);
  a << 3, 1, -1, 2;
  Eigen::VectorXd b(2);
  b << 1, 1;
  int calls = 0;
  auto fn = [&](const Eigen::VectorXd& p) -> Eigen::VectorXd { return a * p - b; };
  auto jac = [&](const Eigen::VectorXd&, const Eigen::VectorXd&) -> Eigen::MatrixXd {
    ++calls;
    return a;
  };
  auto res = nls_solve(fn, Eigen::VectorXd::Zero(2), NlsSettings{}, jac);
  CHECK(calls >= 1);
  CHECK((a * res.params - b).lpNorm<Eigen::Infinity>() <= 1e-10);
}
