#include <cmath>

#include "doctest.h"
#include "laplab/error.hpp"
#include "laplab/optimize.hpp"

using namespace laplab;

namespace {

Objective quadratic(std::vector<double> center, std::vector<double> scale) {
  Objective obj;
  obj.dimension = center.size();
  obj.tag = "quadratic";
  obj.evaluate = [center, scale](std::span<const double> x, std::span<double> g) {
    double v = 0;
    for (std::size_t i = 0; i < x.size(); ++i) {
      const double d = x[i] - center[i];
      v -= scale[i] * d * d;
      g[i] = -2 * scale[i] * d;
    }
    return v;
  };
  return obj;
}

// Average Bernoulli log-likelihood with energy theta on state 1.
Objective bernoulli(double k, double n) {
  Objective obj;
  obj.dimension = 1;
  obj.tag = "bernoulli";
  obj.evaluate = [k, n](std::span<const double> x, std::span<double> g) {
    const double t = x[0];
    const double p1 = 1 / (1 + std::exp(t));
    g[0] = -(k / n) + p1;
    return -(k / n) * t - std::log1p(std::exp(-t));
  };
  return obj;
}

}  // namespace

TEST_CASE("quadratic maximum") {
  const std::vector<double> center{1.5, -2.0, 0.25, 3.0};
  const auto res = maximize(quadratic(center, {1, 10, 0.1, 100}), std::vector<double>(4, 0.0));
  CHECK(res.report.converged);
  for (std::size_t i = 0; i < center.size(); ++i) CHECK(std::abs(res.x[i] - center[i]) < 1e-8);
  CHECK(res.report.grad_norm < 1e-8);
}

TEST_CASE("bernoulli closed form") {
  const double k = 37, n = 100;
  const auto res = maximize(bernoulli(k, n), {0.0});
  CHECK(res.report.converged);
  CHECK(std::abs(res.x[0] + std::log(k / (n - k))) < 1e-8);
}

TEST_CASE("accepted steps never decrease the objective") {
  std::vector<double> values;
  OptConfig cfg;
  cfg.observer = [&](int, double v) { values.push_back(v); };
  maximize(quadratic({4, -3, 2}, {0.01, 1, 50}), {0, 0, 0}, cfg);
  REQUIRE(values.size() > 1);
  for (std::size_t i = 1; i < values.size(); ++i) CHECK(values[i] >= values[i - 1]);
}

TEST_CASE("degenerate inputs") {
  Objective empty;
  empty.evaluate = [](std::span<const double>, std::span<double>) { return 0.0; };
  const auto res = maximize(empty, {});
  CHECK(res.x.empty());
  CHECK(res.report.converged);

  OptConfig tight;
  tight.max_iters = 1;
  const auto capped = maximize(quadratic({1, 2}, {1, 1000}), {0, 0}, tight);
  CHECK_FALSE(capped.report.converged);
  CHECK(capped.report.iterations == 1);

  Objective nan;
  nan.dimension = 1;
  nan.evaluate = [](std::span<const double>, std::span<double> g) {
    g[0] = 1;
    return std::nan("");
  };
  CHECK_THROWS_AS(maximize(nan, {0.0}), NonFiniteError);
  CHECK_THROWS(maximize(quadratic({1}, {1}), {std::nan("")}));
  CHECK_THROWS(maximize(quadratic({1}, {1}), {0.0, 1.0}));
  OptConfig bad;
  bad.grad_tol = 0;
  CHECK_THROWS(maximize(quadratic({1}, {1}), {0.0}, bad));
}

TEST_CASE("finite-difference gradient check") {
  Objective linear;
  linear.dimension = 3;
  linear.evaluate = [](std::span<const double> x, std::span<double> g) {
    g[0] = 2;
    g[1] = -1;
    g[2] = 0.5;
    return 2 * x[0] - x[1] + 0.5 * x[2];
  };
  const std::vector<double> at{0.3, -1.2, 4};
  CHECK(check_gradient(linear, at) < 1e-10);

  Objective constant;
  constant.dimension = 2;
  constant.evaluate = [](std::span<const double>, std::span<double> g) {
    g[0] = g[1] = 0;
    return 7.0;
  };
  CHECK(check_gradient(constant, std::span<const double>(at).subspan(0, 2)) == 0.0);
  CHECK(check_gradient(bernoulli(3, 10), std::vector<double>{0.4}) < 1e-8);
  CHECK_THROWS(check_gradient(linear, at, 0.0));

  Objective wrong = linear;
  wrong.evaluate = [](std::span<const double> x, std::span<double> g) {
    g[0] = g[1] = g[2] = 0;
    return x[0];
  };
  CHECK(check_gradient(wrong, at) > 0.5);
}

TEST_CASE("ridge penalty") {
  auto obj = with_ridge(bernoulli(0, 10), 0.5);
  const auto res = maximize(obj, {0.0});
  CHECK(res.report.converged);
  CHECK(std::isfinite(res.x[0]));
  CHECK(check_gradient(obj, std::vector<double>{1.3}) < 1e-8);
  CHECK_THROWS(with_ridge(bernoulli(1, 2), -1));
}
