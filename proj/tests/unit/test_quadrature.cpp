#include <doctest.h>

#include <cmath>

#include "icbp/quadrature.hpp"
#include "test_support.hpp"

using namespace icbp;
using namespace icbp::testing;

TEST_CASE("Gauss-Hermite rule integrates polynomials exactly") {
  for (int order : {1, 3, 5, 9, 12}) {
    const auto rule = gauss_hermite_rule(order);
    REQUIRE(rule.nodes.size() == static_cast<std::size_t>(order));
    // E[xi^{2k}] = (2k-1)!!
    double double_fact = 1.0;
    for (int k = 0; 2 * k <= 2 * order - 1; ++k) {
      if (k > 0) double_fact *= 2 * k - 1;
      double even = 0.0, odd = 0.0;
      for (int p = 0; p < order; ++p) {
        even += rule.weights[p] * std::pow(rule.nodes[p], 2 * k);
        odd += rule.weights[p] * std::pow(rule.nodes[p], 2 * k + 1);
      }
      if (2 * k > 2 * order - 1) break;
      CHECK(even == doctest::Approx(double_fact).epsilon(1e-11));
      CHECK(std::abs(odd) < 1e-9 * double_fact);
    }
  }
  CHECK_THROWS_AS(gauss_hermite_rule(0), ConfigError);
}

TEST_CASE("node sets reproduce the covariance") {
  RngStream rng(1, {2});
  for (int trial = 0; trial < 10; ++trial) {
    const Matrix cov = random_psd(rng, 3);
    const GaussianNodes nodes(cov, {});
    Matrix emp = Matrix::Zero(3, 3);
    Vector mean = Vector::Zero(3);
    for (std::size_t k = 0; k < nodes.size(); ++k) {
      const double w = std::exp(nodes.log_weights()[k]);
      mean += w * nodes.offsets().col(k);
      emp += w * nodes.offsets().col(k) * nodes.offsets().col(k).transpose();
    }
    CHECK(mean.norm() < 1e-12);
    CHECK((emp - cov).norm() < 1e-10 * (1.0 + cov.norm()));
    CHECK_FALSE(nodes.monte_carlo());
  }
}

TEST_CASE("rank-deficient covariance integrates only the active directions") {
  Matrix cov = Matrix::Zero(3, 3);
  cov(0, 0) = 2.0;
  const GaussianNodes nodes(cov, {});
  CHECK(nodes.effective_dim() == 1);
  CHECK(nodes.size() == 9);
  const GaussianNodes point(Matrix::Zero(2, 2), {});
  CHECK(point.size() == 1);
  CHECK(point.offsets().norm() == 0.0);
}

TEST_CASE("Monte Carlo fallback above the tensor cap") {
  const GaussianNodes nodes(Matrix::Identity(9, 9), {});
  CHECK(nodes.monte_carlo());
  CHECK(nodes.size() == 4096);
  Matrix emp = Matrix::Zero(9, 9);
  for (std::size_t k = 0; k < nodes.size(); ++k) {
    emp += std::exp(nodes.log_weights()[k]) * nodes.offsets().col(k) * nodes.offsets().col(k).transpose();
  }
  CHECK((emp - Matrix::Identity(9, 9)).cwiseAbs().maxCoeff() < 0.1);
  const GaussianNodes again(Matrix::Identity(9, 9), {});
  CHECK((again.offsets() - nodes.offsets()).norm() == 0.0);
}

TEST_CASE("PSD clamp") {
  Matrix m(2, 2);
  m << 1.0, 0.0, 0.0, -0.5;
  bool clamped = false;
  const Matrix c = clamp_psd(m, &clamped);
  CHECK(clamped);
  CHECK(c(1, 1) == doctest::Approx(0.0));
  CHECK(c(0, 0) == doctest::Approx(1.0));
  clamped = false;
  clamp_psd(Matrix::Identity(2, 2), &clamped);
  CHECK_FALSE(clamped);
}

TEST_CASE("log-sum-exp") {
  const double v[3] = {1000.0, 1000.0, -INFINITY};
  CHECK(log_sum_exp(v, 3) == doctest::Approx(1000.0 + std::log(2.0)));
}
