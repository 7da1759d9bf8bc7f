#include "icbp/quadrature.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "icbp/rng.hpp"

namespace icbp {

GaussHermiteRule gauss_hermite_rule(int order) {
  if (order < 1 || order > 128) throw ConfigError("quadrature order must be in [1, 128]");
  // Golub-Welsch on the Jacobi matrix of the monic probabilists' Hermite
  // recurrence He_{k+1} = x He_k - k He_{k-1}.
  Matrix jacobi = Matrix::Zero(order, order);
  for (int k = 1; k < order; ++k) {
    jacobi(k, k - 1) = jacobi(k - 1, k) = std::sqrt(static_cast<double>(k));
  }
  Eigen::SelfAdjointEigenSolver<Matrix> eig(jacobi);
  GaussHermiteRule rule;
  rule.nodes.resize(static_cast<std::size_t>(order));
  rule.weights.resize(static_cast<std::size_t>(order));
  double total = 0.0;
  for (int k = 0; k < order; ++k) {
    rule.nodes[static_cast<std::size_t>(k)] = eig.eigenvalues()[k];
    const double v0 = eig.eigenvectors()(0, k);
    rule.weights[static_cast<std::size_t>(k)] = v0 * v0;
    total += v0 * v0;
  }
  for (double& w : rule.weights) w /= total;
  // Symmetrize so odd moments vanish to rounding.
  for (int k = 0; k < order / 2; ++k) {
    auto a = static_cast<std::size_t>(k);
    auto b = static_cast<std::size_t>(order - 1 - k);
    const double x = 0.5 * (rule.nodes[b] - rule.nodes[a]);
    rule.nodes[a] = -x;
    rule.nodes[b] = x;
    const double w = 0.5 * (rule.weights[a] + rule.weights[b]);
    rule.weights[a] = rule.weights[b] = w;
  }
  if (order % 2 == 1) rule.nodes[static_cast<std::size_t>(order / 2)] = 0.0;
  return rule;
}

Matrix clamp_psd(const Matrix& m, bool* clamped) {
  const Matrix sym = 0.5 * (m + m.transpose());
  Eigen::SelfAdjointEigenSolver<Matrix> eig(sym);
  Vector lambda = eig.eigenvalues();
  const double scale = std::max(lambda.cwiseAbs().maxCoeff(), 0.0);
  bool any = false;
  for (Eigen::Index k = 0; k < lambda.size(); ++k) {
    if (lambda[k] < 0.0) {
      if (lambda[k] < -1e-9 * scale) any = true;
      lambda[k] = 0.0;
    }
  }
  if (clamped) *clamped = any;
  return eig.eigenvectors() * lambda.asDiagonal() * eig.eigenvectors().transpose();
}

GaussianNodes::GaussianNodes(const Matrix& cov, const QuadratureConfig& config) {
  const Eigen::Index n = cov.rows();
  if (cov.cols() != n) throw ConfigError("covariance must be square");
  const Matrix sym = 0.5 * (cov + cov.transpose());
  Eigen::SelfAdjointEigenSolver<Matrix> eig(sym);
  const Vector& lambda = eig.eigenvalues();
  const double trace = std::max(0.0, lambda.sum());
  const double max_abs = lambda.size() ? lambda.cwiseAbs().maxCoeff() : 0.0;

  std::vector<Eigen::Index> kept;
  for (Eigen::Index k = 0; k < n; ++k) {
    if (lambda[k] < -1e-9 * max_abs) clamped_ = true;
    if (trace > 0.0 && lambda[k] > config.rel_eig_tol * trace) kept.push_back(k);
  }
  effective_dim_ = kept.size();

  if (kept.empty()) {
    offsets_ = Matrix::Zero(n, 1);
    log_weights_ = {0.0};
    return;
  }
  // Scaled principal directions: column d is sqrt(lambda_d) v_d.
  Matrix basis(n, static_cast<Eigen::Index>(kept.size()));
  for (std::size_t d = 0; d < kept.size(); ++d) {
    basis.col(static_cast<Eigen::Index>(d)) =
        std::sqrt(lambda[kept[d]]) * eig.eigenvectors().col(kept[d]);
  }

  if (kept.size() > config.max_tensor_dims) {
    monte_carlo_ = true;
    const std::size_t m = std::max<std::size_t>(config.mc_samples, 1);
    RngStream rng(config.mc_seed, {kept.size(), m});
    Matrix xi(basis.cols(), static_cast<Eigen::Index>(m));
    for (Eigen::Index c = 0; c < xi.cols(); ++c) {
      for (Eigen::Index r = 0; r < xi.rows(); ++r) xi(r, c) = rng.normal();
    }
    offsets_ = basis * xi;
    log_weights_.assign(m, -std::log(static_cast<double>(m)));
    return;
  }

  const GaussHermiteRule rule = gauss_hermite_rule(config.order);
  const std::size_t q = rule.nodes.size();
  std::size_t total = 1;
  for (std::size_t d = 0; d < kept.size(); ++d) total *= q;
  offsets_.resize(n, static_cast<Eigen::Index>(total));
  log_weights_.resize(total);
  std::vector<double> log_w(q);
  for (std::size_t k = 0; k < q; ++k) log_w[k] = std::log(rule.weights[k]);
  std::vector<std::size_t> idx(kept.size(), 0);
  for (std::size_t c = 0; c < total; ++c) {
    Vector off = Vector::Zero(n);
    double lw = 0.0;
    for (std::size_t d = 0; d < kept.size(); ++d) {
      off.noalias() += rule.nodes[idx[d]] * basis.col(static_cast<Eigen::Index>(d));
      lw += log_w[idx[d]];
    }
    offsets_.col(static_cast<Eigen::Index>(c)) = off;
    log_weights_[c] = lw;
    for (std::size_t d = 0; d < kept.size(); ++d) {
      if (++idx[d] < q) break;
      idx[d] = 0;
    }
  }
}

void GaussianNodes::place(const Vector& mean, Matrix& out) const {
  out = offsets_.colwise() + mean;
}

double log_sum_exp(const double* v, std::size_t n) {
  double m = -std::numeric_limits<double>::infinity();
  for (std::size_t k = 0; k < n; ++k) m = std::max(m, v[k]);
  if (!std::isfinite(m)) return m;
  double s = 0.0;
  for (std::size_t k = 0; k < n; ++k) s += std::exp(v[k] - m);
  return m + std::log(s);
}

}  // namespace icbp
