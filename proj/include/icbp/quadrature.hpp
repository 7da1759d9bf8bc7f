#pragma once

#include <cstddef>
#include <cstdint>
#include <vector>

#include "icbp/core_model.hpp"

namespace icbp {

struct QuadratureConfig {
  // Gauss-Hermite points per retained eigen-direction.
  int order = 9;
  // Tensor rules are used up to this many retained directions; above it the
  // expectation falls back to seeded Monte Carlo.
  std::size_t max_tensor_dims = 8;
  std::size_t mc_samples = 4096;
  std::uint64_t mc_seed = 0x5eedULL;
  // Eigen-directions with eigenvalue <= rel_eig_tol * trace are point masses.
  double rel_eig_tol = 1e-12;
};

// Probabilists' Gauss-Hermite rule: sum_k w_k g(xi_k) ~ E[g(xi)], xi ~ N(0,1).
struct GaussHermiteRule {
  std::vector<double> nodes;
  std::vector<double> weights;
};

GaussHermiteRule gauss_hermite_rule(int order);

// Quadrature nodes for expectations under N(m, cov): the node set is
// z_k = m + offsets.col(k) with normalized weights exp(log_weights[k]).
class GaussianNodes {
 public:
  GaussianNodes(const Matrix& cov, const QuadratureConfig& config);

  std::size_t size() const { return log_weights_.size(); }
  std::size_t dim() const { return static_cast<std::size_t>(offsets_.rows()); }
  std::size_t effective_dim() const { return effective_dim_; }
  bool monte_carlo() const { return monte_carlo_; }
  // True when a negative eigenvalue had to be clamped to zero.
  bool clamped() const { return clamped_; }

  const Matrix& offsets() const { return offsets_; }
  const std::vector<double>& log_weights() const { return log_weights_; }

  // Writes mean + offsets into `out` (dim x size).
  void place(const Vector& mean, Matrix& out) const;

 private:
  Matrix offsets_;
  std::vector<double> log_weights_;
  std::size_t effective_dim_ = 0;
  bool monte_carlo_ = false;
  bool clamped_ = false;
};

// Symmetric eigen-clamp: returns the PSD matrix closest in the eigenbasis,
// and sets *clamped when any eigenvalue below -tol * trace was raised.
Matrix clamp_psd(const Matrix& m, bool* clamped = nullptr);

double log_sum_exp(const double* v, std::size_t n);

}  // namespace icbp
