#pragma once

#include <complex>
#include <optional>
#include <string>
#include <vector>

#include "icbp/core_model.hpp"

namespace icbp {

// Floor applied to rates inside log / power utilities and marginal weights.
inline constexpr double kRateFloor = 1e-3;

// SINR-to-rate model for one link.  Every interference dimension k carries
// a signal power signal_k(x), noise noise_w and bandwidth bandwidth_hz:
//   rate = sum_k W log2(1 + signal_k / (max(z_k, 0) + N0))
enum class RateMode { kFlat, kSubband, kBeamforming };

struct RateModel {
  RateMode mode = RateMode::kFlat;
  // kFlat: [g_i]; kSubband: per-subband gains; kBeamforming: lifted serving
  // row (signal = serving . x).
  Vector serving;
  double noise_w = 1.0;
  double bandwidth_hz = 1.0;
  // Optional spectral-efficiency cap in bits/s/Hz.
  std::optional<double> cap_bps_hz;

  void validate() const;
  std::size_t interference_dim() const;
  // Received signal power per interference dimension.
  Vector signal(const Vector& x) const;
};

double rate(const RateModel& model, const Vector& x, const Vector& z);

enum class UtilityKind { kSumRate, kProportionalFair, kBetaFair, kWeightedRate };

struct UtilitySpec {
  UtilityKind kind = UtilityKind::kSumRate;
  double beta = 1.0;
  // Per-link weights for kWeightedRate.
  std::vector<double> weights;

  void validate() const;
  double weight(LinkId i) const;
};

// "pf", "sumrate", "beta:<b>", or the long kind names.
UtilitySpec parse_utility_spec(const std::string& text);
std::string utility_kind_name(UtilityKind kind);

// U(R).  For kWeightedRate this is w_i R.
double static_utility(const UtilitySpec& spec, double r, LinkId i = 0);
// dU/dR and d2U/dR2 at R.
double utility_derivative(const UtilitySpec& spec, double r, LinkId i = 0);
double utility_second_derivative(const UtilitySpec& spec, double r, LinkId i = 0);

struct DynamicState {
  std::vector<double> avg_rate;
  double alpha = 0.1;
  std::size_t slot = 0;

  void validate() const;
};

// w_i(t) = U_i'(Rbar_i(t)).
double marginal_weight(const UtilitySpec& spec, const DynamicState& state, LinkId i);

// Rbar_i <- (1 - alpha) Rbar_i + alpha * realized.  Other links are untouched.
DynamicState update_average_rate(const DynamicState& state, LinkId i, double realized_rate);

// Real-stacked vectorization [Re vec(bb^H); Im vec(bb^H)] of length 2N^2.
Vector beamforming_lift(const std::vector<std::complex<double>>& beam);

// Row r with <r, beamforming_lift(b)> = |g^H b|^2.
Vector beamforming_row(const std::vector<std::complex<double>>& channel);

// f_i = U(R_i(x_i, z_i)) with analytic z-derivatives.
class RateUtility final : public LinkUtility {
 public:
  RateUtility(RateModel model, UtilitySpec spec, LinkId link);

  double value(const Vector& x, const Vector& z) const override;
  void values(const Vector& x, const Matrix& zs, double* out) const override;
  void z_derivatives(const Vector& x, const Vector& z, Vector& grad, Matrix& hess) const override;
  void z_derivatives_batch(const Vector& x, const Matrix& zs, Matrix& grad_out,
                           std::vector<Matrix>& hess_out) const override;

  const RateModel& model() const { return model_; }
  const UtilitySpec& spec() const { return spec_; }
  LinkId link() const { return link_; }

 private:
  double rate_from_signal(const double* signal, const double* z, std::size_t n) const;

  RateModel model_;
  UtilitySpec spec_;
  LinkId link_;
};

}  // namespace icbp
