#include "icbp/utility_models.hpp"

#include <cmath>
#include <numbers>

namespace icbp {

namespace {

constexpr double kInvLn2 = 1.0 / std::numbers::ln2;

}  // namespace

void RateModel::validate() const {
  if (serving.size() == 0) throw ConfigError("rate model has no serving gain");
  if (!(noise_w > 0.0) || !std::isfinite(noise_w)) {
    throw ConfigError("noise power must be positive");
  }
  if (!(bandwidth_hz > 0.0)) throw ConfigError("bandwidth must be positive");
  if (mode != RateMode::kBeamforming && (serving.array() < 0.0).any()) {
    throw ConfigError("gains must be non-negative");
  }
  if (cap_bps_hz && !(*cap_bps_hz > 0.0)) throw ConfigError("rate cap must be positive");
}

std::size_t RateModel::interference_dim() const {
  return mode == RateMode::kSubband ? static_cast<std::size_t>(serving.size()) : 1;
}

Vector RateModel::signal(const Vector& x) const {
  switch (mode) {
    case RateMode::kFlat:
      return Vector::Constant(1, serving[0] * x[0]);
    case RateMode::kSubband:
      return serving.cwiseProduct(x);
    case RateMode::kBeamforming:
      return Vector::Constant(1, std::max(0.0, serving.dot(x)));
  }
  return {};
}

double rate(const RateModel& model, const Vector& x, const Vector& z) {
  const Vector s = model.signal(x);
  double total = 0.0;
  for (Eigen::Index k = 0; k < s.size(); ++k) {
    const double d = std::max(z[k], 0.0) + model.noise_w;
    double se = std::log2(1.0 + s[k] / d);
    if (model.cap_bps_hz) se = std::min(se, *model.cap_bps_hz);
    total += model.bandwidth_hz * se;
  }
  return total;
}

void UtilitySpec::validate() const {
  if (kind == UtilityKind::kBetaFair && !(beta > 0.0 && std::isfinite(beta))) {
    throw ConfigError("beta-fair utility requires beta > 0");
  }
  for (double w : weights) {
    if (!(w >= 0.0) || !std::isfinite(w)) throw ConfigError("weights must be finite and >= 0");
  }
}

double UtilitySpec::weight(LinkId i) const {
  if (i >= weights.size()) throw ConfigError("no weight for link " + std::to_string(i));
  return weights[i];
}

UtilitySpec parse_utility_spec(const std::string& text) {
  UtilitySpec spec;
  if (text == "pf" || text == "proportional-fair") {
    spec.kind = UtilityKind::kProportionalFair;
  } else if (text == "sumrate" || text == "sum-rate") {
    spec.kind = UtilityKind::kSumRate;
  } else if (text == "weighted-rate") {
    spec.kind = UtilityKind::kWeightedRate;
  } else if (text.rfind("beta:", 0) == 0 || text.rfind("beta-fair:", 0) == 0) {
    spec.kind = UtilityKind::kBetaFair;
    const auto pos = text.find(':');
    try {
      spec.beta = std::stod(text.substr(pos + 1));
    } catch (const std::exception&) {
      throw ConfigError("cannot parse beta in utility '" + text + "'");
    }
  } else {
    throw ConfigError("unknown utility '" + text + "'");
  }
  spec.validate();
  return spec;
}

std::string utility_kind_name(UtilityKind kind) {
  switch (kind) {
    case UtilityKind::kSumRate: return "sum-rate";
    case UtilityKind::kProportionalFair: return "proportional-fair";
    case UtilityKind::kBetaFair: return "beta-fair";
    case UtilityKind::kWeightedRate: return "weighted-rate";
  }
  return "unknown";
}

double static_utility(const UtilitySpec& spec, double r, LinkId i) {
  switch (spec.kind) {
    case UtilityKind::kSumRate: return r;
    case UtilityKind::kProportionalFair: return std::log(std::max(r, kRateFloor));
    case UtilityKind::kBetaFair: return -spec.beta * std::pow(std::max(r, kRateFloor), -spec.beta);
    case UtilityKind::kWeightedRate: return spec.weight(i) * r;
  }
  return 0.0;
}

double utility_derivative(const UtilitySpec& spec, double r, LinkId i) {
  switch (spec.kind) {
    case UtilityKind::kSumRate: return 1.0;
    case UtilityKind::kProportionalFair: return r > kRateFloor ? 1.0 / r : 0.0;
    case UtilityKind::kBetaFair:
      return r > kRateFloor ? spec.beta * spec.beta * std::pow(r, -spec.beta - 1.0) : 0.0;
    case UtilityKind::kWeightedRate: return spec.weight(i);
  }
  return 0.0;
}

double utility_second_derivative(const UtilitySpec& spec, double r, LinkId /*i*/) {
  switch (spec.kind) {
    case UtilityKind::kProportionalFair: return r > kRateFloor ? -1.0 / (r * r) : 0.0;
    case UtilityKind::kBetaFair:
      return r > kRateFloor
                 ? -spec.beta * spec.beta * (spec.beta + 1.0) * std::pow(r, -spec.beta - 2.0)
                 : 0.0;
    default: return 0.0;
  }
}

void DynamicState::validate() const {
  if (!(alpha > 0.0 && alpha <= 1.0)) throw ConfigError("alpha must be in (0, 1]");
  for (double r : avg_rate) {
    if (!(r >= 0.0) || !std::isfinite(r)) throw ConfigError("average rates must be >= 0");
  }
}

double marginal_weight(const UtilitySpec& spec, const DynamicState& state, LinkId i) {
  const double rbar = std::max(state.avg_rate.at(i), kRateFloor);
  switch (spec.kind) {
    case UtilityKind::kSumRate: return 1.0;
    case UtilityKind::kProportionalFair: return 1.0 / rbar;
    case UtilityKind::kBetaFair: return spec.beta * spec.beta * std::pow(rbar, -spec.beta - 1.0);
    case UtilityKind::kWeightedRate: return spec.weight(i);
  }
  return 0.0;
}

DynamicState update_average_rate(const DynamicState& state, LinkId i, double realized_rate) {
  DynamicState next = state;
  double& r = next.avg_rate.at(i);
  r = (1.0 - state.alpha) * r + state.alpha * realized_rate;
  return next;
}

Vector beamforming_lift(const std::vector<std::complex<double>>& beam) {
  const std::size_t n = beam.size();
  Vector x(static_cast<Eigen::Index>(2 * n * n));
  for (std::size_t k = 0; k < n; ++k) {
    for (std::size_t l = 0; l < n; ++l) {
      const std::complex<double> e = beam[k] * std::conj(beam[l]);
      const auto idx = static_cast<Eigen::Index>(k * n + l);
      x[idx] = e.real();
      x[idx + static_cast<Eigen::Index>(n * n)] = e.imag();
    }
  }
  return x;
}

Vector beamforming_row(const std::vector<std::complex<double>>& channel) {
  // g^H B g = sum_kl conj(g_k) g_l B_kl; the sum is real for Hermitian B so
  // only Re(M)Re(B) - Im(M)Im(B) survives.
  const std::size_t n = channel.size();
  Vector row(static_cast<Eigen::Index>(2 * n * n));
  for (std::size_t k = 0; k < n; ++k) {
    for (std::size_t l = 0; l < n; ++l) {
      const std::complex<double> m = std::conj(channel[k]) * channel[l];
      const auto idx = static_cast<Eigen::Index>(k * n + l);
      row[idx] = m.real();
      row[idx + static_cast<Eigen::Index>(n * n)] = -m.imag();
    }
  }
  return row;
}

RateUtility::RateUtility(RateModel model, UtilitySpec spec, LinkId link)
    : model_(std::move(model)), spec_(std::move(spec)), link_(link) {
  model_.validate();
  spec_.validate();
  if (spec_.kind == UtilityKind::kWeightedRate) (void)spec_.weight(link_);
}

double RateUtility::rate_from_signal(const double* signal, const double* z, std::size_t n) const {
  double total = 0.0;
  for (std::size_t k = 0; k < n; ++k) {
    const double d = std::max(z[k], 0.0) + model_.noise_w;
    double se = std::log2(1.0 + signal[k] / d);
    if (model_.cap_bps_hz) se = std::min(se, *model_.cap_bps_hz);
    total += se;
  }
  return model_.bandwidth_hz * total;
}

double RateUtility::value(const Vector& x, const Vector& z) const {
  const Vector s = model_.signal(x);
  return static_utility(spec_, rate_from_signal(s.data(), z.data(), static_cast<std::size_t>(s.size())),
                        link_);
}

void RateUtility::values(const Vector& x, const Matrix& zs, double* out) const {
  const Vector s = model_.signal(x);
  const auto n = static_cast<std::size_t>(s.size());
  for (Eigen::Index c = 0; c < zs.cols(); ++c) {
    out[c] = static_utility(spec_, rate_from_signal(s.data(), zs.col(c).data(), n), link_);
  }
}

void RateUtility::z_derivatives(const Vector& x, const Vector& z, Vector& grad,
                                Matrix& hess) const {
  const Vector s = model_.signal(x);
  const Eigen::Index n = s.size();
  grad.setZero(n);
  hess.setZero(n, n);
  double r = 0.0;
  Vector d1 = Vector::Zero(n);
  Vector d2 = Vector::Zero(n);
  for (Eigen::Index k = 0; k < n; ++k) {
    const bool clamped = z[k] < 0.0;
    const double d = std::max(z[k], 0.0) + model_.noise_w;
    double se = std::log2(1.0 + s[k] / d);
    bool capped = false;
    if (model_.cap_bps_hz && se > *model_.cap_bps_hz) {
      se = *model_.cap_bps_hz;
      capped = true;
    }
    r += model_.bandwidth_hz * se;
    if (clamped || capped) continue;
    const double w = model_.bandwidth_hz * kInvLn2;
    const double ds = d + s[k];
    d1[k] = w * (1.0 / ds - 1.0 / d);
    d2[k] = w * (1.0 / (d * d) - 1.0 / (ds * ds));
  }
  const double u1 = utility_derivative(spec_, r, link_);
  const double u2 = utility_second_derivative(spec_, r, link_);
  grad = u1 * d1;
  hess = u2 * d1 * d1.transpose();
  hess.diagonal() += u1 * d2;
}

void RateUtility::z_derivatives_batch(const Vector& x, const Matrix& zs, Matrix& grad_out,
                                      std::vector<Matrix>& hess_out) const {
  grad_out.resize(zs.rows(), zs.cols());
  hess_out.resize(static_cast<std::size_t>(zs.cols()));
  Vector z(zs.rows());
  Vector g;
  for (Eigen::Index c = 0; c < zs.cols(); ++c) {
    z = zs.col(c);
    z_derivatives(x, z, g, hess_out[static_cast<std::size_t>(c)]);
    grad_out.col(c) = g;
  }
}

}  // namespace icbp
