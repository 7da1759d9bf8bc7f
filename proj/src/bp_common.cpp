#include "icbp/bp_common.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace icbp {

void BPConfig::validate() const {
  if (!(u > 0.0) || !std::isfinite(u)) throw ConfigError("temperature u must be finite and > 0");
  if (rounds < 1) throw ConfigError("rounds must be >= 1");
  if (!(damping >= 0.0 && damping < 1.0)) throw ConfigError("damping must be in [0, 1)");
}

double utility_scale(const InterferenceSystem& system) {
  double scale = 0.0;
  const auto n_z = static_cast<Eigen::Index>(system.n_z());
  for (std::size_t i = 0; i < system.num_links(); ++i) {
    Vector z_hi = Vector::Zero(n_z);
    auto it = system.mixing_entries().lower_bound({i, 0});
    for (; it != system.mixing_entries().end() && it->first.first == i; ++it) {
      const SchedulingSet& set = system.candidates(it->first.second);
      Vector hi = Vector::Constant(n_z, -std::numeric_limits<double>::infinity());
      for (const auto& c : set.candidates()) hi = hi.cwiseMax(it->second * c);
      z_hi += hi.cwiseMax(0.0);
    }
    const Vector z0 = Vector::Zero(n_z);
    for (const auto& x : system.candidates(i).candidates()) {
      const Vector* points[] = {&z0, &z_hi};
      for (const Vector* z : points) {
        const double f = std::abs(system.utility(i).value(x, *z));
        if (std::isfinite(f)) scale = std::max(scale, f);
      }
    }
  }
  return scale > 0.0 && std::isfinite(scale) ? scale : 1.0;
}

double effective_temperature(const InterferenceSystem& system, const BPConfig& config) {
  return config.scale_utilities ? config.u / utility_scale(system) : config.u;
}

std::size_t argmax_lowest(const std::vector<double>& values) {
  std::size_t best = 0;
  for (std::size_t k = 1; k < values.size(); ++k) {
    if (values[k] > values[best]) best = k;
  }
  return best;
}

void shift_to_max_zero(std::vector<double>& values) {
  double m = -std::numeric_limits<double>::infinity();
  for (double v : values) m = std::max(m, v);
  if (!std::isfinite(m)) return;
  for (double& v : values) v -= m;
}

}  // namespace icbp
