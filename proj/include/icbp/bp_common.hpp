#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "icbp/core_model.hpp"

namespace icbp {

struct BPConfig {
  // Gibbs temperature parameter; larger values approximate maximization.
  double u = 50.0;
  std::size_t rounds = 8;
  // Geometric mixing weight of the previous TX->RX message, in [0, 1).
  double damping = 0.0;
  // Divide utilities by utility_scale() before applying u.
  bool scale_utilities = true;
  // Keep the per-round message tables in the result.
  bool record_history = false;

  void validate() const;
};

// Work counters used for complexity accounting.  One utility evaluation
// counts as one unit of utility_evals; dense linear algebra is counted in
// multiply-adds.
struct OpCounters {
  std::uint64_t utility_evals = 0;
  std::uint64_t linalg_flops = 0;

  std::uint64_t total() const { return utility_evals + linalg_flops; }
  OpCounters& operator+=(const OpCounters& o) {
    utility_evals += o.utility_evals;
    linalg_flops += o.linalg_flops;
    return *this;
  }
};

inline constexpr std::size_t kScalarBytes = 8;

struct MessageStats {
  std::uint64_t unicast_messages = 0;
  std::uint64_t unicast_bytes = 0;
  std::uint64_t broadcast_messages = 0;
  std::uint64_t broadcast_bytes = 0;

  void unicast(std::size_t scalars) {
    ++unicast_messages;
    unicast_bytes += scalars * kScalarBytes;
  }
  void broadcast(std::size_t scalars) {
    ++broadcast_messages;
    broadcast_bytes += scalars * kScalarBytes;
  }
  std::uint64_t total_bytes() const { return unicast_bytes + broadcast_bytes; }
};

// max |f_i(x, z)| over links and candidates, with z at zero interference and
// at the componentwise largest interference any profile produces.  Returns 1
// when that maximum is zero or not finite.
double utility_scale(const InterferenceSystem& system);

// u / utility_scale(system) when scaling is enabled, else u.
double effective_temperature(const InterferenceSystem& system, const BPConfig& config);

// Index of the largest entry; ties go to the lowest index.
std::size_t argmax_lowest(const std::vector<double>& values);

// Shift so the largest finite entry is zero.
void shift_to_max_zero(std::vector<double>& values);

}  // namespace icbp
