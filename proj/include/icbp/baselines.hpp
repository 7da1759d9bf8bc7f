#pragma once

#include <cstddef>
#include <optional>

#include "icbp/core_model.hpp"
#include "icbp/scenario_femto.hpp"

namespace icbp {

// Every link at its designated max-power candidate.
SchedulingProfile reuse_one(const InterferenceSystem& system);

struct OracleBudget {
  std::size_t max_profiles = 1'000'000;
  // Wall-clock cap in seconds; none when unset.
  std::optional<double> max_seconds;

  void validate() const;
};

struct ExhaustiveResult {
  SchedulingProfile profile;
  double objective = 0.0;
  std::size_t profiles_evaluated = 0;
};

// argmax_x F(x) over the full product of candidate sets, enumerated
// row-major (link 0 most significant); ties keep the first profile found,
// i.e. the lexicographically smallest.  Throws OracleInfeasible when the
// profile count or time exceeds the budget.
ExhaustiveResult exhaustive_optimum(const InterferenceSystem& system,
                                    const OracleBudget& budget = {});

// Per link, the beam maximizing the serving-link signal power; ties go to
// the lowest angle index.  Beamforming instances only.
SchedulingProfile serving_link_only_bf(const FemtoInstance& instance);

}  // namespace icbp
