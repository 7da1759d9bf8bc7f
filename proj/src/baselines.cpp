#include "icbp/baselines.hpp"

#include <chrono>
#include <cmath>

#include "icbp/bp_exact.hpp"

namespace icbp {

SchedulingProfile reuse_one(const InterferenceSystem& system) {
  SchedulingProfile p;
  for (std::size_t j = 0; j < system.num_links(); ++j) {
    const auto idx = system.candidates(j).max_power_index();
    if (!idx) throw ConfigError("link " + std::to_string(j) + " has no max-power candidate");
    p.choice.push_back(*idx);
  }
  return p;
}

void OracleBudget::validate() const {
  if (max_profiles == 0) throw ConfigError("oracle budget must be positive");
  if (max_seconds && !(*max_seconds > 0.0)) throw ConfigError("oracle time cap must be positive");
}

ExhaustiveResult exhaustive_optimum(const InterferenceSystem& system,
                                    const OracleBudget& budget) {
  budget.validate();
  const std::size_t n = system.num_links();
  const std::size_t count = system.profile_count();
  if (count > budget.max_profiles) {
    throw OracleInfeasible(std::to_string(count) + " profiles exceed the budget of " +
                           std::to_string(budget.max_profiles));
  }
  const auto start = std::chrono::steady_clock::now();

  // contrib[i][j][k] = A_ij x_j^(k); zero blocks are skipped.
  struct Term {
    LinkId j;
    std::vector<Vector> by_candidate;
  };
  std::vector<std::vector<Term>> contrib(n);
  for (const auto& [key, a] : system.mixing_entries()) {
    Term t{key.second, {}};
    for (const auto& x : system.candidates(key.second).candidates()) {
      t.by_candidate.push_back(a * x);
    }
    contrib[key.first].push_back(std::move(t));
  }

  ExhaustiveResult best;
  best.objective = -std::numeric_limits<double>::infinity();
  std::vector<std::size_t> choice(n, 0);
  const auto n_z = static_cast<Eigen::Index>(system.n_z());
  Vector z(n_z);
  for (std::size_t evaluated = 0; evaluated < count; ++evaluated) {
    double total = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      z.setZero();
      for (const auto& t : contrib[i]) z += t.by_candidate[choice[t.j]];
      const double f = system.utility(i).value(system.candidates(i)[choice[i]], z);
      if (!std::isfinite(f)) throw EvaluationError(i, "non-finite utility during enumeration");
      total += f;
    }
    if (total > best.objective) {
      best.objective = total;
      best.profile.choice = choice;
    }
    best.profiles_evaluated = evaluated + 1;
    if (budget.max_seconds && (evaluated & 0xfff) == 0) {
      const std::chrono::duration<double> el = std::chrono::steady_clock::now() - start;
      if (el.count() > *budget.max_seconds) throw OracleInfeasible("oracle time cap exceeded");
    }
    // Odometer with the last link fastest.
    for (std::size_t k = n; k-- > 0;) {
      if (++choice[k] < system.candidates(k).size()) break;
      choice[k] = 0;
    }
  }
  return best;
}

SchedulingProfile serving_link_only_bf(const FemtoInstance& instance) {
  if (instance.mode != FemtoMode::kBeamforming) {
    throw ConfigError("serving-only policy requires beamforming mode");
  }
  SchedulingProfile p;
  for (std::size_t i = 0; i < instance.system.num_links(); ++i) {
    const SchedulingSet& set = instance.system.candidates(i);
    std::size_t best = 0;
    double best_power = -std::numeric_limits<double>::infinity();
    for (std::size_t k = 0; k < set.size(); ++k) {
      const double power = instance.rate_models[i].signal(set[k])[0];
      if (power > best_power) {
        best_power = power;
        best = k;
      }
    }
    p.choice.push_back(best);
  }
  return p;
}

}  // namespace icbp
