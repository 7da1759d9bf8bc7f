#pragma once

#include <cstdint>
#include <optional>
#include <ostream>
#include <string>
#include <utility>
#include <vector>

#include "icbp/baselines.hpp"
#include "icbp/bp_first_order.hpp"
#include "icbp/quadrature.hpp"
#include "icbp/scenario_femto.hpp"

namespace icbp {

enum class Algorithm { kReuseOne, kExhaustive, kServingOnly, kExactBP, kGaussBP, kFirstOrderBP };

// reuse1, exhaustive, serving-only, exact-bp, gauss-bp, fo-bp.
Algorithm parse_algorithm(const std::string& text);
std::string algorithm_name(Algorithm algorithm);
std::vector<Algorithm> parse_algorithm_list(const std::string& csv);

struct ExperimentConfig {
  FemtoMode mode = FemtoMode::kOnOff;
  std::vector<Algorithm> algorithms{Algorithm::kReuseOne, Algorithm::kFirstOrderBP,
                                    Algorithm::kGaussBP, Algorithm::kExhaustive};
  std::size_t drops = 100;
  std::size_t first_drop = 0;
  std::size_t slots = 100;  // dynamic mode only
  // BP rounds for every BP algorithm; per-algorithm defaults when unset
  // (exact 8, gauss 4, first-order 2).
  std::optional<std::size_t> rounds;
  double u = 50.0;
  double damping = 0.0;
  double strong_thresh_db = 0.0;
  bool broadcast_hessian = false;
  double alpha = 0.1;
  std::uint64_t seed = 1;
  UtilitySpec utility = parse_utility_spec("pf");
  FemtoConfig femto;
  QuadratureConfig quadrature;
  OracleBudget budget;
  std::size_t threads = 1;

  void validate() const;
  std::size_t rounds_for(Algorithm algorithm) const;
};

struct AlgorithmRun {
  Algorithm algorithm = Algorithm::kReuseOne;
  // Time-average realized rate (dynamic) or achieved rate (static), bits/s.
  std::vector<double> link_rate;
  double harmonic_mean = 0.0;
  // Sum of U(rate) with the experiment's static utility.
  double system_utility = 0.0;
  std::uint64_t channel_hash = 0;
  std::uint64_t message_bytes = 0;
  double seconds = 0.0;
  // Solves whose objective beat the exhaustive optimum on the same instance.
  std::size_t optimality_violations = 0;
  std::vector<OverheadRow> overhead;  // first first-order solve of the drop
};

struct DropRecord {
  std::size_t drop = 0;
  std::vector<AlgorithmRun> runs;  // in config order
};

struct RunRecord {
  ExperimentConfig config;
  std::vector<DropRecord> drops;  // ascending drop index
  double wall_seconds = 0.0;

  // All link rates of one algorithm, pooled over drops in drop order.
  std::vector<double> link_rates(Algorithm algorithm) const;
  std::vector<double> harmonic_means(Algorithm algorithm) const;
  std::vector<double> system_utilities(Algorithm algorithm) const;
  std::size_t optimality_violations() const;
};

// Per drop: weights w = U'(Rbar) each slot, a weighted-rate solve, realized
// rates at the chosen profile and EWMA update; every algorithm runs closed
// loop on its own trajectory over the same channel realizations.
RunRecord run_dynamic_onoff(const ExperimentConfig& config);
// One static solve per drop and algorithm.
RunRecord run_static_subband(const ExperimentConfig& config);
RunRecord run_static_beamforming(const ExperimentConfig& config);
RunRecord run_experiment(const ExperimentConfig& config);

// Solves one instance.  Messages and overhead are filled for BP algorithms.
struct SolveOutcome {
  SchedulingProfile profile;
  std::uint64_t message_bytes = 0;
  std::vector<OverheadRow> overhead;
};
SolveOutcome solve_instance(Algorithm algorithm, const FemtoInstance& instance,
                            const ExperimentConfig& config);

double harmonic_mean(const std::vector<double>& values);

// Sorted empirical CDF: (v_(k), k / N).
std::vector<std::pair<double, double>> empirical_cdf(std::vector<double> values);

struct CdfRow {
  std::string mode;
  std::string algorithm;
  std::string quantity;  // link-rate or system-utility
  double value;
  double cdf;
};
std::vector<CdfRow> compute_cdf(const RunRecord& record, const std::string& quantity);

std::string format_double(double v);

void write_results_csv(const RunRecord& record, std::ostream& out);
void write_cdf_csv(const RunRecord& record, std::ostream& out);
void write_overhead_csv(const RunRecord& record, std::ostream& out);
// Timing, byte and consistency totals; not bitwise reproducible.
void write_summary_csv(const RunRecord& record, std::ostream& out);

}  // namespace icbp
