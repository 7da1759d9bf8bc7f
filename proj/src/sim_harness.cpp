#include "icbp/sim_harness.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <exception>
#include <mutex>
#include <sstream>
#include <thread>

#include "icbp/bp_exact.hpp"
#include "icbp/bp_gaussian.hpp"
#include "icbp/rng.hpp"

namespace icbp {
namespace {

using Clock = std::chrono::steady_clock;

double elapsed(Clock::time_point start) {
  return std::chrono::duration<double>(Clock::now() - start).count();
}

std::uint64_t combine_hash(std::uint64_t h, std::uint64_t v) {
  return splitmix64(h ^ (v + 0x9e3779b97f4a7c15ULL));
}

bool beats(double candidate, double optimum) {
  return candidate > optimum + 1e-9 * std::max(1.0, std::abs(optimum));
}

void check_mode(const ExperimentConfig& config, FemtoMode mode) {
  if (config.mode != mode) {
    throw ConfigError("experiment expects mode " + femto_mode_name(mode) + ", got " +
                      femto_mode_name(config.mode));
  }
}

// Runs drop_fn over every drop, possibly in parallel, and returns records in
// drop order.
RunRecord run_drops(const ExperimentConfig& config,
                    const std::function<DropRecord(std::size_t)>& drop_fn) {
  config.validate();
  const auto start = Clock::now();
  RunRecord record;
  record.config = config;
  record.drops.resize(config.drops);
  const std::size_t workers = std::max<std::size_t>(1, std::min(config.threads, config.drops));
  std::size_t next = 0;
  std::mutex mu;
  std::exception_ptr failure;
  auto work = [&]() {
    for (;;) {
      std::size_t k;
      {
        std::lock_guard<std::mutex> lock(mu);
        if (failure || next >= config.drops) return;
        k = next++;
      }
      try {
        record.drops[k] = drop_fn(config.first_drop + k);
      } catch (...) {
        std::lock_guard<std::mutex> lock(mu);
        if (!failure) failure = std::current_exception();
      }
    }
  };
  if (workers == 1) {
    work();
  } else {
    std::vector<std::thread> pool;
    for (std::size_t w = 0; w < workers; ++w) pool.emplace_back(work);
    for (auto& t : pool) t.join();
  }
  if (failure) std::rethrow_exception(failure);
  record.wall_seconds = elapsed(start);
  return record;
}

void finish_run(AlgorithmRun& run, const ExperimentConfig& config) {
  run.harmonic_mean = harmonic_mean(run.link_rate);
  run.system_utility = 0.0;
  for (std::size_t i = 0; i < run.link_rate.size(); ++i) {
    run.system_utility += static_utility(config.utility, run.link_rate[i], i);
  }
}

void check_pairing(const DropRecord& d) {
  for (const auto& r : d.runs) {
    if (r.channel_hash != d.runs.front().channel_hash) {
      throw EvaluationError(0, "algorithms saw different channels in drop " +
                                   std::to_string(d.drop));
    }
  }
}

DropRecord static_drop(const ExperimentConfig& config, std::size_t drop_index) {
  const FemtoDrop drop = generate_drop(config.femto, config.seed, drop_index);
  DropRecord out;
  out.drop = drop_index;
  std::optional<double> optimum;
  for (Algorithm alg : config.algorithms) {
    const auto start = Clock::now();
    const ChannelRealization ch = draw_channels(config.femto, drop, config.mode, 0);
    const FemtoInstance inst = build_instance(config.femto, ch, config.utility);
    AlgorithmRun run;
    run.algorithm = alg;
    run.channel_hash = realization_hash(ch);
    SolveOutcome sol = solve_instance(alg, inst, config);
    run.link_rate = realized_rates(inst, sol.profile);
    run.message_bytes = sol.message_bytes;
    run.overhead = std::move(sol.overhead);
    run.seconds = elapsed(start);
    finish_run(run, config);
    if (alg == Algorithm::kExhaustive) optimum = total_utility(inst.system, sol.profile);
    out.runs.push_back(std::move(run));
  }
  if (optimum) {
    // Every run solved the same instance, so system_utility is its objective.
    for (auto& r : out.runs) {
      if (beats(r.system_utility, *optimum)) ++r.optimality_violations;
    }
  }
  check_pairing(out);
  return out;
}

DropRecord dynamic_drop(const ExperimentConfig& config, std::size_t drop_index) {
  const FemtoDrop drop = generate_drop(config.femto, config.seed, drop_index);
  const std::size_t n = drop.num_links();
  const bool check_optimality =
      std::find(config.algorithms.begin(), config.algorithms.end(), Algorithm::kExhaustive) !=
      config.algorithms.end();
  DropRecord out;
  out.drop = drop_index;

  // Rbar(0): isolated full-power rate under slot-0 fading.
  std::vector<double> initial(n);
  {
    const ChannelRealization ch = draw_channels(config.femto, drop, FemtoMode::kOnOff, 0);
    const FemtoInstance inst = build_instance(config.femto, ch, UtilitySpec{});
    for (std::size_t i = 0; i < n; ++i) {
      const SchedulingSet& set = inst.system.candidates(i);
      initial[i] = rate(inst.rate_models[i], set[*set.max_power_index()], Vector::Zero(1));
    }
  }

  for (Algorithm alg : config.algorithms) {
    const auto start = Clock::now();
    AlgorithmRun run;
    run.algorithm = alg;
    run.link_rate.assign(n, 0.0);
    DynamicState state{initial, config.alpha, 0};
    std::uint64_t hash = 0;
    for (std::size_t t = 0; t < config.slots; ++t) {
      const ChannelRealization ch = draw_channels(config.femto, drop, FemtoMode::kOnOff, t);
      hash = combine_hash(hash, realization_hash(ch));
      UtilitySpec weighted;
      weighted.kind = UtilityKind::kWeightedRate;
      for (std::size_t i = 0; i < n; ++i) {
        weighted.weights.push_back(marginal_weight(config.utility, state, i));
      }
      const FemtoInstance inst = build_instance(config.femto, ch, weighted);
      SolveOutcome sol = solve_instance(alg, inst, config);
      run.message_bytes += sol.message_bytes;
      if (t == 0) run.overhead = std::move(sol.overhead);
      if (check_optimality && alg != Algorithm::kExhaustive) {
        const double opt = exhaustive_optimum(inst.system, config.budget).objective;
        if (beats(total_utility(inst.system, sol.profile), opt)) ++run.optimality_violations;
      }
      const std::vector<double> realized = realized_rates(inst, sol.profile);
      for (std::size_t i = 0; i < n; ++i) {
        run.link_rate[i] += realized[i];
        state = update_average_rate(state, i, realized[i]);
      }
      ++state.slot;
    }
    for (double& r : run.link_rate) r /= static_cast<double>(config.slots);
    run.channel_hash = hash;
    run.seconds = elapsed(start);
    finish_run(run, config);
    out.runs.push_back(std::move(run));
  }
  check_pairing(out);
  return out;
}

}  // namespace

Algorithm parse_algorithm(const std::string& text) {
  if (text == "reuse1") return Algorithm::kReuseOne;
  if (text == "exhaustive") return Algorithm::kExhaustive;
  if (text == "serving-only") return Algorithm::kServingOnly;
  if (text == "exact-bp") return Algorithm::kExactBP;
  if (text == "gauss-bp") return Algorithm::kGaussBP;
  if (text == "fo-bp") return Algorithm::kFirstOrderBP;
  throw ConfigError("unknown algorithm '" + text + "'");
}

std::string algorithm_name(Algorithm algorithm) {
  switch (algorithm) {
    case Algorithm::kReuseOne: return "reuse1";
    case Algorithm::kExhaustive: return "exhaustive";
    case Algorithm::kServingOnly: return "serving-only";
    case Algorithm::kExactBP: return "exact-bp";
    case Algorithm::kGaussBP: return "gauss-bp";
    case Algorithm::kFirstOrderBP: return "fo-bp";
  }
  return "unknown";
}

std::vector<Algorithm> parse_algorithm_list(const std::string& csv) {
  std::vector<Algorithm> out;
  std::stringstream ss(csv);
  std::string item;
  while (std::getline(ss, item, ',')) {
    if (!item.empty()) out.push_back(parse_algorithm(item));
  }
  if (out.empty()) throw ConfigError("no algorithms given");
  return out;
}

void ExperimentConfig::validate() const {
  if (drops == 0) throw ConfigError("drops must be >= 1");
  if (mode == FemtoMode::kOnOff && slots == 0) throw ConfigError("slots must be >= 1");
  if (algorithms.empty()) throw ConfigError("no algorithms given");
  for (Algorithm a : algorithms) {
    if (a == Algorithm::kServingOnly && mode != FemtoMode::kBeamforming) {
      throw ConfigError("serving-only requires beamforming mode");
    }
  }
  if (rounds && *rounds == 0) throw ConfigError("rounds must be >= 1");
  if (!(alpha > 0.0 && alpha <= 1.0)) throw ConfigError("alpha must be in (0, 1]");
  if (!(u > 0.0)) throw ConfigError("u must be positive");
  if (threads == 0) throw ConfigError("threads must be >= 1");
  if (utility.kind == UtilityKind::kWeightedRate) {
    throw ConfigError("the experiment utility must be a static utility of the rate");
  }
  utility.validate();
  femto.validate();
  budget.validate();
}

std::size_t ExperimentConfig::rounds_for(Algorithm algorithm) const {
  if (rounds) return *rounds;
  switch (algorithm) {
    case Algorithm::kExactBP: return 8;
    case Algorithm::kGaussBP: return 4;
    case Algorithm::kFirstOrderBP: return 2;
    default: return 0;
  }
}

SolveOutcome solve_instance(Algorithm algorithm, const FemtoInstance& instance,
                            const ExperimentConfig& config) {
  SolveOutcome out;
  BPConfig bp;
  bp.u = config.u;
  bp.damping = config.damping;
  bp.rounds = config.rounds_for(algorithm);
  switch (algorithm) {
    case Algorithm::kReuseOne:
      out.profile = instance.mode == FemtoMode::kBeamforming ? serving_link_only_bf(instance)
                                                             : reuse_one(instance.system);
      break;
    case Algorithm::kServingOnly:
      out.profile = serving_link_only_bf(instance);
      break;
    case Algorithm::kExhaustive:
      out.profile = exhaustive_optimum(instance.system, config.budget).profile;
      break;
    case Algorithm::kExactBP: {
      const auto r = run_exact_bp(instance.system, bp);
      out.profile = r.profile;
      out.message_bytes = r.messages.total_bytes();
      break;
    }
    case Algorithm::kGaussBP: {
      GaussianBPConfig g;
      g.bp = bp;
      g.quadrature = config.quadrature;
      const auto r = run_gaussian_bp(instance.system, g);
      out.profile = r.profile;
      out.message_bytes = r.messages.total_bytes();
      break;
    }
    case Algorithm::kFirstOrderBP: {
      FirstOrderConfig f;
      f.bp = bp;
      f.quadrature = config.quadrature;
      f.strong_threshold_db = config.strong_thresh_db;
      f.broadcast_hessian = config.broadcast_hessian;
      const auto r = run_first_order_bp(instance.system, f);
      out.profile = r.profile;
      out.message_bytes = r.messages.total_bytes();
      out.overhead = overhead_rows(r.history);
      break;
    }
  }
  return out;
}

RunRecord run_dynamic_onoff(const ExperimentConfig& config) {
  check_mode(config, FemtoMode::kOnOff);
  return run_drops(config, [&](std::size_t d) { return dynamic_drop(config, d); });
}

RunRecord run_static_subband(const ExperimentConfig& config) {
  check_mode(config, FemtoMode::kSubband);
  return run_drops(config, [&](std::size_t d) { return static_drop(config, d); });
}

RunRecord run_static_beamforming(const ExperimentConfig& config) {
  check_mode(config, FemtoMode::kBeamforming);
  return run_drops(config, [&](std::size_t d) { return static_drop(config, d); });
}

RunRecord run_experiment(const ExperimentConfig& config) {
  switch (config.mode) {
    case FemtoMode::kOnOff: return run_dynamic_onoff(config);
    case FemtoMode::kSubband: return run_static_subband(config);
    case FemtoMode::kBeamforming: return run_static_beamforming(config);
  }
  throw ConfigError("unknown mode");
}

namespace {

template <typename Fn>
std::vector<double> collect(const RunRecord& rec, Algorithm alg, Fn fn) {
  std::vector<double> out;
  for (const auto& d : rec.drops) {
    for (const auto& r : d.runs) {
      if (r.algorithm == alg) fn(r, out);
    }
  }
  return out;
}

}  // namespace

std::vector<double> RunRecord::link_rates(Algorithm algorithm) const {
  return collect(*this, algorithm, [](const AlgorithmRun& r, std::vector<double>& out) {
    out.insert(out.end(), r.link_rate.begin(), r.link_rate.end());
  });
}

std::vector<double> RunRecord::harmonic_means(Algorithm algorithm) const {
  return collect(*this, algorithm, [](const AlgorithmRun& r, std::vector<double>& out) {
    out.push_back(r.harmonic_mean);
  });
}

std::vector<double> RunRecord::system_utilities(Algorithm algorithm) const {
  return collect(*this, algorithm, [](const AlgorithmRun& r, std::vector<double>& out) {
    out.push_back(r.system_utility);
  });
}

std::size_t RunRecord::optimality_violations() const {
  std::size_t total = 0;
  for (const auto& d : drops) {
    for (const auto& r : d.runs) total += r.optimality_violations;
  }
  return total;
}

double harmonic_mean(const std::vector<double>& values) {
  if (values.empty()) return 0.0;
  double inv = 0.0;
  for (double v : values) {
    if (!(v > 0.0)) return 0.0;
    inv += 1.0 / v;
  }
  return static_cast<double>(values.size()) / inv;
}

std::vector<std::pair<double, double>> empirical_cdf(std::vector<double> values) {
  std::sort(values.begin(), values.end());
  std::vector<std::pair<double, double>> out;
  const auto n = static_cast<double>(values.size());
  for (std::size_t k = 0; k < values.size(); ++k) {
    out.emplace_back(values[k], static_cast<double>(k + 1) / n);
  }
  return out;
}

std::vector<CdfRow> compute_cdf(const RunRecord& record, const std::string& quantity) {
  if (quantity != "link-rate" && quantity != "system-utility") {
    throw ConfigError("unknown cdf quantity '" + quantity + "'");
  }
  std::vector<CdfRow> rows;
  const std::string mode = femto_mode_name(record.config.mode);
  for (Algorithm alg : record.config.algorithms) {
    const auto samples =
        quantity == "link-rate" ? record.link_rates(alg) : record.harmonic_means(alg);
    for (const auto& [v, c] : empirical_cdf(samples)) {
      rows.push_back({mode, algorithm_name(alg), quantity, v, c});
    }
  }
  return rows;
}

std::string format_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

void write_results_csv(const RunRecord& record, std::ostream& out) {
  const std::string mode = femto_mode_name(record.config.mode);
  const std::string seed = std::to_string(record.config.seed);
  out << "mode,algorithm,drop,link,avg_rate_bps,seed\n";
  for (const auto& d : record.drops) {
    for (const auto& r : d.runs) {
      const std::string prefix = mode + "," + algorithm_name(r.algorithm) + "," +
                                 std::to_string(d.drop) + ",";
      for (std::size_t i = 0; i < r.link_rate.size(); ++i) {
        out << prefix << i << "," << format_double(r.link_rate[i]) << "," << seed << "\n";
      }
      out << prefix << "-1," << format_double(r.harmonic_mean) << "," << seed << "\n";
    }
  }
}

void write_cdf_csv(const RunRecord& record, std::ostream& out) {
  out << "mode,algorithm,quantity,value,cdf\n";
  for (const char* q : {"link-rate", "system-utility"}) {
    for (const auto& row : compute_cdf(record, q)) {
      out << row.mode << "," << row.algorithm << "," << row.quantity << ","
          << format_double(row.value) << "," << format_double(row.cdf) << "\n";
    }
  }
}

void write_overhead_csv(const RunRecord& record, std::ostream& out) {
  out << "round,node,kind,bytes\n";
  if (record.drops.empty()) return;
  for (const auto& r : record.drops.front().runs) {
    if (r.algorithm != Algorithm::kFirstOrderBP) continue;
    for (const auto& row : r.overhead) {
      out << row.round << "," << row.node << "," << row.kind << "," << row.bytes << "\n";
    }
    return;
  }
}

void write_summary_csv(const RunRecord& record, std::ostream& out) {
  out << "mode,algorithm,drops,seconds,message_bytes,optimality_violations,"
         "median_link_rate_bps,p20_link_rate_bps,median_harmonic_mean_bps\n";
  auto quantile = [](std::vector<double> v, double q) {
    if (v.empty()) return 0.0;
    std::sort(v.begin(), v.end());
    const auto k = static_cast<std::size_t>(std::ceil(q * static_cast<double>(v.size())));
    return v[std::clamp<std::size_t>(k, 1, v.size()) - 1];
  };
  for (Algorithm alg : record.config.algorithms) {
    double seconds = 0.0;
    std::uint64_t bytes = 0;
    std::size_t violations = 0;
    for (const auto& d : record.drops) {
      for (const auto& r : d.runs) {
        if (r.algorithm != alg) continue;
        seconds += r.seconds;
        bytes += r.message_bytes;
        violations += r.optimality_violations;
      }
    }
    const auto rates = record.link_rates(alg);
    out << femto_mode_name(record.config.mode) << "," << algorithm_name(alg) << ","
        << record.drops.size() << "," << format_double(seconds) << "," << bytes << ","
        << violations << "," << format_double(quantile(rates, 0.5)) << ","
        << format_double(quantile(rates, 0.2)) << ","
        << format_double(quantile(record.harmonic_means(alg), 0.5)) << "\n";
  }
}

}  // namespace icbp
