#include <cstdio>
#include <fstream>
#include <iostream>
#include <string>

#include <CLI11.hpp>
#include <json.hpp>

#include "icbp/baselines.hpp"
#include "icbp/bp_exact.hpp"
#include "icbp/bp_first_order.hpp"
#include "icbp/bp_gaussian.hpp"
#include "icbp/instance_io.hpp"
#include "icbp/scenario_femto.hpp"
#include "icbp/sim_harness.hpp"

namespace {

using namespace icbp;

struct Options {
  std::string mode = "onoff";
  std::string algorithms = "reuse1,fo-bp,gauss-bp,exhaustive";
  std::string algorithm = "gauss-bp";
  std::string utility = "pf";
  std::string scenario = "femto-grid";
  std::size_t drops = 100;
  std::size_t first_drop = 0;
  std::size_t drop = 0;
  std::size_t slots = 100;
  std::size_t rounds = 0;
  double u = 50.0;
  double damping = 0.0;
  double tau_db = 0.0;
  bool broadcast_hessian = false;
  double alpha = 0.1;
  std::uint64_t seed = 1;
  double wall_loss_db = -1.0;
  int quad_order = 9;
  std::size_t oracle_max_profiles = 1'000'000;
  std::size_t threads = 1;
  std::string out, cdf_out, overhead_out, summary_out, instance, instance_out, trace;
};

class Output {
 public:
  explicit Output(const std::string& path) {
    if (path.empty() || path == "-") return;
    file_.open(path);
    if (!file_) throw ConfigError("cannot write '" + path + "'");
  }
  std::ostream& stream() { return file_.is_open() ? file_ : std::cout; }

 private:
  std::ofstream file_;
};

ExperimentConfig experiment_config(const Options& o) {
  ExperimentConfig c;
  c.mode = parse_femto_mode(o.mode);
  c.algorithms = parse_algorithm_list(o.algorithms);
  c.drops = o.drops;
  c.first_drop = o.first_drop;
  c.slots = o.slots;
  if (o.rounds > 0) c.rounds = o.rounds;
  c.u = o.u;
  c.damping = o.damping;
  c.strong_thresh_db = o.tau_db;
  c.broadcast_hessian = o.broadcast_hessian;
  c.alpha = o.alpha;
  c.seed = o.seed;
  c.utility = parse_utility_spec(o.utility);
  if (o.wall_loss_db >= 0.0) c.femto.wall_loss_db = o.wall_loss_db;
  c.quadrature.order = o.quad_order;
  c.budget.max_profiles = o.oracle_max_profiles;
  c.threads = o.threads;
  return c;
}

FemtoMode mode_from_rate(RateMode m) {
  switch (m) {
    case RateMode::kFlat: return FemtoMode::kOnOff;
    case RateMode::kSubband: return FemtoMode::kSubband;
    case RateMode::kBeamforming: return FemtoMode::kBeamforming;
  }
  return FemtoMode::kOnOff;
}

FemtoInstance femto_instance(const Options& o, const ExperimentConfig& c) {
  if (!o.instance.empty()) {
    RateInstance r = load_instance(o.instance);
    const FemtoMode mode = mode_from_rate(r.rate_models.at(0).mode);
    return {std::move(r.system), std::move(r.rate_models), mode,
            mode == FemtoMode::kBeamforming ? beam_angles(c.femto.beam_angles)
                                            : std::vector<double>{}};
  }
  if (o.scenario != "femto-grid") throw ConfigError("unknown scenario '" + o.scenario + "'");
  const FemtoDrop d = generate_drop(c.femto, c.seed, o.drop);
  return build_instance(c.femto, draw_channels(c.femto, d, c.mode, 0), c.utility);
}

nlohmann::json table_json(const std::vector<std::vector<double>>& tables) {
  nlohmann::json j = nlohmann::json::array();
  for (const auto& t : tables) j.push_back(t);
  return j;
}

int cmd_simulate(const Options& o) {
  const ExperimentConfig c = experiment_config(o);
  const RunRecord rec = run_experiment(c);
  {
    Output out(o.out);
    write_results_csv(rec, out.stream());
  }
  if (!o.cdf_out.empty()) {
    Output out(o.cdf_out);
    write_cdf_csv(rec, out.stream());
  }
  if (!o.overhead_out.empty()) {
    Output out(o.overhead_out);
    write_overhead_csv(rec, out.stream());
  }
  if (!o.summary_out.empty()) {
    Output out(o.summary_out);
    write_summary_csv(rec, out.stream());
  }
  if (rec.optimality_violations() > 0) {
    throw EvaluationError(0, std::to_string(rec.optimality_violations()) +
                                 " solves beat the exhaustive optimum");
  }
  return 0;
}

int cmd_solve(const Options& o) {
  ExperimentConfig c = experiment_config(o);
  const Algorithm alg = parse_algorithm(o.algorithm);
  c.algorithms = {alg};
  const FemtoInstance inst = femto_instance(o, c);
  nlohmann::json result;
  result["algorithm"] = algorithm_name(alg);
  nlohmann::json trace = nlohmann::json::array();
  SchedulingProfile profile;
  std::vector<OverheadRow> overhead;
  BPConfig bp;
  bp.u = c.u;
  bp.damping = c.damping;
  bp.rounds = c.rounds_for(alg);
  bp.record_history = !o.trace.empty();
  if (alg == Algorithm::kExactBP) {
    const auto r = run_exact_bp(inst.system, bp);
    profile = r.profile;
    result["message_bytes"] = r.messages.total_bytes();
    result["marginals"] = table_json(r.marginals);
    for (std::size_t t = 0; t < r.history.size(); ++t) {
      trace.push_back({{"round", t + 1},
                       {"to_tx", table_json(r.history[t].to_tx)},
                       {"to_rx", table_json(r.history[t].to_rx)}});
    }
  } else if (alg == Algorithm::kGaussBP) {
    GaussianBPConfig g{bp, c.quadrature};
    const auto r = run_gaussian_bp(inst.system, g);
    profile = r.profile;
    result["message_bytes"] = r.messages.total_bytes();
    for (std::size_t t = 0; t < r.history.size(); ++t) {
      nlohmann::json rx = nlohmann::json::array();
      for (const auto& m : r.history[t].rx_moments) {
        std::vector<double> s(m.s_hat.data(), m.s_hat.data() + m.s_hat.size());
        rx.push_back({{"s_hat", s}, {"q_s_trace", m.q_s.trace()}});
      }
      trace.push_back({{"round", t + 1}, {"rx", rx}, {"delta", table_json(r.history[t].to_tx)}});
    }
  } else if (alg == Algorithm::kFirstOrderBP) {
    FirstOrderConfig f{bp, c.quadrature, c.strong_thresh_db, c.broadcast_hessian};
    const auto r = run_first_order_bp(inst.system, f);
    profile = r.profile;
    result["message_bytes"] = r.messages.total_bytes();
    result["strong_cross_edges"] = r.classification.strong_cross_edges(build_factor_graph(inst.system));
    overhead = overhead_rows(r.history);
  } else {
    profile = solve_instance(alg, inst, c).profile;
  }
  result["profile"] = profile.choice;
  result["objective"] = total_utility(inst.system, profile);
  result["link_rates_bps"] = realized_rates(inst, profile);
  if (!o.trace.empty()) {
    Output t(o.trace);
    t.stream() << trace.dump(2) << "\n";
  }
  if (!o.overhead_out.empty()) {
    Output oh(o.overhead_out);
    oh.stream() << "round,node,kind,bytes\n";
    for (const auto& row : overhead) {
      oh.stream() << row.round << "," << row.node << "," << row.kind << "," << row.bytes << "\n";
    }
  }
  Output out(o.out);
  out.stream() << result.dump(2) << "\n";
  return 0;
}

int cmd_drop(const Options& o) {
  const ExperimentConfig c = experiment_config(o);
  const FemtoDrop d = generate_drop(c.femto, c.seed, o.drop);
  if (!o.instance_out.empty()) {
    const FemtoInstance inst = build_instance(c.femto, draw_channels(c.femto, d, c.mode, 0),
                                              c.utility);
    save_instance({inst.system, inst.rate_models, c.utility}, o.instance_out);
  }
  Output out(o.out);
  out.stream() << drop_to_json(d, c.femto, c.mode).dump(2) << "\n";
  return 0;
}

std::string escape(const std::string& s) {
  std::string out;
  for (char ch : s) {
    if (ch == '"' || ch == '\\') out.push_back('\\');
    out.push_back(ch == '\n' ? ' ' : ch);
  }
  return out;
}

int fail(const std::string& kind, const std::string& message, int code,
         const std::string& extra = "") {
  std::fprintf(stderr, "error: kind=%s%s message=\"%s\"\n", kind.c_str(), extra.c_str(),
               escape(message).c_str());
  return code;
}

}  // namespace

int main(int argc, char** argv) {
  Options o;
  CLI::App app{"Interference coordination by belief propagation"};
  app.require_subcommand(1);

  auto common = [&](CLI::App* c) {
    c->add_option("--mode", o.mode, "onoff|subband|beamforming");
    c->add_option("--utility", o.utility, "pf|sumrate|beta:<b>");
    c->add_option("--rounds", o.rounds, "BP rounds (0 = per-algorithm default)");
    c->add_option("--u", o.u, "Gibbs temperature parameter");
    c->add_option("--damping", o.damping, "Exact-BP message damping in [0, 1)");
    c->add_option("--strong-thresh-db", o.tau_db, "Strong-edge threshold in dB");
    c->add_flag("--broadcast-hessian", o.broadcast_hessian, "Broadcast D_i2 as well");
    c->add_option("--quad-order", o.quad_order, "Gauss-Hermite points per direction");
    c->add_option("--seed", o.seed, "Base seed");
    c->add_option("--wall-loss-db", o.wall_loss_db, "Wall loss (default by mode)");
    c->add_option("--oracle-max-profiles", o.oracle_max_profiles, "Exhaustive search budget");
    c->add_option("--out", o.out, "Output path (default stdout)");
  };

  auto* sim = app.add_subcommand("simulate", "Run one experiment over many drops");
  common(sim);
  sim->add_option("--algorithms", o.algorithms, "Comma-separated algorithm list");
  sim->add_option("--drops", o.drops, "Number of drops");
  sim->add_option("--first-drop", o.first_drop, "Index of the first drop");
  sim->add_option("--slots", o.slots, "Slots per drop (onoff)");
  sim->add_option("--alpha", o.alpha, "EWMA factor");
  sim->add_option("--threads", o.threads, "Worker threads");
  sim->add_option("--cdf-out", o.cdf_out, "CDF table output");
  sim->add_option("--overhead-report", o.overhead_out, "First-order BP overhead CSV");
  sim->add_option("--summary-out", o.summary_out, "Timing and byte totals");

  auto* solve = app.add_subcommand("solve", "Solve a single instance");
  common(solve);
  solve->add_option("--algorithm", o.algorithm,
                    "reuse1|exhaustive|serving-only|exact-bp|gauss-bp|fo-bp");
  solve->add_option("--instance", o.instance, "Instance JSON (else a femto drop)");
  solve->add_option("--scenario", o.scenario, "femto-grid");
  solve->add_option("--drop", o.drop, "Drop index");
  solve->add_option("--trace", o.trace, "Per-round message trace JSON");
  solve->add_option("--overhead-report", o.overhead_out, "First-order BP overhead CSV");

  auto* drop = app.add_subcommand("drop", "Dump a femto drop as JSON");
  common(drop);
  drop->add_option("--drop", o.drop, "Drop index");
  drop->add_option("--instance-out", o.instance_out, "Also write the instance JSON");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    return fail("usage", e.what(), 64);
  }

  try {
    if (*sim) return cmd_simulate(o);
    if (*solve) return cmd_solve(o);
    return cmd_drop(o);
  } catch (const OracleInfeasible& e) {
    return fail("oracle-infeasible", e.what(), 3);
  } catch (const EvaluationError& e) {
    return fail("evaluation", e.what(), 4, " link=" + std::to_string(e.link()));
  } catch (const ConfigError& e) {
    return fail("config", e.what(), 2);
  } catch (const std::exception& e) {
    return fail("internal", e.what(), 1);
  }
}
