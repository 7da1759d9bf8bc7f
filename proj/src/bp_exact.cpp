#include "icbp/bp_exact.hpp"

#include <cmath>
#include <limits>

#include "icbp/quadrature.hpp"

namespace icbp {

namespace {

constexpr double kNegInf = -std::numeric_limits<double>::infinity();

// Streaming log-sum-exp accumulator.
struct LogSum {
  double max = kNegInf;
  double sum = 0.0;

  void add(double v) {
    if (v == kNegInf) return;
    if (v <= max) {
      sum += std::exp(v - max);
    } else {
      sum = sum * std::exp(max - v) + 1.0;
      max = v;
    }
  }
  double value() const { return max == kNegInf ? kNegInf : max + std::log(sum); }
};

// Returns false when every entry is -inf or NaN.
bool normalize_log(std::vector<double>& v) {
  const double lse = log_sum_exp(v.data(), v.size());
  if (!std::isfinite(lse)) return false;
  for (double& x : v) x -= lse;
  return true;
}

std::vector<double> uniform_log(std::size_t n) {
  return std::vector<double>(n, -std::log(static_cast<double>(n)));
}

}  // namespace

SchedulingProfile profile_from_index(const InterferenceSystem& system, std::size_t index) {
  SchedulingProfile p;
  p.choice.resize(system.num_links());
  for (std::size_t j = system.num_links(); j-- > 0;) {
    const std::size_t s = system.candidates(j).size();
    p.choice[j] = index % s;
    index /= s;
  }
  return p;
}

GibbsTable gibbs_distribution(const InterferenceSystem& system, double u,
                              std::size_t max_profiles) {
  const std::size_t count = system.profile_count();
  if (count > max_profiles) {
    throw OracleInfeasible("Gibbs enumeration needs " + std::to_string(count) +
                           " profiles, cap is " + std::to_string(max_profiles));
  }
  GibbsTable t;
  t.objective.resize(count);
  t.probability.resize(count);
  for (std::size_t k = 0; k < count; ++k) {
    t.objective[k] = total_utility(system, profile_from_index(system, k));
    t.probability[k] = u * t.objective[k];
  }
  t.log_partition = log_sum_exp(t.probability.data(), count);
  for (double& p : t.probability) p = std::exp(p - t.log_partition);
  return t;
}

std::vector<std::vector<double>> gibbs_marginals(const InterferenceSystem& system,
                                                 const GibbsTable& table) {
  std::vector<std::vector<double>> m(system.num_links());
  for (std::size_t j = 0; j < system.num_links(); ++j) {
    m[j].assign(system.candidates(j).size(), 0.0);
  }
  for (std::size_t k = 0; k < table.probability.size(); ++k) {
    const SchedulingProfile p = profile_from_index(system, k);
    for (std::size_t j = 0; j < p.choice.size(); ++j) m[j][p.choice[j]] += table.probability[k];
  }
  return m;
}

MessageTable uniform_messages(const InterferenceSystem& system, const FactorGraph& graph) {
  MessageTable t;
  t.to_tx.reserve(graph.edges.size());
  t.to_rx.reserve(graph.edges.size());
  for (const auto& [i, j] : graph.edges) {
    (void)i;
    t.to_tx.push_back(uniform_log(system.candidates(j).size()));
    t.to_rx.push_back(uniform_log(system.candidates(j).size()));
  }
  return t;
}

std::vector<double> rx_update_exact(const InterferenceSystem& system, const FactorGraph& graph,
                                    const MessageTable& messages, LinkId i, LinkId j, double u,
                                    OpCounters* counters) {
  const auto& nbrs = graph.rx_neighbors[i];
  if (nbrs.size() > kExactNeighborCap) {
    throw ConfigError("receiver " + std::to_string(i) + " has " + std::to_string(nbrs.size()) +
                      " neighbors; exact BP is capped at " + std::to_string(kExactNeighborCap) +
                      " (use gauss-bp)");
  }
  // Precomputed interference contributions A_ik x_k for every candidate.
  const auto n_z = static_cast<Eigen::Index>(system.n_z());
  std::vector<std::vector<Vector>> contrib(nbrs.size());
  std::vector<const std::vector<double>*> belief(nbrs.size());
  std::size_t pos_j = 0;
  std::size_t pos_i = 0;
  for (std::size_t r = 0; r < nbrs.size(); ++r) {
    const LinkId k = nbrs[r];
    if (k == j) pos_j = r;
    if (k == i) pos_i = r;
    const SchedulingSet& set = system.candidates(k);
    const Matrix* a = system.mixing(i, k);
    contrib[r].resize(set.size());
    for (std::size_t c = 0; c < set.size(); ++c) {
      contrib[r][c] = a ? Vector(*a * set[c]) : Vector::Zero(n_z);
    }
    belief[r] = &messages.to_rx[graph.edge_index(i, k)];
  }

  std::vector<std::size_t> others;
  for (std::size_t r = 0; r < nbrs.size(); ++r) {
    if (r != pos_j) others.push_back(r);
  }
  const SchedulingSet& set_j = system.candidates(j);
  const SchedulingSet& set_i = system.candidates(i);
  const LinkUtility& f = system.utility(i);

  std::vector<double> out(set_j.size());
  std::vector<std::size_t> idx(others.size());
  Vector z(n_z);
  for (std::size_t a = 0; a < set_j.size(); ++a) {
    LogSum acc;
    std::fill(idx.begin(), idx.end(), 0);
    while (true) {
      z = contrib[pos_j][a];
      double log_w = 0.0;
      std::size_t xi = (pos_j == pos_i) ? a : 0;
      for (std::size_t q = 0; q < others.size(); ++q) {
        const std::size_t r = others[q];
        z += contrib[r][idx[q]];
        log_w += (*belief[r])[idx[q]];
        if (r == pos_i) xi = idx[q];
      }
      if (log_w != kNegInf) acc.add(log_w + u * f.value(set_i[xi], z));
      if (counters) {
        ++counters->utility_evals;
        counters->linalg_flops += others.size() * static_cast<std::uint64_t>(n_z);
      }
      std::size_t q = 0;
      for (; q < others.size(); ++q) {
        if (++idx[q] < system.candidates(nbrs[others[q]]).size()) break;
        idx[q] = 0;
      }
      if (q == others.size()) break;
    }
    out[a] = acc.value();
  }
  if (!normalize_log(out)) out = uniform_log(out.size());
  return out;
}

std::vector<double> tx_update_exact(const FactorGraph& graph, const MessageTable& messages,
                                    LinkId j, LinkId i, double damping,
                                    const std::vector<double>* previous,
                                    std::size_t* degenerate) {
  const std::size_t size = messages.to_tx[graph.edge_index(j, j)].size();
  std::vector<double> out(size, 0.0);
  for (LinkId l : graph.tx_neighbors[j]) {
    if (l == i) continue;
    const auto& m = messages.to_tx[graph.edge_index(l, j)];
    for (std::size_t a = 0; a < size; ++a) out[a] += m[a];
  }
  if (damping > 0.0 && previous) {
    for (std::size_t a = 0; a < size; ++a) {
      out[a] = (1.0 - damping) * out[a] + damping * (*previous)[a];
    }
  }
  if (!normalize_log(out)) {
    if (degenerate) ++*degenerate;
    out = uniform_log(size);
  }
  return out;
}

std::vector<double> marginal_exact(const FactorGraph& graph, const MessageTable& messages,
                                   LinkId j) {
  const std::size_t size = messages.to_tx[graph.edge_index(j, j)].size();
  std::vector<double> log_p(size, 0.0);
  for (LinkId l : graph.tx_neighbors[j]) {
    const auto& m = messages.to_tx[graph.edge_index(l, j)];
    for (std::size_t a = 0; a < size; ++a) log_p[a] += m[a];
  }
  if (!normalize_log(log_p)) log_p = uniform_log(size);
  for (double& v : log_p) v = std::exp(v);
  return log_p;
}

std::size_t final_decision_exact(const FactorGraph& graph, const MessageTable& messages,
                                 LinkId j) {
  const std::size_t size = messages.to_tx[graph.edge_index(j, j)].size();
  std::vector<double> log_p(size, 0.0);
  for (LinkId l : graph.tx_neighbors[j]) {
    const auto& m = messages.to_tx[graph.edge_index(l, j)];
    for (std::size_t a = 0; a < size; ++a) log_p[a] += m[a];
  }
  return argmax_lowest(log_p);
}

ExactBPResult run_exact_bp(const InterferenceSystem& system, const BPConfig& config) {
  config.validate();
  const FactorGraph graph = build_factor_graph(system);
  const std::size_t n = system.num_links();
  ExactBPResult result;
  result.u_effective = effective_temperature(system, config);
  result.rx_ops.resize(n);
  result.tx_ops.resize(n);
  MessageTable msg = uniform_messages(system, graph);

  for (std::size_t t = 0; t < config.rounds; ++t) {
    // RX half: every new RX->TX message depends only on the TX->RX messages
    // from the previous half-round.
    std::vector<std::vector<double>> to_tx(graph.edges.size());
    for (std::size_t e = 0; e < graph.edges.size(); ++e) {
      const auto [i, j] = graph.edges[e];
      to_tx[e] = rx_update_exact(system, graph, msg, i, j, result.u_effective, &result.rx_ops[i]);
      result.messages.unicast(to_tx[e].size());
    }
    msg.to_tx = std::move(to_tx);
    // TX half.
    std::vector<std::vector<double>> to_rx(graph.edges.size());
    for (std::size_t e = 0; e < graph.edges.size(); ++e) {
      const auto [i, j] = graph.edges[e];
      to_rx[e] = tx_update_exact(graph, msg, j, i, config.damping, &msg.to_rx[e],
                                 &result.degenerate_messages);
      result.tx_ops[j].linalg_flops += to_rx[e].size() * graph.tx_neighbors[j].size();
      result.messages.unicast(to_rx[e].size());
    }
    msg.to_rx = std::move(to_rx);
    if (config.record_history) result.history.push_back(msg);
  }

  result.profile.choice.resize(n);
  result.marginals.resize(n);
  for (std::size_t j = 0; j < n; ++j) {
    result.profile.choice[j] = final_decision_exact(graph, msg, j);
    result.marginals[j] = marginal_exact(graph, msg, j);
  }
  return result;
}

}  // namespace icbp
