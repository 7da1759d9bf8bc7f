#include "icbp/bp_gaussian.hpp"

#include <cmath>
#include <limits>

namespace icbp {

namespace {

std::uint64_t matmul_flops(const Matrix& a, Eigen::Index cols) {
  return static_cast<std::uint64_t>(a.rows() * a.cols() * cols);
}

}  // namespace

BeliefMoments moments_from_log_likelihood(const SchedulingSet& set,
                                          const std::vector<double>& delta, double u,
                                          OpCounters* counters) {
  const std::size_t m = set.size();
  std::vector<double> w(m);
  double mx = -std::numeric_limits<double>::infinity();
  for (std::size_t k = 0; k < m; ++k) mx = std::max(mx, u * delta[k]);
  double total = 0.0;
  for (std::size_t k = 0; k < m; ++k) {
    w[k] = std::exp(u * delta[k] - mx);
    total += w[k];
  }
  const auto n = static_cast<Eigen::Index>(set.dimension());
  BeliefMoments out{Vector::Zero(n), Matrix::Zero(n, n)};
  for (std::size_t k = 0; k < m; ++k) out.mean.noalias() += (w[k] / total) * set[k];
  for (std::size_t k = 0; k < m; ++k) {
    const Vector d = set[k] - out.mean;
    out.q.noalias() += (w[k] / total) * (d * d.transpose());
  }
  out.q *= u;
  if (counters) counters->linalg_flops += m * static_cast<std::uint64_t>(n + n * n);
  return out;
}

EdgeMoments uniform_moments(const InterferenceSystem& system, const FactorGraph& graph,
                            double u) {
  EdgeMoments m;
  m.link.resize(system.num_links());
  for (std::size_t j = 0; j < system.num_links(); ++j) {
    const SchedulingSet& set = system.candidates(j);
    m.link[j] = {set.mean(), u * set.covariance()};
  }
  m.edge.reserve(graph.edges.size());
  for (const auto& [i, j] : graph.edges) {
    (void)i;
    m.edge.push_back(m.link[j]);
  }
  return m;
}

InterferenceMoments interference_moments(const InterferenceSystem& system,
                                         const FactorGraph& graph, const EdgeMoments& moments,
                                         LinkId i, OpCounters* counters) {
  const auto n_z = static_cast<Eigen::Index>(system.n_z());
  InterferenceMoments out{Vector::Zero(n_z), Matrix::Zero(n_z, n_z)};
  for (LinkId j : graph.rx_neighbors[i]) {
    const Matrix* a = system.mixing(i, j);
    if (!a) continue;
    const BeliefMoments& b = moments.edge[graph.edge_index(i, j)];
    out.s_hat.noalias() += *a * b.mean;
    out.q_s.noalias() += *a * b.q * a->transpose();
    if (counters) {
      counters->linalg_flops += matmul_flops(*a, 1) + matmul_flops(*a, a->cols()) +
                                matmul_flops(*a, a->rows());
    }
  }
  return out;
}

InterferenceMoments conditional_interference_moments(const InterferenceSystem& system,
                                                     const FactorGraph& graph,
                                                     const EdgeMoments& moments,
                                                     const InterferenceMoments& base, LinkId i,
                                                     LinkId j, const Vector& x_j,
                                                     bool* clamped) {
  if (clamped) *clamped = false;
  const Matrix* a = system.mixing(i, j);
  if (!a) return base;
  const BeliefMoments& b = moments.edge[graph.edge_index(i, j)];
  InterferenceMoments out;
  out.s_hat = base.s_hat + *a * (x_j - b.mean);
  out.q_s = base.q_s - *a * b.q * a->transpose();
  const double scale = base.q_s.cwiseAbs().maxCoeff();
  if (out.q_s.rows() == 1) {
    if (out.q_s(0, 0) < -1e-9 * scale) {
      if (clamped) *clamped = true;
      out.q_s(0, 0) = 0.0;
    }
  } else {
    Eigen::SelfAdjointEigenSolver<Matrix> eig(0.5 * (out.q_s + out.q_s.transpose()),
                                              Eigen::EigenvaluesOnly);
    if (eig.eigenvalues().minCoeff() < -1e-9 * scale) {
      out.q_s = clamp_psd(out.q_s);
      if (clamped) *clamped = true;
    }
  }
  return out;
}

PartitionEvaluator::PartitionEvaluator(const Matrix& q_s, double u,
                                       const QuadratureConfig& config)
    : nodes_(q_s / u, config), u_(u) {
  v_buf_.resize(nodes_.size());
}

double PartitionEvaluator::log_expect_exp(const LinkUtility& f, const Vector& x,
                                          const Vector& mean, OpCounters* counters) const {
  nodes_.place(mean, z_buf_);
  f.values(x, z_buf_, v_buf_.data());
  const auto& lw = nodes_.log_weights();
  for (std::size_t k = 0; k < v_buf_.size(); ++k) v_buf_[k] = lw[k] + u_ * v_buf_[k];
  if (counters) counters->utility_evals += v_buf_.size();
  return log_sum_exp(v_buf_.data(), v_buf_.size());
}

double log_partition_self(const LinkUtility& f, const Vector& x_i, const Vector& s_hat,
                          const Matrix& q_s, double u, const QuadratureConfig& config,
                          OpCounters* counters) {
  const PartitionEvaluator eval(q_s, u, config);
  return eval.log_expect_exp(f, x_i, s_hat, counters) / u;
}

namespace {

double cross_value(const PartitionEvaluator& eval, const LinkUtility& f, const SchedulingSet& set_i,
                   const std::vector<double>& delta_self, const Vector& mean,
                   std::vector<double>& buf, OpCounters* counters) {
  const double u = eval.u();
  buf.resize(set_i.size());
  for (std::size_t k = 0; k < set_i.size(); ++k) {
    buf[k] = u * delta_self[k] + eval.log_expect_exp(f, set_i[k], mean, counters);
  }
  return log_sum_exp(buf.data(), buf.size()) / u;
}

}  // namespace

double log_partition_cross(const LinkUtility& f, const SchedulingSet& set_i,
                           const std::vector<double>& delta_self, const Vector& s_hat,
                           const Matrix& q_s, double u, const QuadratureConfig& config,
                           OpCounters* counters) {
  const PartitionEvaluator eval(q_s, u, config);
  std::vector<double> buf;
  return cross_value(eval, f, set_i, delta_self, s_hat, buf, counters);
}

std::vector<std::vector<double>> rx_update_gaussian(
    const InterferenceSystem& system, const FactorGraph& graph, const EdgeMoments& moments,
    const std::vector<double>& delta_self, LinkId i, double u, const QuadratureConfig& config,
    OpCounters* counters, const std::vector<bool>* compute_cross,
    GaussianDiagnostics* diagnostics, InterferenceMoments* moments_out) {
  const auto& nbrs = graph.rx_neighbors[i];
  const InterferenceMoments base = interference_moments(system, graph, moments, i, counters);
  if (moments_out) *moments_out = base;
  const LinkUtility& f = system.utility(i);
  const SchedulingSet& set_i = system.candidates(i);

  auto note_nodes = [&](const PartitionEvaluator& e) {
    if (diagnostics && e.nodes().monte_carlo()) {
      ++diagnostics->monte_carlo_fallbacks;
      diagnostics->monte_carlo_samples += e.nodes().size();
    }
  };

  std::vector<std::vector<double>> out(nbrs.size());
  for (std::size_t r = 0; r < nbrs.size(); ++r) {
    const LinkId j = nbrs[r];
    if (j == i) {
      const PartitionEvaluator eval(base.q_s, u, config);
      note_nodes(eval);
      out[r].resize(set_i.size());
      for (std::size_t k = 0; k < set_i.size(); ++k) {
        out[r][k] = eval.log_expect_exp(f, set_i[k], base.s_hat, counters) / u;
      }
      shift_to_max_zero(out[r]);
      continue;
    }
    if (compute_cross && !(*compute_cross)[r]) continue;
    const SchedulingSet& set_j = system.candidates(j);
    // Q^s_ij does not depend on x_j; only the mean shifts.
    bool clamped = false;
    const InterferenceMoments cond0 = conditional_interference_moments(
        system, graph, moments, base, i, j, moments.edge[graph.edge_index(i, j)].mean, &clamped);
    if (clamped && diagnostics) ++diagnostics->psd_clamps;
    const PartitionEvaluator eval(cond0.q_s, u, config);
    note_nodes(eval);
    const Matrix& a = *system.mixing(i, j);
    const Vector& xhat = moments.edge[graph.edge_index(i, j)].mean;
    std::vector<double> buf;
    out[r].resize(set_j.size());
    for (std::size_t c = 0; c < set_j.size(); ++c) {
      const Vector mean = base.s_hat + a * (set_j[c] - xhat);
      out[r][c] = cross_value(eval, f, set_i, delta_self, mean, buf, counters);
    }
    if (counters) {
      counters->linalg_flops += matmul_flops(a, a.cols()) + matmul_flops(a, a.rows()) +
                                set_j.size() * matmul_flops(a, 1);
    }
    shift_to_max_zero(out[r]);
  }
  return out;
}

TxUpdate tx_update_gaussian(const InterferenceSystem& system, const FactorGraph& graph,
                            const std::vector<std::vector<double>>& incoming, LinkId j, double u,
                            OpCounters* counters, const std::vector<bool>* want_edge_moments) {
  const auto& nbrs = graph.tx_neighbors[j];
  const SchedulingSet& set = system.candidates(j);
  const std::size_t m = set.size();
  TxUpdate out;
  out.aggregate.assign(m, 0.0);
  for (const auto& table : incoming) {
    for (std::size_t a = 0; a < m; ++a) out.aggregate[a] += table[a];
  }
  out.to_rx.resize(nbrs.size());
  out.edge.resize(nbrs.size());
  for (std::size_t r = 0; r < nbrs.size(); ++r) {
    auto& t = out.to_rx[r];
    t.resize(m);
    for (std::size_t a = 0; a < m; ++a) t[a] = out.aggregate[a] - incoming[r][a];
    shift_to_max_zero(t);
    if (!want_edge_moments || (*want_edge_moments)[r]) {
      out.edge[r] = moments_from_log_likelihood(set, t, u, counters);
    }
  }
  if (counters) counters->linalg_flops += 2 * m * nbrs.size();
  shift_to_max_zero(out.aggregate);
  out.link = moments_from_log_likelihood(set, out.aggregate, u, counters);
  return out;
}

GaussianBPResult run_gaussian_bp(const InterferenceSystem& system,
                                 const GaussianBPConfig& config) {
  config.bp.validate();
  const FactorGraph graph = build_factor_graph(system);
  const std::size_t n = system.num_links();
  GaussianBPResult result;
  const double u = effective_temperature(system, config.bp);
  result.u_effective = u;
  result.rx_ops.resize(n);
  result.tx_ops.resize(n);

  EdgeMoments moments = uniform_moments(system, graph, u);
  std::vector<std::vector<double>> to_rx(graph.edges.size());
  std::vector<std::vector<double>> to_tx(graph.edges.size());
  for (std::size_t e = 0; e < graph.edges.size(); ++e) {
    to_rx[e].assign(system.candidates(graph.edges[e].second).size(), 0.0);
  }
  std::vector<std::vector<double>> aggregate(n);

  for (std::size_t t = 0; t < config.bp.rounds; ++t) {
    GaussianRoundTrace trace;
    for (std::size_t i = 0; i < n; ++i) {
      InterferenceMoments im;
      auto tables = rx_update_gaussian(system, graph, moments, to_rx[graph.edge_index(i, i)], i,
                                       u, config.quadrature, &result.rx_ops[i], nullptr,
                                       &result.diagnostics, &im);
      const auto& nbrs = graph.rx_neighbors[i];
      for (std::size_t r = 0; r < nbrs.size(); ++r) {
        const std::size_t e = graph.edge_index(i, nbrs[r]);
        result.messages.unicast(tables[r].size());
        to_tx[e] = std::move(tables[r]);
      }
      if (config.bp.record_history) trace.rx_moments.push_back(std::move(im));
    }
    for (std::size_t j = 0; j < n; ++j) {
      const auto& nbrs = graph.tx_neighbors[j];
      std::vector<std::vector<double>> incoming(nbrs.size());
      for (std::size_t r = 0; r < nbrs.size(); ++r) {
        incoming[r] = to_tx[graph.edge_index(nbrs[r], j)];
      }
      TxUpdate upd = tx_update_gaussian(system, graph, incoming, j, u, &result.tx_ops[j]);
      for (std::size_t r = 0; r < nbrs.size(); ++r) {
        const std::size_t e = graph.edge_index(nbrs[r], j);
        moments.edge[e] = std::move(upd.edge[r]);
        if (nbrs[r] == j) {
          result.messages.unicast(upd.to_rx[r].size());
        } else {
          const auto nx = system.n_x(j);
          result.messages.unicast(nx + nx * nx);
        }
        to_rx[e] = std::move(upd.to_rx[r]);
      }
      moments.link[j] = std::move(upd.link);
      aggregate[j] = std::move(upd.aggregate);
    }
    if (config.bp.record_history) {
      trace.to_tx = to_tx;
      result.history.push_back(std::move(trace));
    }
  }

  result.profile.choice.resize(n);
  for (std::size_t j = 0; j < n; ++j) result.profile.choice[j] = argmax_lowest(aggregate[j]);
  result.final_log_likelihood = std::move(aggregate);
  return result;
}

}  // namespace icbp
