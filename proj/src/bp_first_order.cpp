#include "icbp/bp_first_order.hpp"

#include <cmath>
#include <limits>
#include <map>

namespace icbp {

std::size_t EdgeClassification::strong_cross_edges(const FactorGraph& graph) const {
  std::size_t count = 0;
  for (std::size_t e = 0; e < graph.edges.size(); ++e) {
    if (graph.edges[e].first != graph.edges[e].second && strong[e]) ++count;
  }
  return count;
}

EdgeClassification classify_edges(const InterferenceSystem& system, const FactorGraph& graph,
                                  double threshold_db) {
  if (std::isnan(threshold_db)) throw ConfigError("strong-edge threshold must not be NaN");
  EdgeClassification c;
  c.threshold_db = threshold_db;
  c.strong.resize(graph.edges.size());
  const double ratio = std::pow(10.0, threshold_db / 10.0);
  for (std::size_t e = 0; e < graph.edges.size(); ++e) {
    const auto [i, j] = graph.edges[e];
    if (i == j) {
      c.strong[e] = true;
      continue;
    }
    const double gain = system.mixing(i, j)->norm();
    const double serving = system.link(i).serving_gain;
    c.strong[e] = std::isinf(ratio) ? false : gain >= ratio * serving;
  }
  return c;
}

Sensitivity sensitivities(const LinkUtility& f, const SchedulingSet& set_i, const Vector& s_hat,
                          const Matrix& q_s, const std::vector<double>& delta_self, double u,
                          const QuadratureConfig& config, OpCounters* counters) {
  const GaussianNodes nodes(q_s / u, config);
  const auto n_z = static_cast<Eigen::Index>(s_hat.size());
  const std::size_t m = nodes.size();
  Matrix zs;
  nodes.place(s_hat, zs);

  // Joint log weights over (candidate, node).
  std::vector<double> logw(set_i.size() * m);
  std::vector<double> vals(m);
  double mx = -std::numeric_limits<double>::infinity();
  for (std::size_t k = 0; k < set_i.size(); ++k) {
    f.values(set_i[k], zs, vals.data());
    for (std::size_t c = 0; c < m; ++c) {
      const double v = u * delta_self[k] + nodes.log_weights()[c] + u * vals[c];
      logw[k * m + c] = v;
      mx = std::max(mx, v);
    }
  }
  double total = 0.0;
  for (double& v : logw) {
    v = std::exp(v - mx);
    total += v;
  }

  Sensitivity s{Vector::Zero(n_z), Matrix::Zero(n_z, n_z)};
  Matrix second = Matrix::Zero(n_z, n_z);
  Matrix grads;
  std::vector<Matrix> hess;
  for (std::size_t k = 0; k < set_i.size(); ++k) {
    f.z_derivatives_batch(set_i[k], zs, grads, hess);
    for (std::size_t c = 0; c < m; ++c) {
      const double w = logw[k * m + c] / total;
      if (w == 0.0) continue;
      const auto col = static_cast<Eigen::Index>(c);
      s.d1.noalias() += w * grads.col(col);
      s.d2.noalias() += w * hess[c];
      second.noalias() += w * grads.col(col) * grads.col(col).transpose();
    }
  }
  s.d2 += u * (second - s.d1 * s.d1.transpose());
  s.d2 = 0.5 * (s.d2 + s.d2.transpose());
  if (counters) {
    counters->utility_evals += 2 * set_i.size() * m;
    counters->linalg_flops += set_i.size() * m * static_cast<std::uint64_t>(n_z * n_z);
  }
  return s;
}

Vector first_order_message(const Matrix& a, const Vector& d1, const Matrix& d2,
                           const Vector& xhat_j) {
  return a.transpose() * d1 - a.transpose() * (d2 * (a * xhat_j));
}

Vector recover_edge_mean(const Vector& xhat_j, const Matrix& q_j, const Vector& u_ij) {
  return xhat_j - q_j * u_ij;
}

std::string role_name(MessageRole role) {
  switch (role) {
    case MessageRole::kSoftRts: return "soft-rts";
    case MessageRole::kSoftCqi: return "soft-cqi";
    case MessageRole::kSoftCts: return "soft-cts";
    case MessageRole::kStrongLikelihood: return "strong-likelihood";
    case MessageRole::kStrongMoments: return "strong-moments";
    case MessageRole::kServingLikelihood: return "serving-likelihood";
  }
  return "unknown";
}

std::string node_label(bool tx, LinkId node) {
  return (tx ? "tx" : "rx") + std::to_string(node);
}

FirstOrderResult run_first_order_bp(const InterferenceSystem& system,
                                    const FirstOrderConfig& config) {
  config.bp.validate();
  const FactorGraph graph = build_factor_graph(system);
  const std::size_t n = system.num_links();
  const double u = effective_temperature(system, config.bp);
  FirstOrderResult result;
  result.u_effective = u;
  result.rx_ops.resize(n);
  result.tx_ops.resize(n);
  result.classification = classify_edges(system, graph, config.strong_threshold_db);
  const auto& strong = result.classification.strong;

  auto send = [&](BroadcastBundle& b, bool tx, LinkId node, bool broadcast, MessageRole role,
                  std::size_t scalars) {
    b.traffic.push_back({b.round, tx, node, broadcast, role, scalars * kScalarBytes});
    if (broadcast) {
      result.messages.broadcast(scalars);
    } else {
      result.messages.unicast(scalars);
    }
  };

  // Step 1: uniform beliefs; receivers adopt the broadcast moments on every edge.
  EdgeMoments tx_side = uniform_moments(system, graph, u);
  EdgeMoments rx_view = tx_side;
  std::vector<std::vector<double>> to_rx(graph.edges.size());
  std::vector<std::vector<double>> to_tx(graph.edges.size());
  for (std::size_t e = 0; e < graph.edges.size(); ++e) {
    to_rx[e].assign(system.candidates(graph.edges[e].second).size(), 0.0);
  }
  std::vector<Vector> stored_u(graph.edges.size());
  std::vector<std::vector<double>> aggregate(n);
  {
    BroadcastBundle init;
    init.round = 0;
    init.tx_moments = tx_side.link;
    init.rx_sensitivity.resize(n);
    for (std::size_t j = 0; j < n; ++j) {
      const auto nx = system.n_x(j);
      send(init, true, j, true, MessageRole::kSoftRts, nx + nx * nx);
    }
    result.history.push_back(std::move(init));
  }

  for (std::size_t t = 0; t < config.bp.rounds; ++t) {
    BroadcastBundle bundle;
    bundle.round = t + 1;
    bundle.rx_sensitivity.resize(n);
    std::vector<Sensitivity> sens(n);

    // Step 2: receivers.
    for (std::size_t i = 0; i < n; ++i) {
      const auto& nbrs = graph.rx_neighbors[i];
      std::vector<bool> cross(nbrs.size());
      bool any_weak = false;
      for (std::size_t r = 0; r < nbrs.size(); ++r) {
        cross[r] = strong[graph.edge_index(i, nbrs[r])];
        if (!cross[r]) any_weak = true;
      }
      InterferenceMoments im;
      auto tables = rx_update_gaussian(system, graph, rx_view, to_rx[graph.edge_index(i, i)], i,
                                       u, config.quadrature, &result.rx_ops[i], &cross,
                                       &result.diagnostics, &im);
      for (std::size_t r = 0; r < nbrs.size(); ++r) {
        const LinkId j = nbrs[r];
        const std::size_t e = graph.edge_index(i, j);
        if (!cross[r]) continue;
        send(bundle, false, i, false,
             j == i ? MessageRole::kSoftCqi : MessageRole::kStrongLikelihood, tables[r].size());
        to_tx[e] = std::move(tables[r]);
      }
      if (!any_weak) continue;
      sens[i] = sensitivities(system.utility(i), system.candidates(i), im.s_hat, im.q_s,
                              to_rx[graph.edge_index(i, i)], u, config.quadrature,
                              &result.rx_ops[i]);
      bundle.rx_sensitivity[i] = sens[i].d1;
      const auto nz = system.n_z();
      send(bundle, false, i, true, MessageRole::kSoftCts,
           nz + (config.broadcast_hessian ? nz * nz : 0));
      for (std::size_t r = 0; r < nbrs.size(); ++r) {
        if (cross[r]) continue;
        const LinkId j = nbrs[r];
        const Matrix& a = *system.mixing(i, j);
        stored_u[graph.edge_index(i, j)] =
            first_order_message(a, sens[i].d1, sens[i].d2, tx_side.link[j].mean);
        result.rx_ops[i].linalg_flops += static_cast<std::uint64_t>(3 * a.size() + a.rows() * a.rows());
      }
    }

    // Step 3: transmitters.
    for (std::size_t j = 0; j < n; ++j) {
      const auto& nbrs = graph.tx_neighbors[j];
      const SchedulingSet& set = system.candidates(j);
      std::vector<std::vector<double>> incoming(nbrs.size());
      std::vector<bool> want(nbrs.size());
      for (std::size_t r = 0; r < nbrs.size(); ++r) {
        const LinkId i = nbrs[r];
        const std::size_t e = graph.edge_index(i, j);
        want[r] = strong[e];
        if (strong[e]) {
          incoming[r] = to_tx[e];
          continue;
        }
        // Weak edge: rebuild Delta_{i->j}(x_j) ~ u_ij' x_j from the broadcast D_i1.
        const Matrix& a = *system.mixing(i, j);
        const Matrix d2 = config.broadcast_hessian
                              ? sens[i].d2
                              : Matrix::Zero(sens[i].d1.size(), sens[i].d1.size());
        const Vector u_tx = first_order_message(a, sens[i].d1, d2, tx_side.link[j].mean);
        incoming[r].resize(set.size());
        for (std::size_t c = 0; c < set.size(); ++c) incoming[r][c] = u_tx.dot(set[c]);
        shift_to_max_zero(incoming[r]);
        to_tx[e] = incoming[r];
        result.tx_ops[j].linalg_flops += static_cast<std::uint64_t>(a.size()) + set.size() * a.cols();
      }
      TxUpdate upd = tx_update_gaussian(system, graph, incoming, j, u, &result.tx_ops[j], &want);
      for (std::size_t r = 0; r < nbrs.size(); ++r) {
        const LinkId i = nbrs[r];
        const std::size_t e = graph.edge_index(i, j);
        if (i == j) {
          send(bundle, true, j, false, MessageRole::kServingLikelihood, upd.to_rx[r].size());
        } else if (strong[e]) {
          const auto nx = system.n_x(j);
          send(bundle, true, j, false, MessageRole::kStrongMoments, nx + nx * nx);
        }
        if (strong[e]) tx_side.edge[e] = std::move(upd.edge[r]);
        to_rx[e] = std::move(upd.to_rx[r]);
      }
      tx_side.link[j] = std::move(upd.link);
      aggregate[j] = std::move(upd.aggregate);
      const auto nx = system.n_x(j);
      send(bundle, true, j, true, MessageRole::kSoftRts, nx + nx * nx);
    }
    bundle.tx_moments = tx_side.link;

    // Receivers refresh their view of every edge for the next round.
    for (std::size_t e = 0; e < graph.edges.size(); ++e) {
      const auto [i, j] = graph.edges[e];
      if (strong[e]) {
        rx_view.edge[e] = tx_side.edge[e];
      } else {
        const BeliefMoments& b = tx_side.link[j];
        rx_view.edge[e] = {recover_edge_mean(b.mean, b.q, stored_u[e]), b.q};
      }
    }
    rx_view.link = tx_side.link;
    result.history.push_back(std::move(bundle));
  }

  result.profile.choice.resize(n);
  for (std::size_t j = 0; j < n; ++j) result.profile.choice[j] = argmax_lowest(aggregate[j]);
  result.final_log_likelihood = std::move(aggregate);
  return result;
}

std::vector<OverheadRow> overhead_rows(const std::vector<BroadcastBundle>& history) {
  std::vector<OverheadRow> rows;
  std::map<std::tuple<std::size_t, std::string, std::string>, std::size_t> index;
  for (const auto& b : history) {
    for (const auto& t : b.traffic) {
      const std::string node = node_label(t.from_tx, t.node);
      const std::string kind = t.broadcast ? "broadcast" : "unicast";
      auto key = std::make_tuple(t.round, node, kind);
      auto it = index.find(key);
      if (it == index.end()) {
        index.emplace(key, rows.size());
        rows.push_back({t.round, node, kind, t.bytes});
      } else {
        rows[it->second].bytes += t.bytes;
      }
    }
  }
  return rows;
}

}  // namespace icbp
