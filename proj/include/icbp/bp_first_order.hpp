#pragma once

#include <string>
#include <vector>

#include "icbp/bp_common.hpp"
#include "icbp/bp_gaussian.hpp"
#include "icbp/core_model.hpp"

namespace icbp {

// Strong/weak label per factor-graph edge.  Self edges are always strong.
struct EdgeClassification {
  std::vector<bool> strong;
  double threshold_db = 0.0;

  std::size_t strong_cross_edges(const FactorGraph& graph) const;
};

// Cross edge (i, j) is strong iff 10 log10(||A_ij||_F / serving_gain_i) >= threshold_db.
// -inf makes every edge strong; +inf makes every cross edge weak.
EdgeClassification classify_edges(const InterferenceSystem& system, const FactorGraph& graph,
                                  double threshold_db);

// Expected first and second z-derivatives of the receiver's log partition
// function (1/u) log Z_i(delta_self, s_hat, Q^s).
struct Sensitivity {
  Vector d1;
  Matrix d2;
};

// d1 = E[grad_z f] and d2 = E[hess_z f] + u Cov[grad_z f] under
// p(x, z) ~ exp(u delta_self(x) + u f(x, z)) N(z; s_hat, Q^s/u).  These are
// exactly the first and second derivatives in s_hat of the quadrature
// approximation of (1/u) log Z_i.
Sensitivity sensitivities(const LinkUtility& f, const SchedulingSet& set_i, const Vector& s_hat,
                          const Matrix& q_s, const std::vector<double>& delta_self, double u,
                          const QuadratureConfig& config = {}, OpCounters* counters = nullptr);

// u_ij = A' d1 - A' d2 A xhat_j; the weak-edge message is u_ij' x_j + const.
Vector first_order_message(const Matrix& a, const Vector& d1, const Matrix& d2,
                           const Vector& xhat_j);

// xhat_{i<-j} ~ xhat_j - Q^x_j u_ij.
Vector recover_edge_mean(const Vector& xhat_j, const Matrix& q_j, const Vector& u_ij);

enum class MessageRole {
  kSoftRts,            // TX broadcast of (xhat_j, Q^x_j)
  kSoftCqi,            // RX -> serving TX log likelihood Delta_{i->i}
  kSoftCts,            // RX broadcast of the sensitivity D_i1
  kStrongLikelihood,   // RX -> interfering TX Delta_{i->j} on a strong edge
  kStrongMoments,      // TX -> RX (xhat_{i<-j}, Q^x_{i<-j}) on a strong edge
  kServingLikelihood,  // TX -> serving RX Delta_{j<-j}
};

std::string role_name(MessageRole role);

struct TrafficEntry {
  std::size_t round = 0;
  bool from_tx = false;
  LinkId node = 0;
  bool broadcast = false;
  MessageRole role = MessageRole::kSoftRts;
  std::size_t bytes = 0;
};

std::string node_label(bool tx, LinkId node);

// Per-round record of what was broadcast and the control traffic volume.
struct BroadcastBundle {
  std::size_t round = 0;
  std::vector<BeliefMoments> tx_moments;  // (xhat_j, Q^x_j) broadcast by each TX
  std::vector<Vector> rx_sensitivity;     // D_i1 broadcast by each RX (empty if none)
  std::vector<TrafficEntry> traffic;
};

struct FirstOrderConfig {
  BPConfig bp{.u = 50.0, .rounds = 2};
  QuadratureConfig quadrature;
  double strong_threshold_db = 0.0;
  // Broadcast D_i2 as well so transmitters can rebuild the full u_ij.
  bool broadcast_hessian = false;
};

struct FirstOrderResult {
  SchedulingProfile profile;
  std::vector<std::vector<double>> final_log_likelihood;
  EdgeClassification classification;
  std::vector<BroadcastBundle> history;  // index 0 is the initial broadcast
  double u_effective = 0.0;
  std::vector<OpCounters> rx_ops;
  std::vector<OpCounters> tx_ops;
  MessageStats messages;
  GaussianDiagnostics diagnostics;
};

FirstOrderResult run_first_order_bp(const InterferenceSystem& system,
                                    const FirstOrderConfig& config);

// Sums bytes per (round, node, kind) in first-appearance order; rows are
// {round, node, kind, bytes}.
struct OverheadRow {
  std::size_t round;
  std::string node;
  std::string kind;
  std::size_t bytes;
};
std::vector<OverheadRow> overhead_rows(const std::vector<BroadcastBundle>& history);

}  // namespace icbp
