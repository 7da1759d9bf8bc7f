#pragma once

#include <vector>

#include "icbp/bp_common.hpp"
#include "icbp/core_model.hpp"
#include "icbp/quadrature.hpp"

namespace icbp {

// Mean and scaled covariance Q = u * Cov of p(x) ~ exp(u * delta(x)) over a
// finite candidate set.  With this scaling the interference variance at a
// receiver is Q^s / u.
struct BeliefMoments {
  Vector mean;
  Matrix q;
};

BeliefMoments moments_from_log_likelihood(const SchedulingSet& set,
                                          const std::vector<double>& delta, double u,
                                          OpCounters* counters = nullptr);

// Moments of p_{i<-j} per factor-graph edge, and of the aggregate belief of
// each transmitter.
struct EdgeMoments {
  std::vector<BeliefMoments> edge;
  std::vector<BeliefMoments> link;
};

// Moments of the uniform distribution over every candidate set.
EdgeMoments uniform_moments(const InterferenceSystem& system, const FactorGraph& graph,
                            double u);

struct InterferenceMoments {
  Vector s_hat;
  Matrix q_s;
};

// s_ii = sum_j A_ij xhat_{i<-j},  Q^s_ii = sum_j A_ij Q^x_{i<-j} A_ij'.
InterferenceMoments interference_moments(const InterferenceSystem& system,
                                         const FactorGraph& graph, const EdgeMoments& moments,
                                         LinkId i, OpCounters* counters = nullptr);

// Moments conditional on x_j:
//   s_ij = s_ii + A_ij (x_j - xhat_{i<-j}),  Q^s_ij = Q^s_ii - A_ij Q^x_{i<-j} A_ij'.
// A downdate that leaves Q^s_ij indefinite beyond rounding is eigen-clamped
// and reported through *clamped.
InterferenceMoments conditional_interference_moments(const InterferenceSystem& system,
                                                     const FactorGraph& graph,
                                                     const EdgeMoments& moments,
                                                     const InterferenceMoments& base, LinkId i,
                                                     LinkId j, const Vector& x_j,
                                                     bool* clamped = nullptr);

// Gaussian expectation of exp(u f(x, z)) with z ~ N(mean, Q/u), on a node
// set built once per covariance.
class PartitionEvaluator {
 public:
  PartitionEvaluator(const Matrix& q_s, double u, const QuadratureConfig& config);

  // log E[exp(u f(x, z))].
  double log_expect_exp(const LinkUtility& f, const Vector& x, const Vector& mean,
                        OpCounters* counters = nullptr) const;

  const GaussianNodes& nodes() const { return nodes_; }
  double u() const { return u_; }

 private:
  GaussianNodes nodes_;
  double u_;
  mutable Matrix z_buf_;
  mutable std::vector<double> v_buf_;
};

// Delta_{i->i}(x_i) = (1/u) log Z_i0(x_i, s_ii, Q^s_ii), up to a constant.
double log_partition_self(const LinkUtility& f, const Vector& x_i, const Vector& s_hat,
                          const Matrix& q_s, double u, const QuadratureConfig& config = {},
                          OpCounters* counters = nullptr);

// (1/u) log sum_{x_i} exp(u delta_self(x_i)) E[exp(u f(x_i, z))] with
// z ~ N(s_hat, Q^s/u); Delta_{i->j}(x_j) evaluates this at (s_ij, Q^s_ij).
double log_partition_cross(const LinkUtility& f, const SchedulingSet& set_i,
                           const std::vector<double>& delta_self, const Vector& s_hat,
                           const Matrix& q_s, double u, const QuadratureConfig& config = {},
                           OpCounters* counters = nullptr);

struct GaussianDiagnostics {
  std::size_t psd_clamps = 0;
  std::size_t monte_carlo_fallbacks = 0;
  std::size_t monte_carlo_samples = 0;
};

// RX-side update at receiver i.  Returns one table per entry of
// graph.rx_neighbors[i] (the self entry is Delta_{i->i}); entries whose
// compute_cross flag is false are left empty.
std::vector<std::vector<double>> rx_update_gaussian(
    const InterferenceSystem& system, const FactorGraph& graph, const EdgeMoments& moments,
    const std::vector<double>& delta_self, LinkId i, double u, const QuadratureConfig& config,
    OpCounters* counters = nullptr, const std::vector<bool>* compute_cross = nullptr,
    GaussianDiagnostics* diagnostics = nullptr, InterferenceMoments* moments_out = nullptr);

struct TxUpdate {
  // Delta_{i<-j} per entry of graph.tx_neighbors[j], max-shifted.
  std::vector<std::vector<double>> to_rx;
  // Delta_j, max-shifted.
  std::vector<double> aggregate;
  // Moments of p_{i<-j} per tx neighbor (only when requested) and of Delta_j.
  std::vector<BeliefMoments> edge;
  BeliefMoments link;
};

// Leave-one-out sums Delta_{i<-j} = Delta_j - Delta_{i->j} over the incoming
// tables (one per entry of graph.tx_neighbors[j]).  Edge moments are computed
// for neighbors whose want_edge_moments flag is set (all when null).
TxUpdate tx_update_gaussian(const InterferenceSystem& system, const FactorGraph& graph,
                            const std::vector<std::vector<double>>& incoming, LinkId j, double u,
                            OpCounters* counters = nullptr,
                            const std::vector<bool>* want_edge_moments = nullptr);

struct GaussianRoundTrace {
  std::vector<InterferenceMoments> rx_moments;
  std::vector<std::vector<double>> to_tx;  // per edge
};

struct GaussianBPResult {
  SchedulingProfile profile;
  std::vector<std::vector<double>> final_log_likelihood;
  double u_effective = 0.0;
  std::vector<OpCounters> rx_ops;
  std::vector<OpCounters> tx_ops;
  MessageStats messages;
  GaussianDiagnostics diagnostics;
  std::vector<GaussianRoundTrace> history;
};

struct GaussianBPConfig {
  BPConfig bp{.u = 50.0, .rounds = 4};
  QuadratureConfig quadrature;
};

GaussianBPResult run_gaussian_bp(const InterferenceSystem& system,
                                 const GaussianBPConfig& config);

}  // namespace icbp
