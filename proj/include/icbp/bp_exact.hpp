#pragma once

#include <cstddef>
#include <stdexcept>
#include <vector>

#include "icbp/bp_common.hpp"
#include "icbp/core_model.hpp"

namespace icbp {

inline constexpr std::size_t kDefaultEnumerationCap = 1'000'000;
inline constexpr std::size_t kExactNeighborCap = 12;

// Explicit Gibbs table p(x) = exp(u F(x)) / Z over all profiles, in
// row-major candidate order (link 0 most significant).
struct GibbsTable {
  std::vector<double> probability;
  std::vector<double> objective;
  double log_partition = 0.0;
};

GibbsTable gibbs_distribution(const InterferenceSystem& system, double u,
                              std::size_t max_profiles = kDefaultEnumerationCap);

// Per-link marginals of a Gibbs table.
std::vector<std::vector<double>> gibbs_marginals(const InterferenceSystem& system,
                                                 const GibbsTable& table);

// Decodes a row-major profile index.
SchedulingProfile profile_from_index(const InterferenceSystem& system, std::size_t index);

// Log-domain messages, indexed by FactorGraph edge position.  Every table is
// over the candidates of the edge's transmitter and normalized so that its
// log-sum-exp is zero.
struct MessageTable {
  std::vector<std::vector<double>> to_tx;  // log p_{i->j}
  std::vector<std::vector<double>> to_rx;  // log p_{i<-j}
};

MessageTable uniform_messages(const InterferenceSystem& system, const FactorGraph& graph);

// log p_{i->j}(x_j) = log E[exp(u f_i) | x_j] with the other neighbors of RX i
// drawn independently from their p_{i<-k}.  For j != i, x_i is among the
// marginalized neighbors; for j == i it is the message argument.
std::vector<double> rx_update_exact(const InterferenceSystem& system, const FactorGraph& graph,
                                    const MessageTable& messages, LinkId i, LinkId j, double u,
                                    OpCounters* counters = nullptr);

// log p_{i<-j} = normalized sum over l in N_tx(j), l != i, of log p_{l->j},
// geometrically mixed with `previous` when damping > 0.  When the result is
// degenerate it falls back to uniform and increments *degenerate.
std::vector<double> tx_update_exact(const FactorGraph& graph, const MessageTable& messages,
                                    LinkId j, LinkId i, double damping = 0.0,
                                    const std::vector<double>* previous = nullptr,
                                    std::size_t* degenerate = nullptr);

// Normalized product of all incoming RX->TX messages at TX j.
std::vector<double> marginal_exact(const FactorGraph& graph, const MessageTable& messages,
                                   LinkId j);

std::size_t final_decision_exact(const FactorGraph& graph, const MessageTable& messages,
                                 LinkId j);

struct ExactBPResult {
  SchedulingProfile profile;
  std::vector<std::vector<double>> marginals;
  std::vector<MessageTable> history;  // after each round, when recorded
  double u_effective = 0.0;
  std::vector<OpCounters> rx_ops;
  std::vector<OpCounters> tx_ops;
  MessageStats messages;
  std::size_t degenerate_messages = 0;
};

ExactBPResult run_exact_bp(const InterferenceSystem& system, const BPConfig& config);

}  // namespace icbp
