#pragma once

#include <cstddef>
#include <functional>
#include <map>
#include <memory>
#include <optional>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>

namespace icbp {

using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;
using LinkId = std::size_t;

// Validation limits for problem instances.
inline constexpr std::size_t kMaxCandidates = 4096;
inline constexpr std::size_t kMaxInterferenceDim = 64;

class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// An enumeration oracle would exceed its budget.
class OracleInfeasible : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class EvaluationError : public std::runtime_error {
 public:
  EvaluationError(LinkId link, const std::string& what)
      : std::runtime_error(what), link_(link) {}
  LinkId link() const { return link_; }

 private:
  LinkId link_;
};

// Finite candidate set of transmit vectors for one link.  Candidate order is
// the canonical identity of a candidate.
class SchedulingSet {
 public:
  SchedulingSet() = default;
  SchedulingSet(std::vector<Vector> candidates, std::optional<std::size_t> max_power_index = {});

  std::size_t dimension() const { return dimension_; }
  std::size_t size() const { return candidates_.size(); }
  const Vector& operator[](std::size_t k) const { return candidates_[k]; }
  const std::vector<Vector>& candidates() const { return candidates_; }
  // Candidate used by interference-blind "everyone at full power" policies.
  std::optional<std::size_t> max_power_index() const { return max_power_index_; }

  Vector mean() const;
  // Covariance under the uniform distribution over the candidates.
  Matrix covariance() const;

 private:
  std::size_t dimension_ = 0;
  std::vector<Vector> candidates_;
  std::optional<std::size_t> max_power_index_;
};

// Per-link utility f_i(x_i, z_i).  Implementations must be pure and
// deterministic.
class LinkUtility {
 public:
  virtual ~LinkUtility() = default;

  virtual double value(const Vector& x, const Vector& z) const = 0;

  // Evaluates value(x, z_k) for every column z_k of `zs`.
  virtual void values(const Vector& x, const Matrix& zs, double* out) const;

  // Gradient and Hessian of f with respect to z.  The default uses central
  // finite differences with a relative step of 1e-5.
  virtual void z_derivatives(const Vector& x, const Vector& z, Vector& grad, Matrix& hess) const;

  // Batched gradient/Hessian; hess_out holds one n_z x n_z block per column.
  virtual void z_derivatives_batch(const Vector& x, const Matrix& zs, Matrix& grad_out,
                                   std::vector<Matrix>& hess_out) const;
};

using UtilityPtr = std::shared_ptr<const LinkUtility>;

// Wraps an arbitrary callable; used for synthetic utilities in tests and by
// callers that do not need analytic derivatives.
class FunctionUtility final : public LinkUtility {
 public:
  using Fn = std::function<double(const Vector&, const Vector&)>;
  explicit FunctionUtility(Fn fn) : fn_(std::move(fn)) {}
  double value(const Vector& x, const Vector& z) const override { return fn_(x, z); }

 private:
  Fn fn_;
};

// Linear-mixing interference system: z_i = sum_j A_ij x_j with A_ii = 0.
// Immutable after construction.
class InterferenceSystem {
 public:
  struct Link {
    SchedulingSet candidates;
    UtilityPtr utility;
    // Norm of the serving-link gain, used for strong/weak edge classification.
    double serving_gain = 1.0;
  };

  InterferenceSystem(std::size_t n_z, std::vector<Link> links,
                     std::map<std::pair<LinkId, LinkId>, Matrix> mixing);

  std::size_t num_links() const { return links_.size(); }
  std::size_t n_z() const { return n_z_; }
  std::size_t n_x(LinkId j) const { return links_[j].candidates.dimension(); }
  const Link& link(LinkId i) const { return links_[i]; }
  const SchedulingSet& candidates(LinkId j) const { return links_[j].candidates; }
  const LinkUtility& utility(LinkId i) const { return *links_[i].utility; }

  // nullptr when A_ij is absent (zero).
  const Matrix* mixing(LinkId i, LinkId j) const;
  const std::map<std::pair<LinkId, LinkId>, Matrix>& mixing_entries() const { return mixing_; }

  // Number of joint profiles, saturating at SIZE_MAX.
  std::size_t profile_count() const;

 private:
  std::size_t n_z_;
  std::vector<Link> links_;
  std::map<std::pair<LinkId, LinkId>, Matrix> mixing_;
};

// Bipartite TX/RX factor graph.  N_rx(i) = {i} U {j : A_ij != 0} and
// N_tx(j) = {j} U {i : A_ij != 0}; neighbor lists are sorted ascending.
struct FactorGraph {
  std::vector<std::vector<LinkId>> rx_neighbors;
  std::vector<std::vector<LinkId>> tx_neighbors;
  // (rx i, tx j) pairs, sorted.
  std::vector<std::pair<LinkId, LinkId>> edges;

  bool has_edge(LinkId i, LinkId j) const;
  // Position of (i, j) in `edges`; throws std::out_of_range when absent.
  std::size_t edge_index(LinkId i, LinkId j) const;
};

FactorGraph build_factor_graph(const InterferenceSystem& system);

// Per-link candidate choice.
struct SchedulingProfile {
  std::vector<std::size_t> choice;

  bool operator==(const SchedulingProfile&) const = default;
};

void validate_profile(const InterferenceSystem& system, const SchedulingProfile& profile);

// Concatenation of all chosen x_j.
Vector resolve_profile(const InterferenceSystem& system, const SchedulingProfile& profile);

// z_i for the given profile; the self term is excluded.
Vector compute_interference(const InterferenceSystem& system, const SchedulingProfile& profile,
                            LinkId i);

// Same, over raw per-link transmit vectors.
Vector compute_interference(const InterferenceSystem& system, const std::vector<Vector>& x,
                            LinkId i);

// F(x) = sum_i f_i(x_i, z_i).  Throws EvaluationError on a non-finite term.
double total_utility(const InterferenceSystem& system, const SchedulingProfile& profile);

// Per-link utilities f_i(x_i, z_i) for the profile.
std::vector<double> link_utilities(const InterferenceSystem& system,
                                   const SchedulingProfile& profile);

}  // namespace icbp
