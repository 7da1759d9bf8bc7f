#include "icbp/core_model.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace icbp {

SchedulingSet::SchedulingSet(std::vector<Vector> candidates,
                             std::optional<std::size_t> max_power_index)
    : candidates_(std::move(candidates)), max_power_index_(max_power_index) {
  if (candidates_.empty()) throw ConfigError("scheduling set must be non-empty");
  if (candidates_.size() > kMaxCandidates) {
    throw ConfigError("scheduling set exceeds " + std::to_string(kMaxCandidates) + " candidates");
  }
  dimension_ = static_cast<std::size_t>(candidates_.front().size());
  if (dimension_ == 0) throw ConfigError("candidate vectors must have positive dimension");
  for (const auto& c : candidates_) {
    if (static_cast<std::size_t>(c.size()) != dimension_) {
      throw ConfigError("scheduling set candidates have inconsistent dimension");
    }
    if (!c.allFinite()) throw ConfigError("scheduling set candidate is not finite");
  }
  if (max_power_index_ && *max_power_index_ >= candidates_.size()) {
    throw ConfigError("max-power index out of range");
  }
}

Vector SchedulingSet::mean() const {
  Vector m = Vector::Zero(static_cast<Eigen::Index>(dimension_));
  for (const auto& c : candidates_) m += c;
  return m / static_cast<double>(candidates_.size());
}

Matrix SchedulingSet::covariance() const {
  const Vector m = mean();
  Matrix cov = Matrix::Zero(static_cast<Eigen::Index>(dimension_),
                            static_cast<Eigen::Index>(dimension_));
  for (const auto& c : candidates_) {
    const Vector d = c - m;
    cov.noalias() += d * d.transpose();
  }
  return cov / static_cast<double>(candidates_.size());
}

void LinkUtility::values(const Vector& x, const Matrix& zs, double* out) const {
  Vector z(zs.rows());
  for (Eigen::Index k = 0; k < zs.cols(); ++k) {
    z = zs.col(k);
    out[k] = value(x, z);
  }
}

void LinkUtility::z_derivatives(const Vector& x, const Vector& z, Vector& grad,
                                Matrix& hess) const {
  const Eigen::Index n = z.size();
  grad.resize(n);
  hess.resize(n, n);
  Vector step(n);
  for (Eigen::Index k = 0; k < n; ++k) step[k] = 1e-5 * std::max(std::abs(z[k]), 1e-12);
  const double f0 = value(x, z);
  Vector zp = z;
  for (Eigen::Index a = 0; a < n; ++a) {
    const double ha = step[a];
    zp[a] = z[a] + ha;
    const double fp = value(x, zp);
    zp[a] = z[a] - ha;
    const double fm = value(x, zp);
    zp[a] = z[a];
    grad[a] = (fp - fm) / (2.0 * ha);
    hess(a, a) = (fp - 2.0 * f0 + fm) / (ha * ha);
    for (Eigen::Index b = 0; b < a; ++b) {
      const double hb = step[b];
      double acc = 0.0;
      for (int sa : {1, -1}) {
        for (int sb : {1, -1}) {
          zp[a] = z[a] + sa * ha;
          zp[b] = z[b] + sb * hb;
          acc += sa * sb * value(x, zp);
        }
      }
      zp[a] = z[a];
      zp[b] = z[b];
      hess(a, b) = hess(b, a) = acc / (4.0 * ha * hb);
    }
  }
}

void LinkUtility::z_derivatives_batch(const Vector& x, const Matrix& zs, Matrix& grad_out,
                                      std::vector<Matrix>& hess_out) const {
  grad_out.resize(zs.rows(), zs.cols());
  hess_out.resize(static_cast<std::size_t>(zs.cols()));
  Vector z(zs.rows());
  Vector g;
  for (Eigen::Index k = 0; k < zs.cols(); ++k) {
    z = zs.col(k);
    z_derivatives(x, z, g, hess_out[static_cast<std::size_t>(k)]);
    grad_out.col(k) = g;
  }
}

InterferenceSystem::InterferenceSystem(std::size_t n_z, std::vector<Link> links,
                                       std::map<std::pair<LinkId, LinkId>, Matrix> mixing)
    : n_z_(n_z), links_(std::move(links)), mixing_(std::move(mixing)) {
  if (links_.empty()) throw ConfigError("system must contain at least one link");
  if (n_z_ == 0 || n_z_ > kMaxInterferenceDim) {
    throw ConfigError("interference dimension must be in [1, " +
                      std::to_string(kMaxInterferenceDim) + "]");
  }
  for (std::size_t i = 0; i < links_.size(); ++i) {
    if (!links_[i].utility) throw ConfigError("link " + std::to_string(i) + " has no utility");
    if (links_[i].candidates.size() == 0) {
      throw ConfigError("link " + std::to_string(i) + " has an empty scheduling set");
    }
  }
  for (auto it = mixing_.begin(); it != mixing_.end();) {
    const auto [i, j] = it->first;
    if (i >= links_.size() || j >= links_.size()) {
      throw ConfigError("mixing entry references an unknown link");
    }
    const Matrix& a = it->second;
    if (static_cast<std::size_t>(a.rows()) != n_z_ ||
        static_cast<std::size_t>(a.cols()) != links_[j].candidates.dimension()) {
      throw ConfigError("mixing matrix A_" + std::to_string(i) + "," + std::to_string(j) +
                        " has shape " + std::to_string(a.rows()) + "x" +
                        std::to_string(a.cols()) + ", expected " + std::to_string(n_z_) + "x" +
                        std::to_string(links_[j].candidates.dimension()));
    }
    if (!a.allFinite()) throw ConfigError("mixing matrix is not finite");
    if (i == j) {
      if (a.squaredNorm() != 0.0) throw ConfigError("self-interference A_ii must be zero");
      it = mixing_.erase(it);
      continue;
    }
    ++it;
  }
}

const Matrix* InterferenceSystem::mixing(LinkId i, LinkId j) const {
  auto it = mixing_.find({i, j});
  return it == mixing_.end() ? nullptr : &it->second;
}

std::size_t InterferenceSystem::profile_count() const {
  std::size_t total = 1;
  for (const auto& l : links_) {
    const std::size_t s = l.candidates.size();
    if (total > std::numeric_limits<std::size_t>::max() / s) {
      return std::numeric_limits<std::size_t>::max();
    }
    total *= s;
  }
  return total;
}

bool FactorGraph::has_edge(LinkId i, LinkId j) const {
  const auto& nb = rx_neighbors[i];
  return std::binary_search(nb.begin(), nb.end(), j);
}

std::size_t FactorGraph::edge_index(LinkId i, LinkId j) const {
  const auto key = std::make_pair(i, j);
  auto it = std::lower_bound(edges.begin(), edges.end(), key);
  if (it == edges.end() || *it != key) {
    throw std::out_of_range("no factor-graph edge (" + std::to_string(i) + "," +
                            std::to_string(j) + ")");
  }
  return static_cast<std::size_t>(it - edges.begin());
}

FactorGraph build_factor_graph(const InterferenceSystem& system) {
  const std::size_t n = system.num_links();
  FactorGraph g;
  g.rx_neighbors.resize(n);
  g.tx_neighbors.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    g.rx_neighbors[i].push_back(i);
    g.tx_neighbors[i].push_back(i);
  }
  for (const auto& [key, a] : system.mixing_entries()) {
    if (a.squaredNorm() == 0.0) continue;
    g.rx_neighbors[key.first].push_back(key.second);
    g.tx_neighbors[key.second].push_back(key.first);
  }
  for (std::size_t i = 0; i < n; ++i) {
    std::sort(g.rx_neighbors[i].begin(), g.rx_neighbors[i].end());
    std::sort(g.tx_neighbors[i].begin(), g.tx_neighbors[i].end());
    for (LinkId j : g.rx_neighbors[i]) g.edges.emplace_back(i, j);
  }
  return g;
}

void validate_profile(const InterferenceSystem& system, const SchedulingProfile& profile) {
  if (profile.choice.size() != system.num_links()) {
    throw ConfigError("profile has " + std::to_string(profile.choice.size()) +
                      " entries for a system of " + std::to_string(system.num_links()) +
                      " links");
  }
  for (std::size_t j = 0; j < profile.choice.size(); ++j) {
    if (profile.choice[j] >= system.candidates(j).size()) {
      throw ConfigError("profile index out of range for link " + std::to_string(j));
    }
  }
}

Vector resolve_profile(const InterferenceSystem& system, const SchedulingProfile& profile) {
  validate_profile(system, profile);
  Eigen::Index total = 0;
  for (std::size_t j = 0; j < system.num_links(); ++j) {
    total += static_cast<Eigen::Index>(system.n_x(j));
  }
  Vector x(total);
  Eigen::Index off = 0;
  for (std::size_t j = 0; j < system.num_links(); ++j) {
    const Vector& c = system.candidates(j)[profile.choice[j]];
    x.segment(off, c.size()) = c;
    off += c.size();
  }
  return x;
}

Vector compute_interference(const InterferenceSystem& system, const std::vector<Vector>& x,
                            LinkId i) {
  if (x.size() != system.num_links() || i >= system.num_links()) {
    throw ConfigError("need one transmit vector per link and a valid receiver");
  }
  for (LinkId j = 0; j < x.size(); ++j) {
    if (static_cast<std::size_t>(x[j].size()) != system.n_x(j)) {
      throw ConfigError("transmit vector for link " + std::to_string(j) +
                        " has the wrong dimension");
    }
  }
  Vector z = Vector::Zero(static_cast<Eigen::Index>(system.n_z()));
  auto it = system.mixing_entries().lower_bound({i, 0});
  for (; it != system.mixing_entries().end() && it->first.first == i; ++it) {
    z.noalias() += it->second * x[it->first.second];
  }
  return z;
}

Vector compute_interference(const InterferenceSystem& system, const SchedulingProfile& profile,
                            LinkId i) {
  validate_profile(system, profile);
  Vector z = Vector::Zero(static_cast<Eigen::Index>(system.n_z()));
  auto it = system.mixing_entries().lower_bound({i, 0});
  for (; it != system.mixing_entries().end() && it->first.first == i; ++it) {
    const LinkId j = it->first.second;
    z.noalias() += it->second * system.candidates(j)[profile.choice[j]];
  }
  return z;
}

std::vector<double> link_utilities(const InterferenceSystem& system,
                                   const SchedulingProfile& profile) {
  validate_profile(system, profile);
  std::vector<double> out(system.num_links());
  for (std::size_t i = 0; i < system.num_links(); ++i) {
    const Vector z = compute_interference(system, profile, i);
    const double f = system.utility(i).value(system.candidates(i)[profile.choice[i]], z);
    if (!std::isfinite(f)) {
      throw EvaluationError(i, "utility of link " + std::to_string(i) + " is not finite");
    }
    out[i] = f;
  }
  return out;
}

double total_utility(const InterferenceSystem& system, const SchedulingProfile& profile) {
  double total = 0.0;
  for (double f : link_utilities(system, profile)) total += f;
  return total;
}

}  // namespace icbp
