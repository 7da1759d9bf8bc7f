#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <numeric>

#include "icbp/bp_exact.hpp"
#include "test_support.hpp"

using namespace icbp;
using namespace icbp::testing;

namespace {

double lse(const std::vector<double>& v) {
  double m = *std::max_element(v.begin(), v.end());
  double s = 0.0;
  for (double x : v) s += std::exp(x - m);
  return m + std::log(s);
}

std::vector<double> normalized(std::vector<double> v) {
  const double l = lse(v);
  for (double& x : v) x -= l;
  return v;
}

// Term-by-term evaluation of the receiver message by nested enumeration.
std::vector<double> rx_oracle(const InterferenceSystem& s, const FactorGraph& g,
                              const MessageTable& msg, LinkId i, LinkId j, double u) {
  std::vector<LinkId> others;
  for (LinkId k : g.rx_neighbors[i]) {
    if (k != j) others.push_back(k);
  }
  std::vector<double> out(s.candidates(j).size(), 0.0);
  for (std::size_t xj = 0; xj < out.size(); ++xj) {
    std::vector<std::size_t> c(others.size(), 0);
    double total = 0.0;
    for (;;) {
      std::vector<std::size_t> choice(s.num_links(), 0);
      choice[j] = xj;
      double w = 1.0;
      for (std::size_t r = 0; r < others.size(); ++r) {
        choice[others[r]] = c[r];
        w *= std::exp(msg.to_rx[g.edge_index(i, others[r])][c[r]]);
      }
      Vector z = Vector::Zero(1);
      for (LinkId k : g.rx_neighbors[i]) {
        if (k != i) z += *s.mixing(i, k) * s.candidates(k)[choice[k]];
      }
      total += w * std::exp(u * s.utility(i).value(s.candidates(i)[choice[i]], z));
      std::size_t r = 0;
      for (; r < c.size(); ++r) {
        if (++c[r] < s.candidates(others[r]).size()) break;
        c[r] = 0;
      }
      if (r == c.size()) break;
    }
    out[xj] = std::log(total);
  }
  return normalized(out);
}

InterferenceSystem three_link_dense(RngStream& rng) { return random_onoff(rng, 3); }

}  // namespace

TEST_CASE("Gibbs table limits") {
  RngStream rng(1, {1});
  const auto s = random_onoff(rng, 3);
  const auto t = gibbs_distribution(s, 1e-9);
  for (double p : t.probability) CHECK(p == doctest::Approx(1.0 / 8.0).epsilon(1e-6));

  std::vector<InterferenceSystem::Link> one{
      {onoff_set(), fn_utility([](const Vector& x, const Vector&) { return 0.3 * x[0]; }), 1.0}};
  const auto t1 = gibbs_distribution(InterferenceSystem(1, one, {}), 4.0);
  CHECK(t1.probability[1] / t1.probability[0] == doctest::Approx(std::exp(4.0 * 0.3)));
}

TEST_CASE("Gibbs table matches naive enumeration") {
  RngStream rng(2, {1});
  for (int trial = 0; trial < 10; ++trial) {
    const auto s = three_link_dense(rng);
    const double u = 2.0;
    const auto t = gibbs_distribution(s, u);
    std::vector<double> weights;
    double z = 0.0;
    for (std::size_t a = 0; a < 2; ++a) {
      for (std::size_t b = 0; b < 2; ++b) {
        for (std::size_t c = 0; c < 2; ++c) {
          const double x[3] = {double(a), double(b), double(c)};
          double f = 0.0;
          for (LinkId i = 0; i < 3; ++i) {
            double zi = 0.0;
            for (LinkId j = 0; j < 3; ++j) {
              if (i != j) zi += (*s.mixing(i, j))(0, 0) * x[j];
            }
            f += std::log2(1.0 + s.link(i).serving_gain * x[i] / (1.0 + zi));
          }
          weights.push_back(std::exp(u * f));
          z += weights.back();
        }
      }
    }
    for (std::size_t k = 0; k < 8; ++k) {
      CHECK(t.probability[k] == doctest::Approx(weights[k] / z).epsilon(1e-12));
    }
    CHECK(t.log_partition == doctest::Approx(std::log(z)).epsilon(1e-12));
  }
}

TEST_CASE("Gibbs enumeration cap") {
  RngStream rng(3, {1});
  const auto s = random_onoff(rng, 5);
  CHECK_THROWS_AS(gibbs_distribution(s, 1.0, 16), OracleInfeasible);
}

TEST_CASE("receiver message with constant utility is uniform") {
  std::vector<InterferenceSystem::Link> links(
      3, {onoff_set(), fn_utility([](const Vector&, const Vector&) { return 2.0; }), 1.0});
  const InterferenceSystem s(1, links, {{{0, 1}, scalar(1.0)}, {{0, 2}, scalar(0.5)}});
  const auto g = build_factor_graph(s);
  const auto m = uniform_messages(s, g);
  for (LinkId j : {0, 1, 2}) {
    for (double v : rx_update_exact(s, g, m, 0, j, 3.0)) CHECK(v == doctest::Approx(std::log(0.5)));
  }
}

TEST_CASE("receiver message with point-mass beliefs collapses the expectation") {
  RngStream rng(4, {1});
  const auto s = three_link_dense(rng);
  const auto g = build_factor_graph(s);
  auto m = uniform_messages(s, g);
  // Link 2 is certainly on.
  m.to_rx[g.edge_index(0, 2)] = {-INFINITY, 0.0};
  m.to_rx[g.edge_index(0, 0)] = {-INFINITY, 0.0};
  const double u = 1.5;
  const auto msg = rx_update_exact(s, g, m, 0, 1, u);
  std::vector<double> expected(2);
  for (std::size_t x1 = 0; x1 < 2; ++x1) {
    const double z = (*s.mixing(0, 1))(0, 0) * double(x1) + (*s.mixing(0, 2))(0, 0);
    expected[x1] = u * s.utility(0).value(vec({1.0}), vec({z}));
  }
  expected = normalized(expected);
  for (std::size_t k = 0; k < 2; ++k) CHECK(msg[k] == doctest::Approx(expected[k]).epsilon(1e-12));
}

TEST_CASE("receiver messages match term-by-term enumeration") {
  RngStream rng(5, {1});
  for (int trial = 0; trial < 20; ++trial) {
    const auto s = random_onoff(rng, 4);
    const auto g = build_factor_graph(s);
    auto m = uniform_messages(s, g);
    for (auto& t : m.to_rx) {
      for (double& v : t) v = rng.normal();
      t = normalized(t);
    }
    for (LinkId j : g.rx_neighbors[1]) {
      const auto got = rx_update_exact(s, g, m, 1, j, 2.5);
      const auto want = rx_oracle(s, g, m, 1, j, 2.5);
      for (std::size_t k = 0; k < got.size(); ++k) {
        CHECK(got[k] == doctest::Approx(want[k]).epsilon(1e-12));
      }
    }
  }
}

TEST_CASE("receiver neighbor cap") {
  std::map<std::pair<LinkId, LinkId>, double> cross;
  for (LinkId j = 1; j < 14; ++j) cross[{0, j}] = 0.1;
  const auto s = rate_system(std::vector<double>(14, 1.0), cross,
                             std::vector<SchedulingSet>(14, onoff_set()));
  const auto g = build_factor_graph(s);
  CHECK_THROWS_AS(rx_update_exact(s, g, uniform_messages(s, g), 0, 0, 1.0), ConfigError);
}

TEST_CASE("transmitter messages") {
  RngStream rng(6, {1});
  SUBCASE("single neighbor gives a uniform message") {
    const auto s = rate_system({1.0, 1.0}, {}, {onoff_set(), onoff_set()});
    const auto g = build_factor_graph(s);
    auto m = uniform_messages(s, g);
    m.to_tx[g.edge_index(0, 0)] = normalized({0.0, 5.0});
    for (double v : tx_update_exact(g, m, 0, 0)) CHECK(v == doctest::Approx(std::log(0.5)));
  }
  SUBCASE("leave-one-out product") {
    const auto s = three_link_dense(rng);
    const auto g = build_factor_graph(s);
    auto m = uniform_messages(s, g);
    const std::vector<double> q = normalized({0.3, -1.1});
    m.to_tx[g.edge_index(0, 0)] = q;
    m.to_tx[g.edge_index(1, 0)] = q;
    m.to_tx[g.edge_index(2, 0)] = normalized({0.0, 0.0});
    const auto out = tx_update_exact(g, m, 0, 1);
    const auto want = normalized(q);
    for (std::size_t k = 0; k < 2; ++k) CHECK(out[k] == doctest::Approx(want[k]).epsilon(1e-12));
  }
  SUBCASE("three random messages match a log-domain sum") {
    const auto s = three_link_dense(rng);
    const auto g = build_factor_graph(s);
    auto m = uniform_messages(s, g);
    for (LinkId i = 0; i < 3; ++i) m.to_tx[g.edge_index(i, 2)] = normalized({rng.normal(), rng.normal()});
    for (LinkId i = 0; i < 3; ++i) {
      std::vector<double> sum(2, 0.0);
      for (LinkId l = 0; l < 3; ++l) {
        if (l == i) continue;
        for (int k = 0; k < 2; ++k) sum[k] += m.to_tx[g.edge_index(l, 2)][k];
      }
      const auto want = normalized(sum);
      const auto out = tx_update_exact(g, m, 2, i);
      for (int k = 0; k < 2; ++k) CHECK(out[k] == doctest::Approx(want[k]).epsilon(1e-12));
    }
  }
  SUBCASE("degenerate products fall back to uniform") {
    const auto s = three_link_dense(rng);
    const auto g = build_factor_graph(s);
    auto m = uniform_messages(s, g);
    m.to_tx[g.edge_index(0, 2)] = {0.0, -INFINITY};
    m.to_tx[g.edge_index(1, 2)] = {-INFINITY, 0.0};
    std::size_t degenerate = 0;
    const auto out = tx_update_exact(g, m, 2, 2, 0.0, nullptr, &degenerate);
    CHECK(degenerate == 1);
    CHECK(out[0] == doctest::Approx(std::log(0.5)));
  }
  SUBCASE("damping mixes geometrically with the previous message") {
    const auto s = three_link_dense(rng);
    const auto g = build_factor_graph(s);
    auto m = uniform_messages(s, g);
    m.to_tx[g.edge_index(0, 2)] = normalized({1.0, 0.0});
    const std::vector<double> prev = normalized({0.0, 2.0});
    const auto out = tx_update_exact(g, m, 2, 1, 0.5, &prev);
    const auto fresh = tx_update_exact(g, m, 2, 1);
    const auto want = normalized({0.5 * prev[0] + 0.5 * fresh[0], 0.5 * prev[1] + 0.5 * fresh[1]});
    for (int k = 0; k < 2; ++k) CHECK(out[k] == doctest::Approx(want[k]).epsilon(1e-12));
  }
}

TEST_CASE("final decisions") {
  RngStream rng(7, {1});
  const auto s = three_link_dense(rng);
  const auto g = build_factor_graph(s);
  auto m = uniform_messages(s, g);
  CHECK(final_decision_exact(g, m, 0) == 0);
  m.to_tx[g.edge_index(1, 0)] = {-INFINITY, 0.0};
  CHECK(final_decision_exact(g, m, 0) == 1);
}

TEST_CASE("single link picks its isolated optimum in one round") {
  std::vector<InterferenceSystem::Link> one{
      {SchedulingSet({vec({0.0}), vec({1.0}), vec({2.0})}),
       fn_utility([](const Vector& x, const Vector&) { return -(x[0] - 1.0) * (x[0] - 1.0); }), 1.0}};
  BPConfig cfg;
  cfg.rounds = 1;
  CHECK(run_exact_bp(InterferenceSystem(1, one, {}), cfg).profile.choice[0] == 1);
}

TEST_CASE("two-link tree at large u finds the optimum") {
  RngStream rng(8, {1});
  for (int trial = 0; trial < 20; ++trial) {
    const auto s = rate_system({rng.uniform(1, 10), rng.uniform(1, 10)},
                               {{{0, 1}, rng.uniform(0.5, 5.0)}}, {onoff_set(), onoff_set()});
    BPConfig cfg;
    cfg.u = 200.0;
    cfg.rounds = 3;
    const auto r = run_exact_bp(s, cfg);
    CHECK(r.profile.choice == brute_force_best(s).second);
  }
}

TEST_CASE("acyclic chain marginals equal Gibbs marginals") {
  RngStream rng(9, {1});
  for (int trial = 0; trial < 10; ++trial) {
    const auto s = rate_system({rng.uniform(1, 10), rng.uniform(1, 10), rng.uniform(1, 10)},
                               {{{0, 1}, rng.uniform(0.2, 2)}, {{2, 1}, rng.uniform(0.2, 2)}},
                               std::vector<SchedulingSet>(3, onoff_set()));
    BPConfig cfg;
    cfg.rounds = 6;
    const auto r = run_exact_bp(s, cfg);
    const auto exact = gibbs_marginals(s, gibbs_distribution(s, r.u_effective));
    for (LinkId j = 0; j < 3; ++j) {
      for (std::size_t k = 0; k < 2; ++k) CHECK(std::abs(r.marginals[j][k] - exact[j][k]) < 1e-9);
    }
  }
}

TEST_CASE("messages stay normalized every round") {
  RngStream rng(10, {1});
  const auto s = random_onoff(rng, 4);
  BPConfig cfg;
  cfg.rounds = 5;
  cfg.record_history = true;
  const auto r = run_exact_bp(s, cfg);
  REQUIRE(r.history.size() == 5);
  double worst = 0.0;
  for (const auto& h : r.history) {
    for (const auto* tables : {&h.to_tx, &h.to_rx}) {
      for (const auto& t : *tables) {
        double sum = 0.0;
        for (double v : t) sum += std::exp(v);
        worst = std::max(worst, std::abs(sum - 1.0));
      }
    }
  }
  CHECK(worst < 1e-12);
}

TEST_CASE("Gibbs mass on the maximizer grows with u") {
  RngStream rng(11, {1});
  for (int trial = 0; trial < 20; ++trial) {
    const auto s = random_onoff(rng, 3);
    std::size_t best = 0;
    const auto t1 = gibbs_distribution(s, 1.0);
    for (std::size_t k = 1; k < t1.objective.size(); ++k) {
      if (t1.objective[k] > t1.objective[best]) best = k;
    }
    double prev = 0.0;
    for (double u : {1.0, 10.0, 100.0}) {
      const double p = gibbs_distribution(s, u).probability[best];
      CHECK(p >= prev - 1e-15);
      prev = p;
    }
  }
}

TEST_CASE("relabeling links permutes the decision") {
  RngStream rng(12, {1});
  for (int trial = 0; trial < 10; ++trial) {
    const std::size_t n = 4;
    std::vector<double> direct(n);
    std::map<std::pair<LinkId, LinkId>, double> cross;
    for (auto& d : direct) d = rng.uniform(1, 30);
    for (LinkId i = 0; i < n; ++i) {
      for (LinkId j = 0; j < n; ++j) {
        if (i != j) cross[{i, j}] = rng.uniform(0.1, 10);
      }
    }
    const std::vector<LinkId> perm{2, 0, 3, 1};  // new index of old link
    std::vector<double> pdirect(n);
    std::map<std::pair<LinkId, LinkId>, double> pcross;
    for (LinkId i = 0; i < n; ++i) pdirect[perm[i]] = direct[i];
    for (const auto& [k, a] : cross) pcross[{perm[k.first], perm[k.second]}] = a;
    const auto sets = std::vector<SchedulingSet>(n, onoff_set());
    BPConfig cfg;
    cfg.rounds = 4;
    const auto a = run_exact_bp(rate_system(direct, cross, sets), cfg).profile;
    const auto b = run_exact_bp(rate_system(pdirect, pcross, sets), cfg).profile;
    for (LinkId i = 0; i < n; ++i) CHECK(a.choice[i] == b.choice[perm[i]]);
  }
}

TEST_CASE("config validation") {
  BPConfig cfg;
  cfg.u = 0.0;
  CHECK_THROWS_AS(cfg.validate(), ConfigError);
  cfg = {};
  cfg.rounds = 0;
  CHECK_THROWS_AS(cfg.validate(), ConfigError);
  cfg = {};
  cfg.damping = 1.0;
  CHECK_THROWS_AS(cfg.validate(), ConfigError);
}
