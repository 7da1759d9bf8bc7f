#include <doctest.h>

#include <cmath>
#include <complex>
#include <numbers>

#include "icbp/scenario_femto.hpp"
#include "icbp/utility_models.hpp"
#include "test_support.hpp"

using namespace icbp;
using namespace icbp::testing;
using cd = std::complex<double>;

TEST_CASE("rate of basic flat links") {
  const RateModel m = flat_model(2.0, 0.5, 10.0);
  CHECK(rate(m, vec({0.0}), vec({0.3})) == 0.0);
  // SNR = 1 gives one bit per second per hertz.
  CHECK(rate(m, vec({0.25}), vec({0.0})) == doctest::Approx(10.0).epsilon(1e-15));
  // Negative interference is clamped.
  CHECK(rate(m, vec({0.25}), vec({-3.0})) == rate(m, vec({0.25}), vec({0.0})));
}

TEST_CASE("femto link at 10 m without interference") {
  const FemtoConfig cfg;
  const double gain = std::pow(10.0, -path_loss_db(10.0) / 10.0);
  const RateModel m = flat_model(gain, noise_power_w(cfg), 5e6);
  const double sinr_db = 0.0 - 65.46 - (-103.01);
  CHECK(sinr_db == doctest::Approx(37.55));
  const double expected = 5e6 * std::log2(1.0 + std::pow(10.0, sinr_db / 10.0));
  CHECK(rate(m, vec({1e-3}), vec({0.0})) == doctest::Approx(expected).epsilon(1e-5));
}

TEST_CASE("subband and beamforming rates") {
  const RateModel sub{RateMode::kSubband, vec({1.0, 2.0}), 1.0, 3.0, std::nullopt};
  CHECK(rate(sub, vec({1.0, 1.0}), vec({0.0, 1.0})) ==
        doctest::Approx(3.0 * (std::log2(2.0) + std::log2(2.0))));
  const std::vector<cd> g{cd(1.0, 0.0), cd(0.0, 1.0)};
  const RateModel bf{RateMode::kBeamforming, beamforming_row(g), 1.0, 1.0, std::nullopt};
  // b = g / |g| gives |g^H b|^2 = |g|^2 = 2.
  const std::vector<cd> b{cd(1.0 / std::sqrt(2.0), 0.0), cd(0.0, 1.0 / std::sqrt(2.0))};
  CHECK(rate(bf, beamforming_lift(b), vec({0.0})) == doctest::Approx(std::log2(3.0)));
  RateModel capped = flat_model(1000.0);
  capped.cap_bps_hz = 4.0;
  CHECK(rate(capped, vec({1.0}), vec({0.0})) == 4.0);
}

TEST_CASE("rate model validation") {
  CHECK_THROWS_AS(flat_model(1.0, 0.0).validate(), ConfigError);
  CHECK_THROWS_AS(flat_model(-1.0).validate(), ConfigError);
  CHECK_THROWS_AS(flat_model(1.0, 1.0, 0.0).validate(), ConfigError);
}

TEST_CASE("static utilities") {
  UtilitySpec s;
  CHECK(static_utility(s, 7.0) == 7.0);
  s.kind = UtilityKind::kProportionalFair;
  CHECK(static_utility(s, 1.0) == 0.0);
  CHECK(static_utility(s, 0.0) == doctest::Approx(std::log(kRateFloor)));
  const UtilitySpec beta = parse_utility_spec("beta:1");
  CHECK(static_utility(beta, 2.0) == doctest::Approx(-0.5));
  UtilitySpec w;
  w.kind = UtilityKind::kWeightedRate;
  w.weights = {0.5, 2.0};
  CHECK(static_utility(w, 3.0, 1) == 6.0);
  CHECK_THROWS_AS(w.weight(5), ConfigError);
}

TEST_CASE("utility spec parsing") {
  CHECK(parse_utility_spec("pf").kind == UtilityKind::kProportionalFair);
  CHECK(parse_utility_spec("sumrate").kind == UtilityKind::kSumRate);
  CHECK(parse_utility_spec("beta:2.5").beta == 2.5);
  CHECK_THROWS_AS(parse_utility_spec("beta:-1"), ConfigError);
  CHECK_THROWS_AS(parse_utility_spec("beta:x"), ConfigError);
  CHECK_THROWS_AS(parse_utility_spec("maxmin"), ConfigError);
}

TEST_CASE("marginal weights") {
  DynamicState st{{2.0, 0.0}, 0.1, 0};
  CHECK(marginal_weight(parse_utility_spec("pf"), st, 0) == doctest::Approx(0.5));
  CHECK(marginal_weight(parse_utility_spec("sumrate"), st, 0) == 1.0);
  CHECK(marginal_weight(parse_utility_spec("sumrate"), st, 1) == 1.0);
  CHECK(marginal_weight(parse_utility_spec("beta:1"), st, 0) == doctest::Approx(0.25));
  // A starved link gets a large but finite weight.
  const double w = marginal_weight(parse_utility_spec("pf"), st, 1);
  CHECK(std::isfinite(w));
  CHECK(w == doctest::Approx(1.0 / kRateFloor));
}

TEST_CASE("marginal weight equals a finite difference of the utility") {
  for (const char* name : {"pf", "sumrate", "beta:1", "beta:0.5", "beta:3"}) {
    const UtilitySpec s = parse_utility_spec(name);
    for (double r : {0.3, 2.0, 17.0, 1e4}) {
      DynamicState st{{r}, 0.1, 0};
      const double h = 1e-6 * r;
      const double fd = (static_utility(s, r + h) - static_utility(s, r - h)) / (2 * h);
      CHECK(marginal_weight(s, st, 0) == doctest::Approx(fd).epsilon(1e-6));
      CHECK(utility_derivative(s, r) == doctest::Approx(fd).epsilon(1e-6));
      const double fd2 = (utility_derivative(s, r + h) - utility_derivative(s, r - h)) / (2 * h);
      CHECK(utility_second_derivative(s, r) == doctest::Approx(fd2).epsilon(1e-5));
    }
  }
}

TEST_CASE("average rate filter") {
  DynamicState st{{10.0, 4.0}, 1.0, 0};
  CHECK(update_average_rate(st, 0, 3.0).avg_rate[0] == 3.0);
  st.alpha = 0.1;
  const auto next = update_average_rate(st, 0, 0.0);
  CHECK(next.avg_rate[0] == doctest::Approx(9.0));
  CHECK(next.avg_rate[1] == 4.0);
  CHECK(update_average_rate(st, 1, 4.0).avg_rate[1] == 4.0);
  DynamicState bad{{1.0}, 0.0, 0};
  CHECK_THROWS_AS(bad.validate(), ConfigError);
}

TEST_CASE("filter closed form after constant input") {
  const double r0 = 25.0, r = 7.0, alpha = 0.1;
  DynamicState st{{r0}, alpha, 0};
  for (int t = 0; t < 50; ++t) st = update_average_rate(st, 0, r);
  CHECK(st.avg_rate[0] == doctest::Approx(r + std::pow(1.0 - alpha, 50) * (r0 - r)).epsilon(1e-13));
}

TEST_CASE("beamforming lift examples") {
  const Vector x1 = beamforming_lift({cd(1.0, 0.0)});
  CHECK(x1.isApprox(vec({1.0, 0.0})));
  CHECK(beamforming_row({cd(0.6, 0.8) * 3.0}).dot(x1) == doctest::Approx(9.0));
  const Vector x2 = beamforming_lift({cd(1.0, 0.0), cd(0.0, 0.0)});
  const std::vector<cd> g{cd(0.3, -1.2), cd(2.0, 0.5)};
  CHECK(beamforming_row(g).dot(x2) == doctest::Approx(std::norm(g[0])));
}

TEST_CASE("lifted power equals the two-element array factor") {
  for (double theta : {0.0, 0.4, 1.3, 2.9}) {
    for (double phi : {0.1, 1.0, 2.2, 3.1}) {
      const auto b = steering_vector(theta, 2);
      const std::vector<cd> g{cd(1.0, 0.0), std::polar(1.0, std::numbers::pi * std::cos(phi))};
      const double af =
          std::norm(1.0 + std::polar(1.0, std::numbers::pi * (std::cos(theta) - std::cos(phi)))) /
          2.0;
      CHECK(beamforming_row(g).dot(beamforming_lift(b)) == doctest::Approx(af).epsilon(1e-12));
    }
  }
}

TEST_CASE("lifted power is |g^H b|^2 for random unit beams") {
  RngStream rng(21, {0});
  for (int t = 0; t < 200; ++t) {
    const std::size_t n = 1 + rng.below(4);
    std::vector<cd> b(n), g(n);
    double norm = 0.0;
    for (std::size_t k = 0; k < n; ++k) {
      b[k] = cd(rng.normal(), rng.normal());
      g[k] = cd(rng.normal(), rng.normal());
      norm += std::norm(b[k]);
    }
    cd inner = 0.0;
    for (std::size_t k = 0; k < n; ++k) {
      b[k] /= std::sqrt(norm);
      inner += std::conj(g[k]) * b[k];
    }
    const double p = beamforming_row(g).dot(beamforming_lift(b));
    CHECK(p >= -1e-12);
    CHECK(p == doctest::Approx(std::norm(inner)).epsilon(1e-12));
  }
}

TEST_CASE("rate is monotone in interference and power") {
  RngStream rng(4, {4});
  const RateModel sub{RateMode::kSubband, vec({0.5, 2.0, 1.0}), 0.1, 1.0, std::nullopt};
  int violations = 0;
  for (int t = 0; t < 500; ++t) {
    Vector x(3), z(3);
    for (int k = 0; k < 3; ++k) {
      x[k] = rng.uniform();
      z[k] = rng.uniform(0.0, 2.0);
    }
    const double base = rate(sub, x, z);
    Vector z2 = z;
    z2[rng.below(3)] += rng.uniform();
    Vector x2 = x;
    x2[rng.below(3)] += rng.uniform();
    violations += rate(sub, x, z2) > base + 1e-15;
    violations += rate(sub, x2, z) < base - 1e-15;
  }
  CHECK(violations == 0);
}

TEST_CASE("analytic z-derivatives match finite differences") {
  RngStream rng(9, {9});
  const std::vector<cd> g{cd(1.0, 0.2), cd(-0.3, 0.7)};
  std::vector<RateModel> models{
      flat_model(3.0, 0.5, 2.0),
      {RateMode::kSubband, vec({1.0, 0.4, 2.0}), 0.2, 1.0, std::nullopt},
      {RateMode::kBeamforming, beamforming_row(g), 0.3, 1.5, std::nullopt}};
  std::vector<Vector> xs{vec({1.0}), vec({0.5, 1.0, 0.2}),
                         beamforming_lift(steering_vector(0.7, 2))};
  UtilitySpec w;
  w.kind = UtilityKind::kWeightedRate;
  w.weights = {1.7};
  std::vector<UtilitySpec> specs{parse_utility_spec("pf"), parse_utility_spec("sumrate"),
                                 parse_utility_spec("beta:2"), w};
  for (std::size_t m = 0; m < models.size(); ++m) {
    for (const auto& spec : specs) {
      const RateUtility f(models[m], spec, 0);
      const FunctionUtility generic([&](const Vector& x, const Vector& z) { return f.value(x, z); });
      for (int t = 0; t < 5; ++t) {
        Vector z(static_cast<Eigen::Index>(models[m].interference_dim()));
        for (Eigen::Index k = 0; k < z.size(); ++k) z[k] = rng.uniform(0.1, 2.0);
        Vector ga, gn;
        Matrix ha, hn;
        f.z_derivatives(xs[m], z, ga, ha);
        generic.z_derivatives(xs[m], z, gn, hn);
        CHECK((ga - gn).norm() <= 1e-6 * std::max(1.0, ga.norm()));
        CHECK((ha - hn).norm() <= 1e-4 * std::max(1.0, ha.norm()));
        Matrix zs(z.size(), 3);
        zs << z, 2.0 * z, 0.5 * z;
        double out[3];
        f.values(xs[m], zs, out);
        for (int c = 0; c < 3; ++c) CHECK(out[c] == f.value(xs[m], zs.col(c)));
      }
    }
  }
}
