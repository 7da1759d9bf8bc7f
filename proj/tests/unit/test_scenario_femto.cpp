#include <doctest.h>

#include <cmath>
#include <numbers>

#include "icbp/scenario_femto.hpp"
#include "test_support.hpp"

using namespace icbp;
using namespace icbp::testing;

namespace {

// Number of interior grid lines strictly between two coordinates.
std::size_t crossings(double a, double b, double pitch, std::size_t grid) {
  std::size_t n = 0;
  for (std::size_t m = 1; m < grid; ++m) {
    const double line = pitch * static_cast<double>(m);
    if ((a < line) != (b < line)) ++n;
  }
  return n;
}

double correlation(const std::vector<double>& a, const std::vector<double>& b) {
  const double n = static_cast<double>(a.size());
  double ma = 0, mb = 0;
  for (std::size_t k = 0; k < a.size(); ++k) {
    ma += a[k] / n;
    mb += b[k] / n;
  }
  double sab = 0, saa = 0, sbb = 0;
  for (std::size_t k = 0; k < a.size(); ++k) {
    sab += (a[k] - ma) * (b[k] - mb);
    saa += (a[k] - ma) * (a[k] - ma);
    sbb += (b[k] - mb) * (b[k] - mb);
  }
  return sab / std::sqrt(saa * sbb);
}

}  // namespace

TEST_CASE("path loss") {
  CHECK(path_loss_db(1.0) == doctest::Approx(39.16));
  CHECK(path_loss_db(10.0) == doctest::Approx(65.46));
  CHECK(path_loss_db(100.0) == doctest::Approx(148.46));
  CHECK(path_loss_db(0.0) == doctest::Approx(path_loss_db(0.1)));
}

TEST_CASE("noise power") {
  FemtoConfig c;
  CHECK(noise_power_dbm(c) == doctest::Approx(-103.01).epsilon(1e-4));
  CHECK(noise_power_dbm(c, 4) == doctest::Approx(-109.03).epsilon(1e-4));
  CHECK(watts_to_dbm(noise_power_w(c)) == doctest::Approx(-103.01).epsilon(1e-4));
  c.noise_figure_db = 0.0;
  CHECK(noise_power_dbm(c) == doctest::Approx(-107.01).epsilon(1e-4));
  CHECK(dbm_to_watts(30.0) == doctest::Approx(1.0));
}

TEST_CASE("link gain components") {
  FemtoConfig c;
  FemtoDrop d;
  d.apartments = {0, 1};
  d.bs = {{5, 5}, {15, 5}};
  d.ue = {{6, 5}, {16, 5}};
  d.distance_m = Matrix::Constant(2, 2, 8.0);
  d.walls = Matrix::Zero(2, 2);
  d.walls(0, 1) = 1.0;
  d.shadowing_db = Matrix::Zero(2, 2);
  const double same = link_gain(c, d, 0, 0, FemtoMode::kOnOff);
  CHECK(10 * std::log10(same) == doctest::Approx(-path_loss_db(8.0)));
  CHECK(10 * std::log10(same / link_gain(c, d, 0, 1, FemtoMode::kOnOff)) == doctest::Approx(10.0));
  CHECK(link_gain(c, d, 0, 1, FemtoMode::kBeamforming) == doctest::Approx(same));
  d.shadowing_db(1, 1) = 3.0;
  CHECK(10 * std::log10(same / link_gain(c, d, 1, 1, FemtoMode::kOnOff)) == doctest::Approx(3.0));
}

TEST_CASE("drop geometry") {
  FemtoConfig c;
  for (std::size_t k = 0; k < 200; ++k) {
    const auto d = generate_drop(c, 11, k);
    REQUIRE(d.num_links() == 5);
    CHECK(std::is_sorted(d.apartments.begin(), d.apartments.end()));
    CHECK(std::adjacent_find(d.apartments.begin(), d.apartments.end()) == d.apartments.end());
    for (std::size_t i = 0; i < 5; ++i) {
      const double x0 = 10.0 * static_cast<double>(d.apartments[i] % 3);
      const double y0 = 10.0 * static_cast<double>(d.apartments[i] / 3);
      for (const Point& p : {d.bs[i], d.ue[i]}) {
        CHECK(p.x >= x0);
        CHECK(p.x <= x0 + 10.0);
        CHECK(p.y >= y0);
        CHECK(p.y <= y0 + 10.0);
      }
      for (std::size_t j = 0; j < 5; ++j) {
        const auto ii = Eigen::Index(i), jj = Eigen::Index(j);
        const auto want = crossings(d.bs[j].x, d.ue[i].x, 10.0, 3) + crossings(d.bs[j].y, d.ue[i].y, 10.0, 3);
        CHECK(d.walls(ii, jj) == static_cast<double>(want));
        CHECK(d.distance_m(ii, jj) ==
              doctest::Approx(std::hypot(d.bs[j].x - d.ue[i].x, d.bs[j].y - d.ue[i].y)));
      }
    }
  }
  CHECK(wall_count({1, 1}, {29, 29}, 10.0, 3) == 4);
  CHECK(wall_count({1, 1}, {9, 2}, 10.0, 3) == 0);
}

TEST_CASE("fixed apartments") {
  FemtoConfig c;
  c.fixed_apartments = {0, 2, 4, 6, 8};
  CHECK(generate_drop(c, 1, 0).apartments == c.fixed_apartments);
  c.fixed_apartments = {0, 0, 1, 2, 3};
  CHECK_THROWS_AS(c.validate(), ConfigError);
}

TEST_CASE("shadowing statistics") {
  FemtoConfig c;
  double sum = 0, sq = 0;
  std::size_t n = 0;
  for (std::size_t k = 0; k < 4000; ++k) {
    const auto d = generate_drop(c, 3, k);
    for (Eigen::Index e = 0; e < d.shadowing_db.size(); ++e) {
      const double v = d.shadowing_db.data()[e];
      sum += v;
      sq += v * v;
      ++n;
    }
  }
  const double mean = sum / double(n);
  const double sd = std::sqrt(sq / double(n) - mean * mean);
  CHECK(n == 100000);
  CHECK(std::abs(sd - 10.0) < 0.1);
}

TEST_CASE("flat fading has unit mean power") {
  FemtoConfig c;
  const auto d = generate_drop(c, 5, 0);
  double ratio = 0;
  std::size_t n = 0;
  for (std::size_t slot = 0; slot < 4000; ++slot) {
    const auto ch = draw_channels(c, d, FemtoMode::kOnOff, slot);
    for (LinkId i = 0; i < 5; ++i) {
      for (LinkId j = 0; j < 5; ++j) {
        ratio += ch.gains[0](Eigen::Index(i), Eigen::Index(j)) / link_gain(c, d, i, j, FemtoMode::kOnOff);
        ++n;
      }
    }
  }
  CHECK(std::abs(ratio / double(n) - 1.0) < 0.01);
}

TEST_CASE("subband fades are uncorrelated and static across slots") {
  FemtoConfig c;
  std::vector<std::vector<double>> fades(4);
  for (std::size_t k = 0; k < 2000; ++k) {
    const auto d = generate_drop(c, 6, k);
    const auto ch = draw_channels(c, d, FemtoMode::kSubband);
    REQUIRE(ch.gains.size() == 4);
    for (LinkId i = 0; i < 5; ++i) {
      for (LinkId j = 0; j < 5; ++j) {
        const double base = link_gain(c, d, i, j, FemtoMode::kSubband);
        for (std::size_t b = 0; b < 4; ++b) fades[b].push_back(ch.gains[b](Eigen::Index(i), Eigen::Index(j)) / base);
      }
    }
  }
  for (std::size_t a = 0; a < 4; ++a) {
    for (std::size_t b = a + 1; b < 4; ++b) CHECK(std::abs(correlation(fades[a], fades[b])) < 0.05);
  }
  const auto d = generate_drop(c, 6, 0);
  CHECK(realization_hash(draw_channels(c, d, FemtoMode::kSubband, 0)) ==
        realization_hash(draw_channels(c, d, FemtoMode::kSubband, 7)));
}

TEST_CASE("reproducibility") {
  FemtoConfig c;
  const auto a = generate_drop(c, 9, 3);
  const auto b = generate_drop(c, 9, 3);
  CHECK(a.apartments == b.apartments);
  CHECK(a.shadowing_db == b.shadowing_db);
  CHECK(drop_to_json(a, c, FemtoMode::kOnOff).dump() == drop_to_json(b, c, FemtoMode::kOnOff).dump());
  for (FemtoMode m : {FemtoMode::kOnOff, FemtoMode::kSubband, FemtoMode::kBeamforming}) {
    CHECK(realization_hash(draw_channels(c, a, m, 2)) == realization_hash(draw_channels(c, b, m, 2)));
  }
  CHECK(realization_hash(draw_channels(c, a, FemtoMode::kOnOff, 1)) !=
        realization_hash(draw_channels(c, a, FemtoMode::kOnOff, 2)));
  CHECK(generate_drop(c, 9, 4).shadowing_db != a.shadowing_db);
}

TEST_CASE("instance candidate sets") {
  FemtoConfig c;
  const auto d = generate_drop(c, 1, 0);
  const auto spec = parse_utility_spec("pf");
  const auto onoff = build_instance(c, draw_channels(c, d, FemtoMode::kOnOff), spec);
  CHECK(onoff.system.candidates(0).size() == 2);
  CHECK(onoff.system.candidates(0)[1][0] == doctest::Approx(c.tx_power_w));
  const auto sub = build_instance(c, draw_channels(c, d, FemtoMode::kSubband), spec);
  CHECK(sub.system.candidates(0).size() == 15);
  CHECK(sub.system.n_z() == 4);
  const auto& all = sub.system.candidates(0)[14];
  for (int k = 0; k < 4; ++k) CHECK(all[k] == doctest::Approx(c.tx_power_w / 4));
  CHECK(sub.system.candidates(0)[0].sum() == doctest::Approx(c.tx_power_w));
  const auto bf = build_instance(c, draw_channels(c, d, FemtoMode::kBeamforming), spec);
  CHECK(bf.system.candidates(0).size() == 10);
  REQUIRE(bf.angles.size() == 10);
  CHECK(bf.angles.front() == 0.0);
  CHECK(bf.angles.back() == doctest::Approx(std::numbers::pi));
  CHECK(bf.angles[1] == doctest::Approx(std::numbers::pi / 9));
}

TEST_CASE("realized rates agree with the mixing model") {
  FemtoConfig c;
  const auto d = generate_drop(c, 2, 0);
  const auto spec = parse_utility_spec("sumrate");
  const auto inst = build_instance(c, draw_channels(c, d, FemtoMode::kOnOff, 0), spec);
  const SchedulingProfile on{std::vector<std::size_t>(5, 1)};
  const auto rates = realized_rates(inst, on);
  const auto ch = draw_channels(c, d, FemtoMode::kOnOff, 0);
  const double noise = noise_power_w(c);
  for (LinkId i = 0; i < 5; ++i) {
    double interference = 0.0;
    for (LinkId j = 0; j < 5; ++j) {
      if (j != i) interference += ch.gains[0](Eigen::Index(i), Eigen::Index(j)) * c.tx_power_w;
    }
    const double sinr = ch.gains[0](Eigen::Index(i), Eigen::Index(i)) * c.tx_power_w / (noise + interference);
    CHECK(rates[i] == doctest::Approx(c.bandwidth_hz * std::log2(1 + sinr)).epsilon(1e-12));
  }
}

TEST_CASE("steering vectors") {
  const auto b = steering_vector(std::numbers::pi / 3, 2);
  CHECK(std::abs(b[0]) == doctest::Approx(1 / std::sqrt(2.0)));
  CHECK(std::arg(b[1]) == doctest::Approx(std::numbers::pi * 0.5));
}

TEST_CASE("mode names") {
  CHECK(parse_femto_mode("subband") == FemtoMode::kSubband);
  CHECK(femto_mode_name(FemtoMode::kBeamforming) == "beamforming");
  CHECK_THROWS_AS(parse_femto_mode("ofdm"), ConfigError);
}
