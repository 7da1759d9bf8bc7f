#include "icbp/scenario_femto.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <numbers>

#include "icbp/rng.hpp"

namespace icbp {
namespace {

// Stream ids below the drop index.
constexpr std::uint64_t kGeometryStream = 1;
constexpr std::uint64_t kShadowStream = 2;
constexpr std::uint64_t kFadingStream = 3;

std::size_t apartment_of(const Point& p, double apartment_m, std::size_t grid) {
  auto cell = [&](double v) {
    const auto c = static_cast<std::ptrdiff_t>(std::floor(v / apartment_m));
    return static_cast<std::size_t>(std::clamp<std::ptrdiff_t>(c, 0, grid - 1));
  };
  return cell(p.y) * grid + cell(p.x);
}

}  // namespace

FemtoMode parse_femto_mode(const std::string& text) {
  if (text == "onoff") return FemtoMode::kOnOff;
  if (text == "subband") return FemtoMode::kSubband;
  if (text == "beamforming") return FemtoMode::kBeamforming;
  throw ConfigError("unknown mode '" + text + "'");
}

std::string femto_mode_name(FemtoMode mode) {
  switch (mode) {
    case FemtoMode::kOnOff: return "onoff";
    case FemtoMode::kSubband: return "subband";
    case FemtoMode::kBeamforming: return "beamforming";
  }
  return "unknown";
}

void FemtoConfig::validate() const {
  if (grid == 0 || !(apartment_m > 0.0)) throw ConfigError("grid must be non-empty");
  if (active_links == 0 || active_links > apartments()) {
    throw ConfigError("active links must be between 1 and the number of apartments");
  }
  if (!fixed_apartments.empty()) {
    if (fixed_apartments.size() != active_links) {
      throw ConfigError("fixed apartment list must name every active link");
    }
    std::vector<std::size_t> sorted = fixed_apartments;
    std::sort(sorted.begin(), sorted.end());
    if (std::adjacent_find(sorted.begin(), sorted.end()) != sorted.end() ||
        sorted.back() >= apartments()) {
      throw ConfigError("fixed apartments must be distinct and inside the grid");
    }
  }
  if (!(tx_power_w > 0.0) || !(bandwidth_hz > 0.0)) {
    throw ConfigError("power and bandwidth must be positive");
  }
  if (!(shadowing_std_db >= 0.0)) throw ConfigError("shadowing std must be non-negative");
  if (wall_loss_db && !(*wall_loss_db >= 0.0)) throw ConfigError("wall loss must be >= 0");
  if (subbands == 0 || subbands > 12) throw ConfigError("subbands must be in [1, 12]");
  if (beam_angles < 1 || antennas < 1 || antennas > 4) {
    throw ConfigError("need at least one beam and 1 to 4 antennas");
  }
}

double FemtoConfig::wall_loss_for(FemtoMode mode) const {
  if (wall_loss_db) return *wall_loss_db;
  return mode == FemtoMode::kBeamforming ? 0.0 : 10.0;
}

double path_loss_db(double r_m) {
  const double r = std::max(r_m, 0.1);
  return 38.46 + 20.0 * std::log10(r) + 0.7 * r;
}

double dbm_to_watts(double dbm) { return std::pow(10.0, (dbm - 30.0) / 10.0); }
double watts_to_dbm(double w) { return 10.0 * std::log10(w) + 30.0; }

double noise_power_dbm(const FemtoConfig& config, std::size_t subbands) {
  return config.noise_density_dbm_hz +
         10.0 * std::log10(config.bandwidth_hz / static_cast<double>(subbands)) +
         config.noise_figure_db;
}

double noise_power_w(const FemtoConfig& config, std::size_t subbands) {
  return dbm_to_watts(noise_power_dbm(config, subbands));
}

std::size_t wall_count(const Point& a, const Point& b, double apartment_m, std::size_t grid) {
  const std::size_t pa = apartment_of(a, apartment_m, grid);
  const std::size_t pb = apartment_of(b, apartment_m, grid);
  const auto dc = static_cast<std::ptrdiff_t>(pa % grid) - static_cast<std::ptrdiff_t>(pb % grid);
  const auto dr = static_cast<std::ptrdiff_t>(pa / grid) - static_cast<std::ptrdiff_t>(pb / grid);
  return static_cast<std::size_t>(std::abs(dc) + std::abs(dr));
}

FemtoDrop generate_drop(const FemtoConfig& config, std::uint64_t seed, std::size_t drop_index) {
  config.validate();
  FemtoDrop d;
  d.seed = seed;
  d.index = drop_index;
  RngStream geo(seed, {drop_index, kGeometryStream});
  if (config.fixed_apartments.empty()) {
    std::vector<std::size_t> all(config.apartments());
    for (std::size_t a = 0; a < all.size(); ++a) all[a] = a;
    for (std::size_t a = 0; a + 1 < all.size(); ++a) {
      const std::size_t k = a + geo.below(all.size() - a);
      std::swap(all[a], all[k]);
    }
    d.apartments.assign(all.begin(), all.begin() + config.active_links);
    std::sort(d.apartments.begin(), d.apartments.end());
  } else {
    d.apartments = config.fixed_apartments;
  }
  const std::size_t n = d.apartments.size();
  const double w = config.apartment_m;
  for (std::size_t a : d.apartments) {
    const double x0 = static_cast<double>(a % config.grid) * w;
    const double y0 = static_cast<double>(a / config.grid) * w;
    d.bs.push_back({geo.uniform(x0, x0 + w), geo.uniform(y0, y0 + w)});
    d.ue.push_back({geo.uniform(x0, x0 + w), geo.uniform(y0, y0 + w)});
  }
  const auto nn = static_cast<Eigen::Index>(n);
  d.distance_m.resize(nn, nn);
  d.walls.resize(nn, nn);
  d.shadowing_db.resize(nn, nn);
  RngStream shadow(seed, {drop_index, kShadowStream});
  for (Eigen::Index i = 0; i < nn; ++i) {
    for (Eigen::Index j = 0; j < nn; ++j) {
      const Point& ue = d.ue[static_cast<std::size_t>(i)];
      const Point& bs = d.bs[static_cast<std::size_t>(j)];
      d.distance_m(i, j) = std::hypot(ue.x - bs.x, ue.y - bs.y);
      d.walls(i, j) = static_cast<double>(wall_count(bs, ue, w, config.grid));
      d.shadowing_db(i, j) = config.shadowing_std_db * shadow.normal();
    }
  }
  return d;
}

double link_gain(const FemtoConfig& config, const FemtoDrop& drop, LinkId i, LinkId j,
                 FemtoMode mode) {
  const auto ii = static_cast<Eigen::Index>(i);
  const auto jj = static_cast<Eigen::Index>(j);
  const double db = -path_loss_db(drop.distance_m(ii, jj)) -
                    drop.walls(ii, jj) * config.wall_loss_for(mode) - drop.shadowing_db(ii, jj);
  return std::pow(10.0, db / 10.0);
}

ChannelRealization draw_channels(const FemtoConfig& config, const FemtoDrop& drop,
                                 FemtoMode mode, std::size_t slot) {
  const std::size_t n = drop.num_links();
  const auto nn = static_cast<Eigen::Index>(n);
  ChannelRealization c;
  c.mode = mode;
  Matrix large(nn, nn);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < n; ++j) {
      large(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) =
          link_gain(config, drop, i, j, mode);
    }
  }
  RngStream fading(drop.seed, {drop.index, kFadingStream, slot});
  auto fade = [&]() { return config.rayleigh_fading ? fading.exponential() : 1.0; };
  switch (mode) {
    case FemtoMode::kOnOff: {
      Matrix g = large;
      for (Eigen::Index i = 0; i < nn; ++i) {
        for (Eigen::Index j = 0; j < nn; ++j) g(i, j) *= fade();
      }
      c.gains.push_back(std::move(g));
      break;
    }
    case FemtoMode::kSubband: {
      // Static per drop: the slot index does not enter the subband stream.
      RngStream band(drop.seed, {drop.index, kFadingStream, 0});
      for (std::size_t k = 0; k < config.subbands; ++k) {
        Matrix g = large;
        for (Eigen::Index i = 0; i < nn; ++i) {
          for (Eigen::Index j = 0; j < nn; ++j) {
            g(i, j) *= config.rayleigh_fading ? band.exponential() : 1.0;
          }
        }
        c.gains.push_back(std::move(g));
      }
      break;
    }
    case FemtoMode::kBeamforming: {
      c.channel.assign(n, std::vector<std::vector<std::complex<double>>>(n));
      for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = 0; j < n; ++j) {
          const double bearing =
              std::atan2(drop.ue[i].y - drop.bs[j].y, drop.ue[i].x - drop.bs[j].x);
          const double amp =
              std::sqrt(large(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)));
          auto& h = c.channel[i][j];
          for (std::size_t k = 0; k < config.antennas; ++k) {
            h.push_back(std::polar(amp, std::numbers::pi * static_cast<double>(k) *
                                            std::cos(bearing)));
          }
        }
      }
      break;
    }
  }
  return c;
}

std::uint64_t realization_hash(const ChannelRealization& channels) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  auto mix = [&](double v) {
    std::uint64_t bits = std::bit_cast<std::uint64_t>(v);
    for (int b = 0; b < 8; ++b) {
      h ^= (bits >> (8 * b)) & 0xffU;
      h *= 0x100000001b3ULL;
    }
  };
  mix(static_cast<double>(channels.mode));
  for (const auto& g : channels.gains) {
    for (Eigen::Index k = 0; k < g.size(); ++k) mix(g.data()[k]);
  }
  for (const auto& row : channels.channel) {
    for (const auto& h_ij : row) {
      for (const auto& v : h_ij) {
        mix(v.real());
        mix(v.imag());
      }
    }
  }
  return h;
}

std::vector<std::complex<double>> steering_vector(double theta, std::size_t antennas) {
  std::vector<std::complex<double>> b;
  const double scale = 1.0 / std::sqrt(static_cast<double>(antennas));
  for (std::size_t k = 0; k < antennas; ++k) {
    b.push_back(std::polar(scale, std::numbers::pi * static_cast<double>(k) * std::cos(theta)));
  }
  return b;
}

std::vector<double> beam_angles(std::size_t count) {
  std::vector<double> a(count, 0.0);
  for (std::size_t k = 1; k < count; ++k) {
    a[k] = std::numbers::pi * static_cast<double>(k) / static_cast<double>(count - 1);
  }
  return a;
}

FemtoInstance build_instance(const FemtoConfig& config, const ChannelRealization& channels,
                             const UtilitySpec& utility) {
  config.validate();
  utility.validate();
  const FemtoMode mode = channels.mode;
  const double p = config.tx_power_w;
  std::vector<RateModel> models;
  std::vector<InterferenceSystem::Link> links;
  std::map<std::pair<LinkId, LinkId>, Matrix> mixing;
  std::vector<double> angles;
  std::size_t n = 0;
  std::size_t n_z = 1;

  switch (mode) {
    case FemtoMode::kOnOff: {
      const Matrix& g = channels.gains.at(0);
      n = static_cast<std::size_t>(g.rows());
      const SchedulingSet set({Vector::Zero(1), Vector::Constant(1, p)}, 1);
      for (std::size_t i = 0; i < n; ++i) {
        const auto ii = static_cast<Eigen::Index>(i);
        RateModel m{RateMode::kFlat, Vector::Constant(1, g(ii, ii)), noise_power_w(config),
                    config.bandwidth_hz, config.cap_bps_hz};
        models.push_back(m);
        links.push_back({set, nullptr, g(ii, ii)});
        for (std::size_t j = 0; j < n; ++j) {
          if (i != j) mixing[{i, j}] = Matrix::Constant(1, 1, g(ii, static_cast<Eigen::Index>(j)));
        }
      }
      break;
    }
    case FemtoMode::kSubband: {
      const std::size_t k_bands = channels.gains.size();
      n = static_cast<std::size_t>(channels.gains.at(0).rows());
      n_z = k_bands;
      std::vector<Vector> masks;
      for (std::size_t m = 1; m < (std::size_t{1} << k_bands); ++m) {
        Vector x = Vector::Zero(static_cast<Eigen::Index>(k_bands));
        const auto active = static_cast<double>(std::popcount(m));
        for (std::size_t k = 0; k < k_bands; ++k) {
          if (m & (std::size_t{1} << k)) {
            x[static_cast<Eigen::Index>(k)] = config.split_subband_power ? p / active : p;
          }
        }
        masks.push_back(std::move(x));
      }
      const SchedulingSet set(masks, masks.size() - 1);
      for (std::size_t i = 0; i < n; ++i) {
        const auto ii = static_cast<Eigen::Index>(i);
        Vector serving(static_cast<Eigen::Index>(k_bands));
        for (std::size_t k = 0; k < k_bands; ++k) {
          serving[static_cast<Eigen::Index>(k)] = channels.gains[k](ii, ii);
        }
        models.push_back({RateMode::kSubband, serving, noise_power_w(config, k_bands),
                          config.bandwidth_hz / static_cast<double>(k_bands),
                          config.cap_bps_hz});
        links.push_back({set, nullptr, serving.norm()});
        for (std::size_t j = 0; j < n; ++j) {
          if (i == j) continue;
          Vector d(static_cast<Eigen::Index>(k_bands));
          for (std::size_t k = 0; k < k_bands; ++k) {
            d[static_cast<Eigen::Index>(k)] = channels.gains[k](ii, static_cast<Eigen::Index>(j));
          }
          mixing[{i, j}] = d.asDiagonal().toDenseMatrix();
        }
      }
      break;
    }
    case FemtoMode::kBeamforming: {
      n = channels.channel.size();
      if (n == 0) throw ConfigError("beamforming realization has no links");
      const std::size_t antennas = channels.channel[0][0].size();
      angles = beam_angles(config.beam_angles);
      std::vector<Vector> beams;
      for (double a : angles) beams.push_back(p * beamforming_lift(steering_vector(a, antennas)));
      const SchedulingSet set(beams);
      for (std::size_t i = 0; i < n; ++i) {
        const Vector serving = beamforming_row(channels.channel[i][i]);
        models.push_back({RateMode::kBeamforming, serving, noise_power_w(config),
                          config.bandwidth_hz, config.cap_bps_hz});
        links.push_back({set, nullptr, serving.norm()});
        for (std::size_t j = 0; j < n; ++j) {
          if (i != j) mixing[{i, j}] = beamforming_row(channels.channel[i][j]).transpose();
        }
      }
      break;
    }
  }
  for (std::size_t i = 0; i < n; ++i) {
    links[i].utility = std::make_shared<RateUtility>(models[i], utility, i);
  }
  return {InterferenceSystem(n_z, std::move(links), std::move(mixing)), std::move(models), mode,
          std::move(angles)};
}

std::vector<double> realized_rates(const FemtoInstance& instance,
                                   const SchedulingProfile& profile) {
  validate_profile(instance.system, profile);
  std::vector<double> out(instance.system.num_links());
  for (std::size_t i = 0; i < out.size(); ++i) {
    const Vector z = compute_interference(instance.system, profile, i);
    out[i] = rate(instance.rate_models[i], instance.system.candidates(i)[profile.choice[i]], z);
  }
  return out;
}

nlohmann::json drop_to_json(const FemtoDrop& drop, const FemtoConfig& config, FemtoMode mode) {
  nlohmann::json j;
  j["seed"] = drop.seed;
  j["drop"] = drop.index;
  j["mode"] = femto_mode_name(mode);
  j["apartment_m"] = config.apartment_m;
  j["grid"] = config.grid;
  j["wall_loss_db"] = config.wall_loss_for(mode);
  j["noise_dbm"] = noise_power_dbm(config);
  j["apartments"] = drop.apartments;
  nlohmann::json links = nlohmann::json::array();
  for (std::size_t i = 0; i < drop.num_links(); ++i) {
    links.push_back({{"bs", {drop.bs[i].x, drop.bs[i].y}}, {"ue", {drop.ue[i].x, drop.ue[i].y}}});
  }
  j["links"] = links;
  auto matrix = [&](const Matrix& m) {
    nlohmann::json rows = nlohmann::json::array();
    for (Eigen::Index r = 0; r < m.rows(); ++r) {
      std::vector<double> row;
      for (Eigen::Index c = 0; c < m.cols(); ++c) row.push_back(m(r, c));
      rows.push_back(row);
    }
    return rows;
  };
  j["distance_m"] = matrix(drop.distance_m);
  j["walls"] = matrix(drop.walls);
  j["shadowing_db"] = matrix(drop.shadowing_db);
  Matrix gain_db(drop.distance_m.rows(), drop.distance_m.cols());
  for (Eigen::Index r = 0; r < gain_db.rows(); ++r) {
    for (Eigen::Index c = 0; c < gain_db.cols(); ++c) {
      gain_db(r, c) = 10.0 * std::log10(link_gain(config, drop, static_cast<LinkId>(r),
                                                  static_cast<LinkId>(c), mode));
    }
  }
  j["gain_db"] = matrix(gain_db);
  return j;
}

}  // namespace icbp
