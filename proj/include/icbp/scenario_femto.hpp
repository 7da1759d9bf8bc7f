#pragma once

#include <complex>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "icbp/core_model.hpp"
#include "icbp/utility_models.hpp"

namespace icbp {

enum class FemtoMode { kOnOff, kSubband, kBeamforming };

FemtoMode parse_femto_mode(const std::string& text);
std::string femto_mode_name(FemtoMode mode);

struct FemtoConfig {
  std::size_t grid = 3;  // apartments per side
  double apartment_m = 10.0;
  std::size_t active_links = 5;
  // Apartment indices (row-major) to activate; seeded choice when empty.
  std::vector<std::size_t> fixed_apartments;
  double tx_power_w = 1e-3;
  double bandwidth_hz = 5e6;
  double noise_density_dbm_hz = -174.0;
  double noise_figure_db = 4.0;
  double shadowing_std_db = 10.0;
  // Defaults to 10 dB for on-off and subband, 0 dB for beamforming.
  std::optional<double> wall_loss_db;
  std::size_t subbands = 4;
  // Split the power budget across active subbands (else full power on each).
  bool split_subband_power = true;
  std::size_t beam_angles = 10;
  std::size_t antennas = 2;
  // Unit-mean exponential power fading; off means every fade is 1.
  bool rayleigh_fading = true;
  std::optional<double> cap_bps_hz;

  void validate() const;
  double wall_loss_for(FemtoMode mode) const;
  std::size_t apartments() const { return grid * grid; }
};

struct Point {
  double x = 0.0;
  double y = 0.0;
};

// Large-scale state of one drop.  Pair matrices are indexed (rx i, tx j).
struct FemtoDrop {
  std::uint64_t seed = 0;
  std::size_t index = 0;
  std::vector<std::size_t> apartments;  // apartment of link i
  std::vector<Point> bs;
  std::vector<Point> ue;
  Matrix distance_m;
  Matrix walls;
  Matrix shadowing_db;

  std::size_t num_links() const { return apartments.size(); }
};

double path_loss_db(double r_m);
double dbm_to_watts(double dbm);
double watts_to_dbm(double w);
// Thermal noise over bandwidth / subbands, in dBm and watts.
double noise_power_dbm(const FemtoConfig& config, std::size_t subbands = 1);
double noise_power_w(const FemtoConfig& config, std::size_t subbands = 1);

// Apartment boundaries between the apartments holding a and b.
std::size_t wall_count(const Point& a, const Point& b, double apartment_m, std::size_t grid);

FemtoDrop generate_drop(const FemtoConfig& config, std::uint64_t seed, std::size_t drop_index);

// Linear power gain BS_j -> UE_i without small-scale fading.
double link_gain(const FemtoConfig& config, const FemtoDrop& drop, LinkId i, LinkId j,
                 FemtoMode mode);

// Small-scale realization for one slot (dynamic on-off) or the whole drop.
struct ChannelRealization {
  FemtoMode mode = FemtoMode::kOnOff;
  // kOnOff: one (rx, tx) matrix; kSubband: one per subband.
  std::vector<Matrix> gains;
  // kBeamforming: channel[i][j] is the antenna response BS_j -> UE_i.
  std::vector<std::vector<std::vector<std::complex<double>>>> channel;
};

ChannelRealization draw_channels(const FemtoConfig& config, const FemtoDrop& drop,
                                 FemtoMode mode, std::size_t slot = 0);

// FNV-1a over the bit patterns of every gain; identical realizations hash
// identically.
std::uint64_t realization_hash(const ChannelRealization& channels);

// Uniform linear array response exp(j pi k cos(theta)) / sqrt(N).
std::vector<std::complex<double>> steering_vector(double theta, std::size_t antennas);
std::vector<double> beam_angles(std::size_t count);

struct FemtoInstance {
  InterferenceSystem system;
  std::vector<RateModel> rate_models;
  FemtoMode mode;
  std::vector<double> angles;  // beamforming only
};

// Builds the scheduling problem.  The utility spec applies to every link
// (weighted-rate specs carry their per-link weights).
FemtoInstance build_instance(const FemtoConfig& config, const ChannelRealization& channels,
                             const UtilitySpec& utility);

// Shannon rate of every link under a profile, using the true interference.
std::vector<double> realized_rates(const FemtoInstance& instance,
                                   const SchedulingProfile& profile);

nlohmann::json drop_to_json(const FemtoDrop& drop, const FemtoConfig& config, FemtoMode mode);

}  // namespace icbp
