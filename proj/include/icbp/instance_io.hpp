#pragma once

#include <string>
#include <vector>

#include <json.hpp>

#include "icbp/core_model.hpp"
#include "icbp/utility_models.hpp"

namespace icbp {

// A rate-based scheduling problem as read from or written to JSON:
//
//   {"n": 2, "n_z": 1, "n_x": [1, 1],
//    "candidates": [[[0], [1]], [[0], [1]]],
//    "max_power_index": [1, 1],                      (optional)
//    "mixing": [{"i": 0, "j": 1, "rows": 1, "cols": 1, "data": [0.5]}],
//    "utility": {"kind": "proportional-fair", "beta": 1, "weights": []},
//    "rate_models": [{"mode": "flat", "serving": [1], "noise_w": 1,
//                     "bandwidth_hz": 1, "cap_bps_hz": null}, ...]}
//
// Matrix data is row-major.  Serving gains for edge classification are the
// norms of the serving vectors.
struct RateInstance {
  InterferenceSystem system;
  std::vector<RateModel> rate_models;
  UtilitySpec utility;
};

RateInstance instance_from_json(const nlohmann::json& doc);
nlohmann::json instance_to_json(const RateInstance& instance);

RateInstance load_instance(const std::string& path);
void save_instance(const RateInstance& instance, const std::string& path);

}  // namespace icbp
