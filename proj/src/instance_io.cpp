#include "icbp/instance_io.hpp"

#include <fstream>

namespace icbp {
namespace {

RateMode parse_rate_mode(const std::string& s) {
  if (s == "flat") return RateMode::kFlat;
  if (s == "subband") return RateMode::kSubband;
  if (s == "beamforming") return RateMode::kBeamforming;
  throw ConfigError("unknown rate mode '" + s + "'");
}

std::string rate_mode_name(RateMode m) {
  switch (m) {
    case RateMode::kFlat: return "flat";
    case RateMode::kSubband: return "subband";
    case RateMode::kBeamforming: return "beamforming";
  }
  return "unknown";
}

Vector to_vector(const nlohmann::json& a) {
  const auto v = a.get<std::vector<double>>();
  return Eigen::Map<const Vector>(v.data(), static_cast<Eigen::Index>(v.size()));
}

std::vector<double> from_vector(const Vector& v) { return {v.data(), v.data() + v.size()}; }

}  // namespace

RateInstance instance_from_json(const nlohmann::json& doc) {
  try {
    const auto n = doc.at("n").get<std::size_t>();
    const auto n_z = doc.at("n_z").get<std::size_t>();
    const auto& cands = doc.at("candidates");
    const auto& models = doc.at("rate_models");
    if (cands.size() != n || models.size() != n) {
      throw ConfigError("candidates and rate_models must have one entry per link");
    }
    std::vector<std::size_t> n_x;
    if (doc.contains("n_x")) n_x = doc.at("n_x").get<std::vector<std::size_t>>();
    std::vector<std::size_t> max_idx;
    if (doc.contains("max_power_index")) {
      max_idx = doc.at("max_power_index").get<std::vector<std::size_t>>();
    }

    UtilitySpec spec;
    if (doc.contains("utility")) {
      const auto& u = doc.at("utility");
      std::string kind = u.at("kind").get<std::string>();
      if (kind == "beta-fair") kind = "beta:" + std::to_string(u.value("beta", 1.0));
      spec = parse_utility_spec(kind);
      if (u.contains("beta")) spec.beta = u.at("beta").get<double>();
      if (u.contains("weights")) spec.weights = u.at("weights").get<std::vector<double>>();
      spec.validate();
    }

    std::vector<RateModel> rate_models;
    std::vector<InterferenceSystem::Link> links;
    for (std::size_t i = 0; i < n; ++i) {
      std::vector<Vector> c;
      for (const auto& x : cands[i]) c.push_back(to_vector(x));
      if (!n_x.empty() && !c.empty() && static_cast<std::size_t>(c[0].size()) != n_x.at(i)) {
        throw ConfigError("candidate dimension of link " + std::to_string(i) +
                          " disagrees with n_x");
      }
      std::optional<std::size_t> mp;
      if (!max_idx.empty()) mp = max_idx.at(i);
      const auto& m = models[i];
      RateModel rm;
      rm.mode = parse_rate_mode(m.value("mode", std::string("flat")));
      rm.serving = to_vector(m.at("serving"));
      rm.noise_w = m.value("noise_w", 1.0);
      rm.bandwidth_hz = m.value("bandwidth_hz", 1.0);
      if (m.contains("cap_bps_hz") && !m.at("cap_bps_hz").is_null()) {
        rm.cap_bps_hz = m.at("cap_bps_hz").get<double>();
      }
      rm.validate();
      rate_models.push_back(rm);
      links.push_back({SchedulingSet(std::move(c), mp),
                       std::make_shared<RateUtility>(rm, spec, i), rm.serving.norm()});
    }

    std::map<std::pair<LinkId, LinkId>, Matrix> mixing;
    if (doc.contains("mixing")) {
      for (const auto& e : doc.at("mixing")) {
        const auto i = e.at("i").get<std::size_t>();
        const auto j = e.at("j").get<std::size_t>();
        const auto rows = e.at("rows").get<Eigen::Index>();
        const auto cols = e.at("cols").get<Eigen::Index>();
        const auto data = e.at("data").get<std::vector<double>>();
        if (static_cast<Eigen::Index>(data.size()) != rows * cols) {
          throw ConfigError("mixing entry data size does not match rows x cols");
        }
        Matrix a(rows, cols);
        for (Eigen::Index r = 0; r < rows; ++r) {
          for (Eigen::Index c = 0; c < cols; ++c) a(r, c) = data[r * cols + c];
        }
        if (!mixing.emplace(std::make_pair(i, j), std::move(a)).second) {
          throw ConfigError("duplicate mixing entry");
        }
      }
    }
    return {InterferenceSystem(n_z, std::move(links), std::move(mixing)), std::move(rate_models),
            spec};
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("malformed instance: ") + e.what());
  }
}

nlohmann::json instance_to_json(const RateInstance& instance) {
  const InterferenceSystem& s = instance.system;
  nlohmann::json doc;
  doc["n"] = s.num_links();
  doc["n_z"] = s.n_z();
  std::vector<std::size_t> n_x;
  nlohmann::json cands = nlohmann::json::array();
  std::vector<std::size_t> max_idx;
  bool all_max = true;
  for (std::size_t j = 0; j < s.num_links(); ++j) {
    n_x.push_back(s.n_x(j));
    nlohmann::json c = nlohmann::json::array();
    for (const auto& x : s.candidates(j).candidates()) c.push_back(from_vector(x));
    cands.push_back(c);
    const auto mp = s.candidates(j).max_power_index();
    all_max = all_max && mp.has_value();
    max_idx.push_back(mp.value_or(0));
  }
  doc["n_x"] = n_x;
  doc["candidates"] = cands;
  if (all_max) doc["max_power_index"] = max_idx;
  nlohmann::json mix = nlohmann::json::array();
  for (const auto& [key, a] : s.mixing_entries()) {
    std::vector<double> data;
    for (Eigen::Index r = 0; r < a.rows(); ++r) {
      for (Eigen::Index c = 0; c < a.cols(); ++c) data.push_back(a(r, c));
    }
    mix.push_back({{"i", key.first}, {"j", key.second}, {"rows", a.rows()},
                   {"cols", a.cols()}, {"data", data}});
  }
  doc["mixing"] = mix;
  doc["utility"] = {{"kind", utility_kind_name(instance.utility.kind)},
                    {"beta", instance.utility.beta},
                    {"weights", instance.utility.weights}};
  nlohmann::json models = nlohmann::json::array();
  for (const auto& m : instance.rate_models) {
    nlohmann::json jm = {{"mode", rate_mode_name(m.mode)},
                         {"serving", from_vector(m.serving)},
                         {"noise_w", m.noise_w},
                         {"bandwidth_hz", m.bandwidth_hz}};
    jm["cap_bps_hz"] = m.cap_bps_hz ? nlohmann::json(*m.cap_bps_hz) : nlohmann::json(nullptr);
    models.push_back(jm);
  }
  doc["rate_models"] = models;
  return doc;
}

RateInstance load_instance(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open instance file '" + path + "'");
  nlohmann::json doc;
  try {
    in >> doc;
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("cannot parse instance file: ") + e.what());
  }
  return instance_from_json(doc);
}

void save_instance(const RateInstance& instance, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw ConfigError("cannot write '" + path + "'");
  out << instance_to_json(instance).dump(2) << '\n';
}

}  // namespace icbp
