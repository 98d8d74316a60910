// SPDX-License-Identifier: Apache-2.0
//
// Scenario configuration: every knob of a simulation run, loadable from a
// JSON scenario file. Units are meters, Hz, dB/dBm and radians throughout.

#ifndef MMHSIM_CONFIG_HPP
#define MMHSIM_CONFIG_HPP

#include <cstdint>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "mmhsim/channel.hpp"
#include "mmhsim/environment.hpp"
#include "mmhsim/errors.hpp"
#include "mmhsim/handover.hpp"
#include "mmhsim/learning.hpp"

namespace mmhsim {

enum class PolicyKind { ours, ours_ed, multi_connectivity, smart_ucb };

inline std::string to_string(PolicyKind kind) {
  switch (kind) {
    case PolicyKind::ours: return "ours";
    case PolicyKind::ours_ed: return "ours-ed";
    case PolicyKind::multi_connectivity: return "multi-connectivity";
    case PolicyKind::smart_ucb: return "smart-ucb";
  }
  throw ConfigError("to_string: unknown policy kind");
}

inline PolicyKind policy_from_string(const std::string& key) {
  if (key == "ours") return PolicyKind::ours;
  if (key == "ours-ed") return PolicyKind::ours_ed;
  if (key == "multi-connectivity") return PolicyKind::multi_connectivity;
  if (key == "smart-ucb") return PolicyKind::smart_ucb;
  throw ConfigError("unrecognized policy key: " + key);
}

struct ZoneSpec {
  Rect extent{0.0, 0.0, 100.0, 100.0};
  double density = 5e-4;  // BS per m^2
  double bs_height_m = 6.0;
};

struct TrajectorySpec {
  std::vector<Vec2> waypoints{{0.0, 50.0}, {100.0, 50.0}};
  double spacing_m = 2.0;
  Mobility mobility = Mobility::pedestrian;
  double speed_kmh = 5.0;
};

struct SkeletonSettings {
  double t_d = 1.0;              // skeleton distance threshold
  double ed_distance_m = 10.0;   // refresh period of the ED baseline
  int u_max = 10;                // query budget per episode
  double delta = 0.2;            // allowed Pr{U > U_max}
  int t_aging = 50;              // database aging threshold, CIs
  double grid_m = 5.0;           // database grid cell size
  int max_paths = 4;             // skeleton size cap
  double gain_weight_per_db = 0.1;
};

struct SimConfig {
  ZoneSpec zone;
  TrajectorySpec trajectory;
  RadioConfig radio;
  ArrayConfig arrays;
  int codebook_oversampling = 2;
  HandoverConfig handover;
  LearningConfig learning{0.1, 0.99, 0.01, 200000, 400.0};
  SkeletonSettings skeleton;
  PolicyKind policy = PolicyKind::ours;
  int replications = 500;
  std::uint64_t seed = 1;
  int cis_per_location = 1;
  double ue_height_m = 1.5;
  double blockage_correlation_m = 4.0;
  double ucb_c = 0.05;
  int tune_episodes = 200;         // training episodes per T_D candidate
  std::string channel_trace;       // optional trace file, empty = cluster model

  void validate() const {
    if (zone.density <= 0.0) throw ConfigError("zone.density must be positive");
    if (zone.extent.width <= 0.0 || zone.extent.height <= 0.0)
      throw ConfigError("zone.extent must have positive area");
    if (trajectory.spacing_m <= 0.0) throw ConfigError("trajectory.spacing must be positive");
    if (trajectory.waypoints.size() < 2) throw ConfigError("trajectory needs two waypoints");
    if (radio.bandwidth_hz <= 0.0) throw ConfigError("radio.bandwidth must be positive");
    if (radio.ref_distance_m <= 0.0) throw ConfigError("radio.ref_distance must be positive");
    if (arrays.bs_rows < 1 || arrays.bs_cols < 1 || arrays.ue_rows < 1 || arrays.ue_cols < 1)
      throw ConfigError("array dimensions must be at least 1");
    if (codebook_oversampling < 1) throw ConfigError("codebook_oversampling must be >= 1");
    handover.validate();
    if (learning.alpha <= 0.0 || learning.alpha > 1.0)
      throw ConfigError("learning.alpha must be in (0, 1]");
    if (learning.gamma < 0.0 || learning.gamma > 1.0)
      throw ConfigError("learning.gamma must be in [0, 1]");
    if (learning.epsilon < 0.0 || learning.epsilon > 1.0)
      throw ConfigError("learning.epsilon must be in [0, 1]");
    if (skeleton.delta < 0.0 || skeleton.delta > 1.0)
      throw ConfigError("skeleton.delta must be in [0, 1]");
    if (skeleton.u_max < 0) throw ConfigError("skeleton.u_max must be non-negative");
    if (skeleton.t_d < 0.0) throw ConfigError("skeleton.t_d must be non-negative");
    if (skeleton.ed_distance_m <= 0.0) throw ConfigError("skeleton.ed_distance must be positive");
    if (skeleton.t_aging < 0) throw ConfigError("skeleton.t_aging must be non-negative");
    if (skeleton.grid_m <= 0.0) throw ConfigError("skeleton.grid_m must be positive");
    if (skeleton.max_paths < 1) throw ConfigError("skeleton.max_paths must be >= 1");
    if (replications < 1) throw ConfigError("replications must be >= 1");
    if (cis_per_location < 1) throw ConfigError("cis_per_location must be >= 1");
    if (blockage_correlation_m < 0.0)
      throw ConfigError("blockage_correlation_m must be non-negative");
  }
};

// --------------------------------------------------------------------------
// JSON scenario (de)serialization
// --------------------------------------------------------------------------

namespace detail {

template <typename T>
void read_if(const nlohmann::json& j, const char* key, T& out) {
  if (j.contains(key)) out = j.at(key).get<T>();
}

}  // namespace detail

inline SimConfig parse_scenario(const nlohmann::json& j) {
  SimConfig cfg;
  if (j.contains("zone")) {
    const auto& z = j.at("zone");
    if (z.contains("extent")) {
      const auto e = z.at("extent").get<std::vector<double>>();
      if (e.size() != 2) throw ConfigError("zone.extent must be [width, height]");
      cfg.zone.extent = {0.0, 0.0, e[0], e[1]};
    }
    detail::read_if(z, "density", cfg.zone.density);
    detail::read_if(z, "bs_height_m", cfg.zone.bs_height_m);
  }
  if (j.contains("trajectory")) {
    const auto& t = j.at("trajectory");
    if (t.contains("waypoints")) {
      cfg.trajectory.waypoints.clear();
      for (const auto& w : t.at("waypoints")) {
        const auto p = w.get<std::vector<double>>();
        if (p.size() != 2) throw ConfigError("waypoints must be [x, y] pairs");
        cfg.trajectory.waypoints.push_back({p[0], p[1]});
      }
    }
    detail::read_if(t, "spacing_m", cfg.trajectory.spacing_m);
    detail::read_if(t, "speed_kmh", cfg.trajectory.speed_kmh);
    if (t.contains("mobility")) {
      const std::string m = t.at("mobility").get<std::string>();
      if (m == "pedestrian") cfg.trajectory.mobility = Mobility::pedestrian;
      else if (m == "vehicular") cfg.trajectory.mobility = Mobility::vehicular;
      else throw ConfigError("unknown mobility class: " + m);
    }
  }
  if (j.contains("radio")) {
    const auto& r = j.at("radio");
    detail::read_if(r, "carrier_hz", cfg.radio.carrier_hz);
    detail::read_if(r, "bandwidth_hz", cfg.radio.bandwidth_hz);
    detail::read_if(r, "tx_power_dbm", cfg.radio.tx_power_dbm);
    detail::read_if(r, "noise_psd_dbm_hz", cfg.radio.noise_psd_dbm_hz);
    detail::read_if(r, "pathloss_exp_los", cfg.radio.pathloss_exp_los);
    detail::read_if(r, "pathloss_exp_nlos", cfg.radio.pathloss_exp_nlos);
    detail::read_if(r, "shadow_std_los_db", cfg.radio.shadow_std_los_db);
    detail::read_if(r, "shadow_std_nlos_db", cfg.radio.shadow_std_nlos_db);
    detail::read_if(r, "ref_distance_m", cfg.radio.ref_distance_m);
  }
  if (j.contains("clusters")) {
    const auto& c = j.at("clusters");
    detail::read_if(c, "mean_clusters", cfg.radio.clusters.mean_clusters);
    detail::read_if(c, "subpaths", cfg.radio.clusters.subpaths);
    detail::read_if(c, "angle_spread_rad", cfg.radio.clusters.angle_spread_rad);
    detail::read_if(c, "elevation_max_rad", cfg.radio.clusters.elevation_max_rad);
    detail::read_if(c, "geometric_los", cfg.radio.clusters.geometric_los);
    detail::read_if(c, "los_k_factor", cfg.radio.clusters.los_k_factor);
    detail::read_if(c, "gain_offset_db", cfg.radio.clusters.gain_offset_db);
  }
  if (j.contains("arrays")) {
    const auto& a = j.at("arrays");
    detail::read_if(a, "bs_rows", cfg.arrays.bs_rows);
    detail::read_if(a, "bs_cols", cfg.arrays.bs_cols);
    detail::read_if(a, "ue_rows", cfg.arrays.ue_rows);
    detail::read_if(a, "ue_cols", cfg.arrays.ue_cols);
    detail::read_if(a, "codebook_oversampling", cfg.codebook_oversampling);
  }
  if (j.contains("handover")) {
    const auto& h = j.at("handover");
    detail::read_if(h, "levels", cfg.handover.levels);
    detail::read_if(h, "boundaries_db", cfg.handover.boundaries_db);
    detail::read_if(h, "threshold_level", cfg.handover.threshold_level);
    detail::read_if(h, "trigger_window", cfg.handover.trigger_window);
  }
  if (j.contains("learning")) {
    const auto& l = j.at("learning");
    detail::read_if(l, "alpha", cfg.learning.alpha);
    detail::read_if(l, "gamma", cfg.learning.gamma);
    detail::read_if(l, "epsilon", cfg.learning.epsilon);
    detail::read_if(l, "episodes", cfg.learning.episodes);
    detail::read_if(l, "q_init", cfg.learning.q_init);
  }
  if (j.contains("skeleton")) {
    const auto& s = j.at("skeleton");
    detail::read_if(s, "t_d", cfg.skeleton.t_d);
    detail::read_if(s, "ed_distance_m", cfg.skeleton.ed_distance_m);
    detail::read_if(s, "u_max", cfg.skeleton.u_max);
    detail::read_if(s, "delta", cfg.skeleton.delta);
    detail::read_if(s, "t_aging", cfg.skeleton.t_aging);
    detail::read_if(s, "grid_m", cfg.skeleton.grid_m);
    detail::read_if(s, "max_paths", cfg.skeleton.max_paths);
    detail::read_if(s, "gain_weight_per_db", cfg.skeleton.gain_weight_per_db);
  }
  if (j.contains("policy")) cfg.policy = policy_from_string(j.at("policy").get<std::string>());
  detail::read_if(j, "replications", cfg.replications);
  detail::read_if(j, "seed", cfg.seed);
  detail::read_if(j, "cis_per_location", cfg.cis_per_location);
  detail::read_if(j, "ue_height_m", cfg.ue_height_m);
  detail::read_if(j, "blockage_correlation_m", cfg.blockage_correlation_m);
  detail::read_if(j, "ucb_c", cfg.ucb_c);
  detail::read_if(j, "tune_episodes", cfg.tune_episodes);
  detail::read_if(j, "channel_trace", cfg.channel_trace);
  cfg.validate();
  return cfg;
}

inline nlohmann::json scenario_to_json(const SimConfig& cfg) {
  nlohmann::json waypoints = nlohmann::json::array();
  for (const auto& w : cfg.trajectory.waypoints) waypoints.push_back({w.x, w.y});
  return {
      {"zone",
       {{"extent", {cfg.zone.extent.width, cfg.zone.extent.height}},
        {"density", cfg.zone.density},
        {"bs_height_m", cfg.zone.bs_height_m}}},
      {"trajectory",
       {{"waypoints", waypoints},
        {"spacing_m", cfg.trajectory.spacing_m},
        {"mobility", cfg.trajectory.mobility == Mobility::pedestrian ? "pedestrian" : "vehicular"},
        {"speed_kmh", cfg.trajectory.speed_kmh}}},
      {"radio",
       {{"carrier_hz", cfg.radio.carrier_hz},
        {"bandwidth_hz", cfg.radio.bandwidth_hz},
        {"tx_power_dbm", cfg.radio.tx_power_dbm},
        {"noise_psd_dbm_hz", cfg.radio.noise_psd_dbm_hz},
        {"pathloss_exp_los", cfg.radio.pathloss_exp_los},
        {"pathloss_exp_nlos", cfg.radio.pathloss_exp_nlos},
        {"shadow_std_los_db", cfg.radio.shadow_std_los_db},
        {"shadow_std_nlos_db", cfg.radio.shadow_std_nlos_db},
        {"ref_distance_m", cfg.radio.ref_distance_m}}},
      {"clusters",
       {{"mean_clusters", cfg.radio.clusters.mean_clusters},
        {"subpaths", cfg.radio.clusters.subpaths},
        {"angle_spread_rad", cfg.radio.clusters.angle_spread_rad},
        {"elevation_max_rad", cfg.radio.clusters.elevation_max_rad},
        {"geometric_los", cfg.radio.clusters.geometric_los},
        {"los_k_factor", cfg.radio.clusters.los_k_factor},
        {"gain_offset_db", cfg.radio.clusters.gain_offset_db}}},
      {"arrays",
       {{"bs_rows", cfg.arrays.bs_rows},
        {"bs_cols", cfg.arrays.bs_cols},
        {"ue_rows", cfg.arrays.ue_rows},
        {"ue_cols", cfg.arrays.ue_cols},
        {"codebook_oversampling", cfg.codebook_oversampling}}},
      {"handover",
       {{"levels", cfg.handover.levels},
        {"boundaries_db", cfg.handover.boundaries_db},
        {"threshold_level", cfg.handover.threshold_level},
        {"trigger_window", cfg.handover.trigger_window}}},
      {"learning",
       {{"alpha", cfg.learning.alpha},
        {"gamma", cfg.learning.gamma},
        {"epsilon", cfg.learning.epsilon},
        {"episodes", cfg.learning.episodes},
        {"q_init", cfg.learning.q_init}}},
      {"skeleton",
       {{"t_d", cfg.skeleton.t_d},
        {"ed_distance_m", cfg.skeleton.ed_distance_m},
        {"u_max", cfg.skeleton.u_max},
        {"delta", cfg.skeleton.delta},
        {"t_aging", cfg.skeleton.t_aging},
        {"grid_m", cfg.skeleton.grid_m},
        {"max_paths", cfg.skeleton.max_paths},
        {"gain_weight_per_db", cfg.skeleton.gain_weight_per_db}}},
      {"policy", to_string(cfg.policy)},
      {"replications", cfg.replications},
      {"seed", cfg.seed},
      {"cis_per_location", cfg.cis_per_location},
      {"ue_height_m", cfg.ue_height_m},
      {"blockage_correlation_m", cfg.blockage_correlation_m},
      {"ucb_c", cfg.ucb_c},
      {"tune_episodes", cfg.tune_episodes},
      {"channel_trace", cfg.channel_trace}};
}

inline SimConfig load_scenario(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open scenario file: " + path);
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError("scenario parse error in " + path + ": " + e.what());
  }
  return parse_scenario(j);
}

}  // namespace mmhsim

#endif  // MMHSIM_CONFIG_HPP
