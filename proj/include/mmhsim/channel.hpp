// SPDX-License-Identifier: Apache-2.0
//
// Narrowband cluster 3D channel: planar array responses, close-in pathloss
// with lognormal shadowing, cluster/subpath generation, SNR and rate.
//
// The channel between a BS and a UE location is
//   H = sum_p (1/sqrt(R_p)) sum_r h_{r,p} u_UE(aoa) u_BS^H(aod),
// an N_UE x N_BS complex matrix fixed for one coherence interval. Subpath
// gains embed pathloss, shadowing and small-scale fading. Cluster draws
// follow a compact NYU-style parametrization; every constant is surfaced
// in ClusterConfig so it can be recalibrated.

#ifndef MMHSIM_CHANNEL_HPP
#define MMHSIM_CHANNEL_HPP

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <complex>
#include <stdexcept>
#include <vector>

#include "mmhsim/environment.hpp"
#include "mmhsim/errors.hpp"
#include "mmhsim/rng.hpp"

namespace mmhsim {

struct ArrayConfig {
  int bs_rows = 8;
  int bs_cols = 8;
  int ue_rows = 4;
  int ue_cols = 4;

  int n_bs() const { return bs_rows * bs_cols; }
  int n_ue() const { return ue_rows * ue_cols; }
};

struct ClusterConfig {
  double mean_clusters = 1.8;          // P ~ max{Poisson(mean), 1}
  int subpaths = 10;                   // R, subpaths per cluster
  double angle_spread_rad = 3.0 * M_PI / 180.0;   // subpath std around center
  double elevation_max_rad = M_PI / 6.0;          // cluster center |el| bound
  bool geometric_los = true;  // LoS links anchor cluster 1 at the true bearing
  double los_k_factor = 6.3;  // LoS-cluster power over the scattered clusters
  double gain_offset_db = 12.0;  // element gains folded into the subpath gains
};

struct RadioConfig {
  double carrier_hz = 28e9;
  double bandwidth_hz = 500e6;          // W
  double tx_power_dbm = 30.0;
  double noise_psd_dbm_hz = -174.0;     // sigma^2
  double pathloss_exp_los = 3.0;        // n_hat LoS
  double pathloss_exp_nlos = 4.0;       // n_hat NLoS
  double shadow_std_los_db = 3.1;       // mu LoS
  double shadow_std_nlos_db = 8.7;      // mu NLoS
  double ref_distance_m = 1.0;          // d0
  ClusterConfig clusters;

  double wavelength() const { return 299792458.0 / carrier_hz; }

  /// Noise power normalized by the transmit power, linear scale:
  /// 10^((sigma^2[dBm/Hz] + 10 log10 W - Ptx[dBm]) / 10).
  double noise_power_normalized() const {
    const double noise_dbm = noise_psd_dbm_hz + 10.0 * std::log10(bandwidth_hz);
    return std::pow(10.0, (noise_dbm - tx_power_dbm) / 10.0);
  }
};

struct Subpath {
  std::complex<double> gain;  // h_{r,p}, embeds pathloss and fading
  double aoa_az = 0.0, aoa_el = 0.0;  // arrival at the UE, radians
  double aod_az = 0.0, aod_el = 0.0;  // departure at the BS, radians
  // Cached direction cosines of the planar-array phase ramp.
  double a_ue = 0.0, b_ue = 0.0, a_bs = 0.0, b_bs = 0.0;
};

inline double wrap_angle(double a) {
  a = std::fmod(a + M_PI, 2.0 * M_PI);
  if (a < 0.0) a += 2.0 * M_PI;
  return a - M_PI;
}

inline Subpath make_subpath(std::complex<double> gain, double aoa_az,
                            double aoa_el, double aod_az, double aod_el) {
  Subpath s;
  s.gain = gain;
  s.aoa_az = aoa_az;
  s.aoa_el = aoa_el;
  s.aod_az = aod_az;
  s.aod_el = aod_el;
  s.a_ue = std::sin(aoa_az) * std::cos(aoa_el);
  s.b_ue = std::sin(aoa_az) * std::sin(aoa_el);
  s.a_bs = std::sin(aod_az) * std::cos(aod_el);
  s.b_bs = std::sin(aod_az) * std::sin(aod_el);
  return s;
}

struct PathCluster {
  int cluster_index = 0;
  double center_aod_az = 0.0, center_aod_el = 0.0;
  double center_aoa_az = 0.0, center_aoa_el = 0.0;
  std::vector<Subpath> subpaths;

  /// Amplitude of the strongest subpath.
  double dominant_gain() const {
    double g = 0.0;
    for (const auto& s : subpaths) g = std::max(g, std::abs(s.gain));
    return g;
  }
};

struct ChannelMatrix {
  Eigen::MatrixXcd entries;  // N_UE x N_BS
  int bs_id = 0;
  int location_index = 0;
  int ci_index = 0;
};

/// Half-wavelength uniform planar array response; entry for grid index
/// (n_r, n_c) is exp(j pi [n_r sin(az) cos(el) + n_c sin(az) sin(el)]),
/// row-major, unit magnitude per element.
inline Eigen::VectorXcd array_response(double az, double el, int rows, int cols) {
  const double a = std::sin(az) * std::cos(el);
  const double b = std::sin(az) * std::sin(el);
  Eigen::VectorXcd u(rows * cols);
  for (int r = 0; r < rows; ++r)
    for (int c = 0; c < cols; ++c) {
      const double phase = M_PI * (r * a + c * b);
      u(r * cols + c) = std::complex<double>(std::cos(phase), std::sin(phase));
    }
  return u;
}

/// Geometric sum G_K(delta) = sum_{n=0}^{K-1} exp(j pi n delta); 2-periodic.
inline std::complex<double> steering_kernel(double delta, int k) {
  delta -= 2.0 * std::round(delta / 2.0);
  if (std::abs(delta) < 1e-12) return {static_cast<double>(k), 0.0};
  // (1 - z^K) / (1 - z) with z = exp(j pi delta).
  double s, c, sk, ck;
  sincos(M_PI * delta, &s, &c);
  sincos(M_PI * delta * k, &sk, &ck);
  const std::complex<double> num(1.0 - ck, -sk);
  const std::complex<double> den(1.0 - c, -s);
  return num / den;
}

/// Inner product u(a1,b1)^H u(a2,b2) of two same-geometry planar responses.
inline std::complex<double> steering_inner(double a1, double b1, double a2,
                                           double b2, int rows, int cols) {
  return steering_kernel(a2 - a1, rows) * steering_kernel(b2 - b1, cols);
}

/// Deterministic part of the close-in pathloss model (mu = 0), dB.
inline double pathloss_db_mean(double d, bool los, const RadioConfig& cfg) {
  if (d < cfg.ref_distance_m)
    throw std::domain_error("pathloss_db: d below reference distance");
  const double n_hat = los ? cfg.pathloss_exp_los : cfg.pathloss_exp_nlos;
  const double fs = 20.0 * std::log10(4.0 * M_PI * cfg.ref_distance_m / cfg.wavelength());
  return fs + 10.0 * n_hat * std::log10(d / cfg.ref_distance_m);
}

/// Pathloss with shadowing: PL(d) + X_mu, X_mu ~ Normal(0, mu^2) dB.
inline double pathloss_db(double d, bool los, const RadioConfig& cfg,
                          RngStream& rng) {
  const double mu = los ? cfg.shadow_std_los_db : cfg.shadow_std_nlos_db;
  return pathloss_db_mean(d, los, cfg) + rng.normal(0.0, mu);
}

/// Explicit double-sum reconstruction of H from a cluster list.
inline Eigen::MatrixXcd channel_from_clusters(const std::vector<PathCluster>& clusters,
                                              const ArrayConfig& arrays) {
  Eigen::MatrixXcd h = Eigen::MatrixXcd::Zero(arrays.n_ue(), arrays.n_bs());
  for (const auto& cluster : clusters) {
    if (cluster.subpaths.empty()) continue;
    const double prefactor = 1.0 / std::sqrt(static_cast<double>(cluster.subpaths.size()));
    for (const auto& s : cluster.subpaths) {
      const Eigen::VectorXcd u_ue =
          array_response(s.aoa_az, s.aoa_el, arrays.ue_rows, arrays.ue_cols);
      const Eigen::VectorXcd u_bs =
          array_response(s.aod_az, s.aod_el, arrays.bs_rows, arrays.bs_cols);
      h.noalias() += (prefactor * s.gain) * (u_ue * u_bs.adjoint());
    }
  }
  return h;
}

/// Draws the cluster set of one (BS, location) link for one episode.
/// Cluster count P ~ max{Poisson(mean), 1}; per-cluster power fractions from
/// normalized exponential draws; subpath angles spread around the cluster
/// center; subpath gains sqrt(PL_lin * fraction) * CN(0,1).
inline std::vector<PathCluster> generate_clusters(const BaseStation& bs,
                                                  const Vec2& location,
                                                  double ue_height,
                                                  const LinkState& link,
                                                  const RadioConfig& cfg,
                                                  RngStream& rng) {
  const ClusterConfig& cc = cfg.clusters;
  const double pl_db = pathloss_db(link.distance_3d, link.los, cfg, rng);
  const double pl_lin = std::pow(10.0, (cc.gain_offset_db - pl_db) / 10.0);

  const int p_count = std::max(1, rng.poisson(cc.mean_clusters));
  const bool los_anchor = link.los && cc.geometric_los;

  // Power split across clusters: exponential draws normalized to one. A LoS
  // link concentrates K/(K+1) of the power in the geometric cluster.
  std::vector<double> fractions(p_count);
  double total = 0.0;
  for (auto& f : fractions) {
    f = rng.exponential();
    total += f;
  }
  for (auto& f : fractions) f /= total;
  if (los_anchor && p_count > 1) {
    const double k = cc.los_k_factor;
    const double rest = 1.0 - fractions[0];
    fractions[0] = k / (k + 1.0);
    for (int p = 1; p < p_count; ++p)
      fractions[p] *= (1.0 / (k + 1.0)) / rest;
  }

  std::vector<PathCluster> clusters;
  clusters.reserve(p_count);
  for (int p = 0; p < p_count; ++p) {
    PathCluster cluster;
    cluster.cluster_index = p;
    if (p == 0 && los_anchor) {
      const double dx = location.x - bs.position.x;
      const double dy = location.y - bs.position.y;
      const double horiz = std::hypot(dx, dy);
      cluster.center_aod_az = std::atan2(dy, dx);
      cluster.center_aod_el = std::atan2(ue_height - bs.height, horiz);
      cluster.center_aoa_az = std::atan2(-dy, -dx);
      cluster.center_aoa_el = std::atan2(bs.height - ue_height, horiz);
    } else {
      cluster.center_aod_az = rng.uniform(-M_PI, M_PI);
      cluster.center_aod_el = rng.uniform(-cc.elevation_max_rad, cc.elevation_max_rad);
      cluster.center_aoa_az = rng.uniform(-M_PI, M_PI);
      cluster.center_aoa_el = rng.uniform(-cc.elevation_max_rad, cc.elevation_max_rad);
    }

    const double amp = std::sqrt(pl_lin * fractions[p]);
    cluster.subpaths.reserve(cc.subpaths);
    for (int r = 0; r < cc.subpaths; ++r) {
      const double aoa_az = wrap_angle(cluster.center_aoa_az + rng.normal(0.0, cc.angle_spread_rad));
      const double aoa_el = std::clamp(cluster.center_aoa_el + rng.normal(0.0, cc.angle_spread_rad),
                                       -M_PI / 2.0, M_PI / 2.0);
      const double aod_az = wrap_angle(cluster.center_aod_az + rng.normal(0.0, cc.angle_spread_rad));
      const double aod_el = std::clamp(cluster.center_aod_el + rng.normal(0.0, cc.angle_spread_rad),
                                       -M_PI / 2.0, M_PI / 2.0);
      cluster.subpaths.push_back(
          make_subpath(amp * rng.complex_normal(), aoa_az, aoa_el, aod_az, aod_el));
    }
    clusters.push_back(std::move(cluster));
  }
  return clusters;
}

struct GeneratedChannel {
  ChannelMatrix matrix;
  std::vector<PathCluster> clusters;
};

/// Generates both the channel matrix and its ground-truth cluster list.
inline GeneratedChannel generate_channel(const BaseStation& bs, const Vec2& location,
                                         double ue_height, const LinkState& link,
                                         const ArrayConfig& arrays,
                                         const RadioConfig& cfg, RngStream& rng,
                                         int ci_index = 0) {
  GeneratedChannel out;
  out.clusters = generate_clusters(bs, location, ue_height, link, cfg, rng);
  out.matrix.entries = channel_from_clusters(out.clusters, arrays);
  out.matrix.bs_id = bs.id;
  out.matrix.location_index = link.location_index;
  out.matrix.ci_index = ci_index;
  return out;
}

/// w^H H f evaluated from the cluster list without forming H, using the
/// closed-form steering inner products. (w, f) must be steering-type vectors
/// with unit norm and known direction cosines.
inline std::complex<double> pair_gain_from_clusters(
    const std::vector<PathCluster>& clusters, double w_a, double w_b,
    double f_a, double f_b, const ArrayConfig& arrays) {
  const double scale =
      1.0 / std::sqrt(static_cast<double>(arrays.n_ue()) * arrays.n_bs());
  std::complex<double> acc{0.0, 0.0};
  for (const auto& cluster : clusters) {
    if (cluster.subpaths.empty()) continue;
    const double prefactor = 1.0 / std::sqrt(static_cast<double>(cluster.subpaths.size()));
    for (const auto& s : cluster.subpaths) {
      const std::complex<double> ue_term =
          steering_inner(w_a, w_b, s.a_ue, s.b_ue, arrays.ue_rows, arrays.ue_cols);
      const std::complex<double> bs_term =
          steering_inner(s.a_bs, s.b_bs, f_a, f_b, arrays.bs_rows, arrays.bs_cols);
      acc += prefactor * s.gain * ue_term * bs_term;
    }
  }
  return scale * acc;
}

/// SNR of Eq.-style quadratic form |w^H H f|^2 / (sigma^2 W), with the noise
/// normalized by the transmit power. Interference is not modeled.
inline double snr_linear(const ChannelMatrix& h, const Eigen::VectorXcd& f,
                         const Eigen::VectorXcd& w, const RadioConfig& cfg) {
  if (w.size() != h.entries.rows() || f.size() != h.entries.cols())
    throw ShapeError("snr_linear: dimension mismatch between w, H, f");
  const std::complex<double> g = w.adjoint() * h.entries * f;
  return std::norm(g) / cfg.noise_power_normalized();
}

inline double snr_linear_from_gain(double gain_squared, const RadioConfig& cfg) {
  return gain_squared / cfg.noise_power_normalized();
}

inline double snr_db(double snr_lin) { return 10.0 * std::log10(snr_lin); }

/// Achievable rate W log2(1 + SNR), bits/second.
inline double rate_bps(double snr_lin, double bandwidth_hz) {
  if (snr_lin < 0.0) throw std::domain_error("rate_bps: negative SNR");
  return bandwidth_hz * std::log2(1.0 + snr_lin);
}

}  // namespace mmhsim

#endif  // MMHSIM_CHANNEL_HPP
