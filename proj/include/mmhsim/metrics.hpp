// SPDX-License-Identifier: Apache-2.0
//
// Episode metrics and the CSV schemas emitted by the harness. Doubles are
// printed with %.17g so every row round-trips byte-identically through
// parse/emit.

#ifndef MMHSIM_METRICS_HPP
#define MMHSIM_METRICS_HPP

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <map>
#include <numeric>
#include <sstream>
#include <string>
#include <vector>

#include "mmhsim/errors.hpp"

namespace mmhsim {

struct EpisodeMetrics {
  std::vector<double> rate_bps;      // R(i) per location index
  std::vector<int> serving_bs;       // serving BS during each location's CI
  std::vector<std::uint8_t> handover_flag;
  int handover_count = 0;
  double r_traj = 0.0;               // sum of R(i)
  int skeleton_queries = 0;          // U: distance-triggered skeleton renewals
  int probe_count = 0;
  int db_rebuilds = 0;               // database-side skeleton builds
  int rlf_count = 0;
};

inline std::string fmt_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

// --------------------------------------------------------------------------
// Per-CI metrics rows
// --------------------------------------------------------------------------

constexpr const char* kMetricsHeader =
    "policy,replication,location_index,rate_bps,serving_bs,handover_flag";

struct MetricsRow {
  std::string policy;
  int replication = 0;
  int location_index = 0;
  double rate_bps = 0.0;
  int serving_bs = 0;
  int handover_flag = 0;
};

inline std::string emit_csv_row(const MetricsRow& row) {
  std::ostringstream os;
  os << row.policy << ',' << row.replication << ',' << row.location_index << ','
     << fmt_double(row.rate_bps) << ',' << row.serving_bs << ',' << row.handover_flag;
  return os.str();
}

inline std::vector<std::string> split_csv(const std::string& line, std::size_t expected) {
  std::vector<std::string> fields;
  std::string field;
  std::istringstream is(line);
  while (std::getline(is, field, ',')) fields.push_back(field);
  if (fields.size() != expected)
    throw ConfigError("CSV row has " + std::to_string(fields.size()) +
                      " fields, expected " + std::to_string(expected));
  return fields;
}

inline MetricsRow parse_csv_row(const std::string& line) {
  const auto f = split_csv(line, 6);
  MetricsRow row;
  row.policy = f[0];
  row.replication = std::stoi(f[1]);
  row.location_index = std::stoi(f[2]);
  row.rate_bps = std::stod(f[3]);
  row.serving_bs = std::stoi(f[4]);
  row.handover_flag = std::stoi(f[5]);
  return row;
}

// --------------------------------------------------------------------------
// Summary rows
// --------------------------------------------------------------------------

constexpr const char* kSummaryHeader =
    "policy,mean_Rtraj_bps,std_Rtraj_bps,mean_handovers";

struct SummaryRow {
  std::string policy;
  double mean_rtraj_bps = 0.0;
  double std_rtraj_bps = 0.0;
  double mean_handovers = 0.0;
};

inline std::string emit_csv_row(const SummaryRow& row) {
  std::ostringstream os;
  os << row.policy << ',' << fmt_double(row.mean_rtraj_bps) << ','
     << fmt_double(row.std_rtraj_bps) << ',' << fmt_double(row.mean_handovers);
  return os.str();
}

inline SummaryRow parse_summary_row(const std::string& line) {
  const auto f = split_csv(line, 4);
  return SummaryRow{f[0], std::stod(f[1]), std::stod(f[2]), std::stod(f[3])};
}

constexpr const char* kLocationHeader =
    "policy,location_index,mean_rate_bps,std_rate_bps";

constexpr const char* kHandoverHistogramHeader = "policy,handovers,episodes";

// --------------------------------------------------------------------------
// Aggregation
// --------------------------------------------------------------------------

inline SummaryRow summarize(const std::string& policy,
                            const std::vector<EpisodeMetrics>& episodes) {
  SummaryRow row;
  row.policy = policy;
  if (episodes.empty()) return row;
  double sum = 0.0, sum_sq = 0.0, handovers = 0.0;
  for (const auto& ep : episodes) {
    sum += ep.r_traj;
    sum_sq += ep.r_traj * ep.r_traj;
    handovers += ep.handover_count;
  }
  const double n = static_cast<double>(episodes.size());
  row.mean_rtraj_bps = sum / n;
  const double var = std::max(0.0, sum_sq / n - row.mean_rtraj_bps * row.mean_rtraj_bps);
  row.std_rtraj_bps = std::sqrt(var);
  row.mean_handovers = handovers / n;
  return row;
}

struct LocationStats {
  std::vector<double> mean_rate_bps;
  std::vector<double> std_rate_bps;
};

inline LocationStats per_location_stats(const std::vector<EpisodeMetrics>& episodes) {
  LocationStats stats;
  if (episodes.empty()) return stats;
  const std::size_t m = episodes.front().rate_bps.size();
  stats.mean_rate_bps.assign(m, 0.0);
  stats.std_rate_bps.assign(m, 0.0);
  for (std::size_t i = 0; i < m; ++i) {
    double sum = 0.0, sum_sq = 0.0;
    for (const auto& ep : episodes) {
      sum += ep.rate_bps[i];
      sum_sq += ep.rate_bps[i] * ep.rate_bps[i];
    }
    const double n = static_cast<double>(episodes.size());
    stats.mean_rate_bps[i] = sum / n;
    stats.std_rate_bps[i] =
        std::sqrt(std::max(0.0, sum_sq / n - stats.mean_rate_bps[i] * stats.mean_rate_bps[i]));
  }
  return stats;
}

inline std::map<int, int> handover_histogram(const std::vector<EpisodeMetrics>& episodes) {
  std::map<int, int> hist;
  for (const auto& ep : episodes) ++hist[ep.handover_count];
  return hist;
}

inline double median_handovers(const std::vector<EpisodeMetrics>& episodes) {
  std::vector<int> counts;
  counts.reserve(episodes.size());
  for (const auto& ep : episodes) counts.push_back(ep.handover_count);
  std::sort(counts.begin(), counts.end());
  if (counts.empty()) return 0.0;
  const std::size_t n = counts.size();
  return n % 2 == 1 ? counts[n / 2] : 0.5 * (counts[n / 2 - 1] + counts[n / 2]);
}

/// Mean across episodes of the per-episode std of R(i) along the trajectory.
inline double rate_fluctuation(const std::vector<EpisodeMetrics>& episodes) {
  if (episodes.empty()) return 0.0;
  double total = 0.0;
  for (const auto& ep : episodes) {
    const double n = static_cast<double>(ep.rate_bps.size());
    double sum = 0.0, sum_sq = 0.0;
    for (double r : ep.rate_bps) {
      sum += r;
      sum_sq += r * r;
    }
    const double mean = sum / n;
    total += std::sqrt(std::max(0.0, sum_sq / n - mean * mean));
  }
  return total / static_cast<double>(episodes.size());
}

}  // namespace mmhsim

#endif  // MMHSIM_METRICS_HPP
