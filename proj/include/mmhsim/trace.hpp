// SPDX-License-Identifier: Apache-2.0
//
// Externally produced channel traces. A trace file replaces the cluster
// generator: each row describes one propagation path of a (BS, location)
// link by its departure/arrival angles, gain in dB and LoS flag. Path
// amplitudes are fixed by the trace; small-scale fading enters as an
// independent uniform phase per path per episode.
//
// CSV schema (header required):
//   bs_id,location_index,aod_az_rad,aod_el_rad,aoa_az_rad,aoa_el_rad,gain_db,los

#ifndef MMHSIM_TRACE_HPP
#define MMHSIM_TRACE_HPP

#include <cmath>
#include <fstream>
#include <map>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "mmhsim/channel.hpp"
#include "mmhsim/errors.hpp"
#include "mmhsim/rng.hpp"

namespace mmhsim {

struct TracePath {
  double aod_az = 0.0, aod_el = 0.0;
  double aoa_az = 0.0, aoa_el = 0.0;
  double gain_db = 0.0;
  bool los = false;
};

constexpr const char* kTraceHeader =
    "bs_id,location_index,aod_az_rad,aod_el_rad,aoa_az_rad,aoa_el_rad,gain_db,los";

class ChannelTrace {
public:
  using Key = std::pair<int, int>;  // (bs_id, location_index)

  void add(int bs_id, int location, TracePath path) {
    paths_[{bs_id, location}].push_back(path);
    max_bs_ = std::max(max_bs_, bs_id + 1);
    max_location_ = std::max(max_location_, location + 1);
  }

  const std::vector<TracePath>* find(int bs_id, int location) const {
    const auto it = paths_.find({bs_id, location});
    return it == paths_.end() ? nullptr : &it->second;
  }

  int num_bs() const { return max_bs_; }
  int num_locations() const { return max_location_; }
  bool empty() const { return paths_.empty(); }

  /// Trace paths as single-subpath clusters; per-episode fading enters as a
  /// uniform phase per path drawn from `rng`.
  std::vector<PathCluster> clusters(int bs_id, int location, RngStream& rng) const {
    std::vector<PathCluster> out;
    const auto* paths = find(bs_id, location);
    if (!paths) return out;
    int index = 0;
    for (const auto& p : *paths) {
      const double amp = std::pow(10.0, p.gain_db / 20.0);
      const std::complex<double> gain = std::polar(amp, rng.uniform(0.0, 2.0 * M_PI));
      PathCluster c;
      c.cluster_index = index++;
      c.center_aod_az = p.aod_az;
      c.center_aod_el = p.aod_el;
      c.center_aoa_az = p.aoa_az;
      c.center_aoa_el = p.aoa_el;
      c.subpaths = {make_subpath(gain, p.aoa_az, p.aoa_el, p.aod_az, p.aod_el)};
      out.push_back(std::move(c));
    }
    return out;
  }

  bool any_los(int bs_id, int location) const {
    const auto* paths = find(bs_id, location);
    if (!paths) return false;
    for (const auto& p : *paths)
      if (p.los) return true;
    return false;
  }

private:
  std::map<Key, std::vector<TracePath>> paths_;
  int max_bs_ = 0;
  int max_location_ = 0;
};

inline ChannelTrace parse_trace(std::istream& in, const std::string& origin = "<stream>") {
  std::string line;
  if (!std::getline(in, line) || line != kTraceHeader)
    throw ConfigError("trace " + origin + ": missing or unexpected header");
  ChannelTrace trace;
  int line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    std::istringstream is(line);
    std::string field;
    std::vector<std::string> f;
    while (std::getline(is, field, ',')) f.push_back(field);
    if (f.size() != 8)
      throw ConfigError("trace " + origin + " line " + std::to_string(line_no) +
                        ": expected 8 fields");
    TracePath p;
    const int bs_id = std::stoi(f[0]);
    const int location = std::stoi(f[1]);
    p.aod_az = std::stod(f[2]);
    p.aod_el = std::stod(f[3]);
    p.aoa_az = std::stod(f[4]);
    p.aoa_el = std::stod(f[5]);
    p.gain_db = std::stod(f[6]);
    p.los = std::stoi(f[7]) != 0;
    if (bs_id < 0 || location < 0)
      throw ConfigError("trace " + origin + " line " + std::to_string(line_no) +
                        ": negative ids");
    trace.add(bs_id, location, p);
  }
  if (trace.empty()) throw ConfigError("trace " + origin + ": no paths");
  return trace;
}

inline ChannelTrace load_trace(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open trace file: " + path);
  return parse_trace(in, path);
}

}  // namespace mmhsim

#endif  // MMHSIM_TRACE_HPP
