// SPDX-License-Identifier: Apache-2.0
//
// Per-CI handover state machine: SNR quantization, the per-BS SNR log with
// ages (t_Log), and the DM2 execution rule. One CI probes the serving BS
// (mini-slot S) and the DM1-selected backup BS (mini-slot B), then decides
// the next serving BS, then ages every log entry by one CI.

#ifndef MMHSIM_HANDOVER_HPP
#define MMHSIM_HANDOVER_HPP

#include <algorithm>
#include <cstdint>
#include <optional>
#include <stdexcept>
#include <vector>

#include "mmhsim/errors.hpp"

namespace mmhsim {

struct HandoverConfig {
  int levels = 2;                            // L
  std::vector<double> boundaries_db = {40.0};  // strictly increasing, size L-1
  int threshold_level = 1;                   // T_HO: acceptable means level > this
  int trigger_window = 1;                    // consecutive below-threshold CIs

  void validate() const {
    if (levels < 1) throw ConfigError("HandoverConfig: levels must be >= 1");
    if (static_cast<int>(boundaries_db.size()) != levels - 1)
      throw ConfigError("HandoverConfig: need exactly L-1 boundaries");
    for (std::size_t i = 1; i < boundaries_db.size(); ++i)
      if (boundaries_db[i] <= boundaries_db[i - 1])
        throw ConfigError("HandoverConfig: boundaries must be strictly increasing");
    if (threshold_level < 0 || threshold_level > levels)
      throw ConfigError("HandoverConfig: threshold level out of range");
    if (trigger_window < 1)
      throw ConfigError("HandoverConfig: trigger window must be >= 1");
  }
};

/// Quantized SNR level in [1, L]: 1 + number of boundaries at or below
/// snr_db (a value on a boundary quantizes to the upper level).
inline int quantize_snr(double snr_db, const HandoverConfig& cfg) {
  int level = 1;
  for (double b : cfg.boundaries_db)
    if (snr_db >= b) ++level;
  return level;
}

/// Per-BS log of the latest quantized SNR level and its age in CIs.
/// Unprobed BSs carry an infinite age and no level. Also tracks the count
/// of consecutive CIs the serving link spent at or below the threshold.
class SnrLogTable {
public:
  explicit SnrLogTable(int num_bs) : entries_(num_bs) {
    if (num_bs < 1) throw ConfigError("SnrLogTable: need at least one BS");
  }

  int num_bs() const { return static_cast<int>(entries_.size()); }

  void record(int bs, int level) { at(bs) = Entry{level, 0}; }

  /// t_Log(BS_j) += 1 for every finite age; infinity stays infinity.
  void tick() {
    for (auto& e : entries_)
      if (e.has_value()) ++e->age;
  }

  std::optional<int> level(int bs) const {
    const auto& e = at(bs);
    return e.has_value() ? std::optional<int>(e->level) : std::nullopt;
  }

  /// Age in CIs of the most recent probe, or nullopt when never probed.
  std::optional<std::int64_t> age(int bs) const {
    const auto& e = at(bs);
    return e.has_value() ? std::optional<std::int64_t>(e->age) : std::nullopt;
  }

  int consecutive_below() const { return consecutive_below_; }
  void count_below() { ++consecutive_below_; }
  void reset_below() { consecutive_below_ = 0; }

private:
  struct Entry {
    int level = 0;
    std::int64_t age = 0;
  };

  std::optional<Entry>& at(int bs) {
    if (bs < 0 || bs >= num_bs()) throw std::out_of_range("SnrLogTable: bad BS id");
    return entries_[bs];
  }
  const std::optional<Entry>& at(int bs) const {
    if (bs < 0 || bs >= num_bs()) throw std::out_of_range("SnrLogTable: bad BS id");
    return entries_[bs];
  }

  std::vector<std::optional<Entry>> entries_;
  int consecutive_below_ = 0;
};

struct CiRecord {
  int ci_index = 0;
  int location_index = 0;
  int serving = 0;
  int backup = 0;
  int serving_level = 0;
  int backup_level = 0;
  bool handover_executed = false;
  bool rlf = false;  // no logged BS above threshold; the CI's rate is zero
};

struct StepOutcome {
  int next_serving = 0;
  CiRecord record;
};

/// One coherence interval of the handover algorithm. `probe` measures the
/// quantized SNR level of a BS at the current location. Probes set t_Log to
/// zero; if the serving level stays above T_HO the serving BS is kept,
/// otherwise (once the trigger window is filled) the handover rule runs:
/// backup if acceptable, else the freshest logged BS above T_HO, else a
/// radio-link-failure CI served by the best recorded level (ties to the
/// smallest age, then lowest id). All ages then advance by one CI.
template <typename ProbeFn>
inline StepOutcome step_ci(SnrLogTable& table, int serving, int backup,
                           ProbeFn&& probe, const HandoverConfig& cfg,
                           int ci_index = 0, int location_index = 0) {
  StepOutcome out;
  CiRecord& rec = out.record;
  rec.ci_index = ci_index;
  rec.location_index = location_index;
  rec.serving = serving;
  rec.backup = backup;

  rec.serving_level = probe(serving);
  table.record(serving, rec.serving_level);
  rec.backup_level = backup == serving ? rec.serving_level : probe(backup);
  table.record(backup, rec.backup_level);

  out.next_serving = serving;
  if (rec.serving_level > cfg.threshold_level) {
    table.reset_below();
  } else {
    table.count_below();
    if (table.consecutive_below() >= cfg.trigger_window) {
      if (rec.backup_level > cfg.threshold_level) {
        out.next_serving = backup;
      } else {
        // argmin t_Log over logged BSs with level > T_HO
        int best = -1;
        std::int64_t best_age = 0;
        for (int j = 0; j < table.num_bs(); ++j) {
          const auto lvl = table.level(j);
          if (!lvl.has_value() || *lvl <= cfg.threshold_level) continue;
          const std::int64_t a = *table.age(j);
          if (best < 0 || a < best_age) {
            best = j;
            best_age = a;
          }
        }
        if (best >= 0) {
          out.next_serving = best;
        } else {
          // Radio link failure: nothing acceptable is logged. Serve the
          // best recorded level; the CI contributes zero rate.
          rec.rlf = true;
          int best_level = -1;
          std::int64_t tie_age = 0;
          for (int j = 0; j < table.num_bs(); ++j) {
            const auto lvl = table.level(j);
            if (!lvl.has_value()) continue;
            const std::int64_t a = *table.age(j);
            if (*lvl > best_level || (*lvl == best_level && a < tie_age)) {
              best_level = *lvl;
              tie_age = a;
              out.next_serving = j;
            }
          }
        }
      }
      rec.handover_executed = out.next_serving != serving;
      table.reset_below();
    }
  }
  table.tick();
  return out;
}

}  // namespace mmhsim

#endif  // MMHSIM_HANDOVER_HPP
