// SPDX-License-Identifier: Apache-2.0
//
// Episode engine and experiment orchestration. One episode walks the fixed
// trajectory under a fresh draw of blockage, shadowing and fading; each
// coherence interval runs DM1 (backup selection), the two pilot mini-slots
// via skeleton-restricted beam search, the DM2 handover rule, and metric
// collection. The same engine drives Q-learning training, threshold tuning
// and policy evaluation, with per-(episode, BS, location) random streams so
// every policy sees identical channels on the same replication.

#ifndef MMHSIM_SIMULATION_HPP
#define MMHSIM_SIMULATION_HPP

#include <cstdint>
#include <fstream>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "mmhsim/baselines.hpp"
#include "mmhsim/config.hpp"
#include "mmhsim/handover.hpp"
#include "mmhsim/learning.hpp"
#include "mmhsim/metrics.hpp"
#include "mmhsim/skeleton.hpp"
#include "mmhsim/trace.hpp"

namespace mmhsim {

// Stream domains keep training, evaluation and tuning draws independent.
constexpr std::uint64_t kDomainTrain = 0;
constexpr std::uint64_t kDomainEval = 1;
constexpr std::uint64_t kDomainTune = 2;
constexpr std::uint64_t kDomainProbe = 3;

struct RefreshRule {
  bool use_ed = false;
  double t_d = 1.0;
  double ed_distance_m = 10.0;

  static RefreshRule distance_threshold(double t_d) { return {false, t_d, 0.0}; }
  static RefreshRule euclidean(double ed_m) { return {true, 0.0, ed_m}; }
};

/// Immutable per-run context: deployed zone, trajectory, codebooks, grids.
class SimContext {
public:
  static SimContext create(const SimConfig& cfg) {
    cfg.validate();
    SimContext ctx;
    ctx.cfg = cfg;
    ctx.traj = build_trajectory(cfg.trajectory.waypoints, cfg.trajectory.spacing_m,
                                cfg.trajectory.mobility, cfg.trajectory.speed_kmh);
    if (!cfg.channel_trace.empty()) {
      ctx.trace = load_trace(cfg.channel_trace);
      if (ctx.trace->num_locations() < ctx.traj.size())
        throw ConfigError("channel trace covers fewer locations than the trajectory");
      // The trace fixes links; BS geometry only sizes the zone.
      ctx.zone.extent = cfg.zone.extent;
      ctx.zone.density = cfg.zone.density;
      const int n = ctx.trace->num_bs();
      for (int j = 0; j < n; ++j)
        ctx.zone.bs_list.push_back(
            {j,
             {cfg.zone.extent.x0 + (j + 0.5) * cfg.zone.extent.width / n,
              cfg.zone.extent.y0 + cfg.zone.extent.height / 2.0},
             cfg.zone.bs_height_m});
    } else {
      RngStream deploy_rng(cfg.seed, "deploy");
      ctx.zone = deploy_bs(cfg.zone.extent, cfg.zone.density, deploy_rng,
                           cfg.zone.bs_height_m);
    }
    ctx.f_book = Codebook::angle_grid(cfg.arrays.bs_rows, cfg.arrays.bs_cols,
                                      cfg.codebook_oversampling);
    ctx.w_book = Codebook::angle_grid(cfg.arrays.ue_rows, cfg.arrays.ue_cols,
                                      cfg.codebook_oversampling);
    ctx.grid_cols = std::max(
        1, static_cast<int>(std::ceil(cfg.zone.extent.width / cfg.skeleton.grid_m)));
    ctx.grid_rows = std::max(
        1, static_cast<int>(std::ceil(cfg.zone.extent.height / cfg.skeleton.grid_m)));
    ctx.grid_ids.reserve(ctx.traj.size());
    for (const auto& p : ctx.traj.points) ctx.grid_ids.push_back(ctx.grid_of(p));
    return ctx;
  }

  int num_bs() const { return zone.num_bs(); }
  int locations() const { return traj.size(); }
  std::uint64_t master_seed() const { return cfg.seed; }

  int grid_of(const Vec2& p) const {
    const auto clamp_idx = [](double v, int hi) {
      const int i = static_cast<int>(std::floor(v));
      return std::min(std::max(i, 0), hi - 1);
    };
    const int gx = clamp_idx((p.x - zone.extent.x0) / cfg.skeleton.grid_m, grid_cols);
    const int gy = clamp_idx((p.y - zone.extent.y0) / cfg.skeleton.grid_m, grid_rows);
    return gy * grid_cols + gx;
  }

  int grid_id(int location) const { return grid_ids.at(location); }

  /// RL state space dimensions (M, N, L).
  std::size_t state_count() const {
    return static_cast<std::size_t>(locations()) * num_bs() * cfg.handover.levels;
  }
  std::size_t state_flat(const RlState& s) const {
    return (static_cast<std::size_t>(s.location) * num_bs() + s.serving_bs) *
               cfg.handover.levels +
           (s.snr_level - 1);
  }

  SimConfig cfg;
  Zone zone;
  Trajectory traj;
  Codebook f_book, w_book;
  std::optional<ChannelTrace> trace;
  int grid_cols = 1;
  int grid_rows = 1;
  std::vector<int> grid_ids;
};

// ---------------------------------------------------------------------------
// Episode runtime
// ---------------------------------------------------------------------------

class EpisodeRuntime {
public:
  EpisodeRuntime(const SimContext& ctx, RefreshRule rule, std::uint64_t domain,
                 std::int64_t episode)
      : ctx_(ctx), rule_(rule), domain_(domain), episode_(episode),
        links_(make_links()), cluster_cache_(static_cast<std::size_t>(ctx.num_bs()) *
                                             ctx.locations()),
        log_(ctx.num_bs()) {
    dbs_.reserve(ctx.num_bs());
    for (int j = 0; j < ctx.num_bs(); ++j)
      dbs_.emplace_back(ctx.cfg.skeleton.t_aging, ctx.cfg.skeleton.grid_m);
    metrics_.rate_bps.reserve(ctx.locations());
    metrics_.serving_bs.reserve(ctx.locations());
    metrics_.handover_flag.reserve(ctx.locations());
  }

  RlState begin() {
    serving_ = 0;  // the handover algorithm starts on BS 1
    location_ = 0;
    ci_ = 0;
    ensure_reference();
    return state();
  }

  struct CiResult {
    RlState next_state;
    double reward_gbps = 0.0;
    double rate_bps = 0.0;
    bool done = false;
    CiRecord record;
  };

  /// One location step of Algorithm 1 with the DM1-selected backup BS.
  CiResult step_with_backup(int backup) {
    if (ctx_.num_bs() > 1 && backup == serving_)
      backup = (serving_ + 1) % ctx_.num_bs();
    return run_location([this, backup](int /*location*/) { return backup; });
  }

  /// One location step of the multi-connectivity baseline: probes every BS
  /// and re-selects the strongest on serving-link failure.
  CiResult step_multi() {
    CiResult result;
    double rate_total = 0.0;
    const int loc = location_;
    bool any_handover = false;
    for (int c = 0; c < ctx_.cfg.cis_per_location; ++c) {
      ensure_reference();
      maybe_refresh();
      std::vector<int> levels(ctx_.num_bs());
      double serving_snr = 0.0;
      for (int j = 0; j < ctx_.num_bs(); ++j) {
        const ProbeResult probe = probe_link(j);
        levels[j] = probe.level;
        log_.record(j, probe.level);
        if (j == serving_) serving_snr = probe.snr_linear;
      }
      const int next =
          multi_connectivity_step(levels, serving_, ctx_.cfg.handover.threshold_level);
      const bool serving_failed = levels[serving_] <= ctx_.cfg.handover.threshold_level;
      const bool rlf =
          serving_failed && levels[next] <= ctx_.cfg.handover.threshold_level;
      rate_total += rlf ? 0.0 : rate_bps(serving_snr, ctx_.cfg.radio.bandwidth_hz);
      if (rlf) ++metrics_.rlf_count;
      if (next != serving_) {
        any_handover = true;
        ++metrics_.handover_count;
      }
      result.record.ci_index = ci_;
      result.record.location_index = loc;
      result.record.serving = serving_;
      result.record.serving_level = levels[serving_];
      result.record.handover_executed = next != serving_;
      result.record.rlf = rlf;
      log_.tick();
      end_ci();
      serving_ = next;
      ++ci_;
    }
    finish_location(result, loc, rate_total / ctx_.cfg.cis_per_location, any_handover);
    return result;
  }

  RlState state() const {
    const auto level = log_.level(serving_);
    return {std::min(location_, ctx_.locations() - 1), serving_,
            level.value_or(ctx_.cfg.handover.levels)};
  }

  const EpisodeMetrics& metrics() const { return metrics_; }
  int serving() const { return serving_; }
  bool done() const { return location_ >= ctx_.locations(); }

private:
  struct ProbeResult {
    int level = 1;
    double snr_linear = 0.0;
  };

  LinkStateTable make_links() {
    RngStream rng(ctx_.master_seed(), "blockage",
                  {domain_, static_cast<std::uint64_t>(episode_)});
    return draw_link_states(ctx_.zone, ctx_.traj, rng, ctx_.cfg.ue_height_m,
                            ctx_.cfg.blockage_correlation_m);
  }

  const std::vector<PathCluster>& clusters(int bs, int loc) {
    auto& slot = cluster_cache_[static_cast<std::size_t>(bs) * ctx_.locations() + loc];
    if (!slot.has_value()) {
      RngStream rng(ctx_.master_seed(), "channel",
                    {domain_, static_cast<std::uint64_t>(episode_),
                     static_cast<std::uint64_t>(bs), static_cast<std::uint64_t>(loc)});
      if (ctx_.trace.has_value())
        slot = ctx_.trace->clusters(bs, loc, rng);
      else
        slot = generate_clusters(ctx_.zone.bs_list[bs], ctx_.traj.points[loc],
                                 ctx_.cfg.ue_height_m, links_.at(bs, loc),
                                 ctx_.cfg.radio, rng);
    }
    return *slot;
  }

  const RestrictedSearchPlan& plan_for(const std::shared_ptr<const PathSkeleton>& skel) {
    auto it = plan_cache_.find(skel.get());
    if (it == plan_cache_.end())
      it = plan_cache_
               .emplace(skel.get(),
                        plan_restricted_search(*skel, ctx_.f_book, ctx_.w_book))
               .first;
    return it->second;
  }

  /// Database-side skeleton of (bs, current grid); rebuilds run the full
  /// extraction from the episode's ground truth.
  std::shared_ptr<const PathSkeleton> db_skeleton(int bs) {
    const int grid = ctx_.grid_id(location_);
    auto result = dbs_[bs].query(grid, [this, bs](int) -> std::optional<PathSkeleton> {
      PathSkeleton ps = extract_skeleton(clusters(bs, location_),
                                         links_.at(bs, location_),
                                         ctx_.cfg.skeleton.max_paths);
      ps.bs_id = bs;
      return ps;
    });
    if (result.rebuilt) ++metrics_.db_rebuilds;
    return result.skeleton;
  }

  ProbeResult probe_link(int bs) {
    ++metrics_.probe_count;
    std::shared_ptr<const PathSkeleton> skel;
    if (bs == serving_ && reference_ && reference_bs_ == serving_)
      skel = reference_;
    else
      skel = db_skeleton(bs);

    const auto& cl = clusters(bs, location_);
    double gain_sq = 0.0;
    if (!cl.empty()) {
      if (skel && !skel->empty()) {
        gain_sq = run_restricted_search(cl, ctx_.f_book, ctx_.w_book,
                                        plan_for(skel), ctx_.cfg.arrays)
                      .gain;
      } else {
        // Blocked or unavailable skeleton: exhaustive search, as the
        // database protocol's worst case prescribes.
        const Eigen::MatrixXcd h = channel_from_clusters(cl, ctx_.cfg.arrays);
        gain_sq = beam_search(h, ctx_.f_book, ctx_.w_book).gain;
      }
    }
    ProbeResult out;
    out.snr_linear = snr_linear_from_gain(gain_sq, ctx_.cfg.radio);
    out.level = quantize_snr(10.0 * std::log10(std::max(out.snr_linear, 1e-300)),
                             ctx_.cfg.handover);
    return out;
  }

  /// Post-handover (or initial) acquisition of the serving reference
  /// skeleton; not a distance-triggered renewal, so U is not charged.
  void ensure_reference() {
    if (reference_bs_ == serving_ && reference_) return;
    reference_ = db_skeleton(serving_);
    reference_bs_ = serving_;
    distance_since_refresh_ = 0.0;
  }

  /// Distance-triggered skeleton renewal: the UE compares the current
  /// skeleton against the reference (or walks the fixed ED period) and
  /// queries the database when the rule fires. Rebuild queries charge U.
  void maybe_refresh() {
    bool refresh = false;
    if (rule_.use_ed) {
      refresh = distance_since_refresh_ >= rule_.ed_distance_m;
    } else {
      const PathSkeleton now = extract_skeleton(clusters(serving_, location_),
                                                links_.at(serving_, location_),
                                                ctx_.cfg.skeleton.max_paths);
      refresh = !reference_ || reference_->empty() ||
                skeleton_distance(now, *reference_,
                                  ctx_.cfg.skeleton.gain_weight_per_db) > rule_.t_d;
    }
    if (!refresh) return;
    const int grid = ctx_.grid_id(location_);
    auto result = dbs_[serving_].query(grid, [this](int) -> std::optional<PathSkeleton> {
      PathSkeleton ps = extract_skeleton(clusters(serving_, location_),
                                         links_.at(serving_, location_),
                                         ctx_.cfg.skeleton.max_paths);
      ps.bs_id = serving_;
      return ps;
    });
    if (result.rebuilt) {
      ++metrics_.db_rebuilds;
      ++metrics_.skeleton_queries;  // U counts rebuild invocations
    }
    if (result.skeleton) reference_ = result.skeleton;
    reference_bs_ = serving_;
    distance_since_refresh_ = 0.0;
  }

  void end_ci() {
    for (auto& db : dbs_) db.tick();
  }

  template <typename BackupFn>
  CiResult run_location(BackupFn&& choose_backup) {
    CiResult result;
    const int loc = location_;
    double rate_total = 0.0;
    bool any_handover = false;
    for (int c = 0; c < ctx_.cfg.cis_per_location; ++c) {
      ensure_reference();
      maybe_refresh();
      const int backup = choose_backup(loc);
      double serving_snr = 0.0;
      const StepOutcome out = step_ci(
          log_, serving_, backup,
          [this, &serving_snr](int bs) {
            const ProbeResult probe = probe_link(bs);
            if (bs == serving_) serving_snr = probe.snr_linear;
            return probe.level;
          },
          ctx_.cfg.handover, ci_, loc);
      const double rate =
          out.record.rlf ? 0.0 : rate_bps(serving_snr, ctx_.cfg.radio.bandwidth_hz);
      rate_total += rate;
      if (out.record.rlf) ++metrics_.rlf_count;
      if (out.record.handover_executed) {
        any_handover = true;
        ++metrics_.handover_count;
      }
      result.record = out.record;
      end_ci();
      serving_ = out.next_serving;
      ++ci_;
    }
    finish_location(result, loc, rate_total / ctx_.cfg.cis_per_location, any_handover);
    return result;
  }

  void finish_location(CiResult& result, int loc, double rate, bool any_handover) {
    metrics_.rate_bps.push_back(rate);
    metrics_.serving_bs.push_back(result.record.serving);
    metrics_.handover_flag.push_back(any_handover ? 1 : 0);
    metrics_.r_traj += rate;
    result.rate_bps = rate;
    result.reward_gbps = rate * 1e-9;
    ++location_;
    distance_since_refresh_ += ctx_.traj.spacing;
    result.done = location_ >= ctx_.locations();
    result.next_state = state();
  }

  const SimContext& ctx_;
  RefreshRule rule_;
  std::uint64_t domain_;
  std::int64_t episode_;
  LinkStateTable links_;
  std::vector<std::optional<std::vector<PathCluster>>> cluster_cache_;
  std::vector<SkeletonDatabase> dbs_;
  std::map<const PathSkeleton*, RestrictedSearchPlan> plan_cache_;
  SnrLogTable log_;
  int serving_ = 0;
  std::shared_ptr<const PathSkeleton> reference_;
  int reference_bs_ = -1;
  double distance_since_refresh_ = 0.0;
  int location_ = 0;
  int ci_ = 0;
  EpisodeMetrics metrics_;
};

// ---------------------------------------------------------------------------
// Training
// ---------------------------------------------------------------------------

class SimTrainingEnv final : public EpisodeEnv {
public:
  explicit SimTrainingEnv(const SimContext& ctx, std::uint64_t domain = kDomainTrain)
      : ctx_(ctx), domain_(domain) {}

  RlState reset(std::int64_t episode_index) override {
    runtime_.emplace(ctx_, RefreshRule::distance_threshold(ctx_.cfg.skeleton.t_d),
                     domain_, episode_index);
    return runtime_->begin();
  }

  Step step(int action) override {
    const EpisodeRuntime::CiResult r = runtime_->step_with_backup(action);
    return {r.next_state, r.reward_gbps, r.done};
  }

private:
  const SimContext& ctx_;
  std::uint64_t domain_;
  std::optional<EpisodeRuntime> runtime_;
};

/// Trains the backup-selection Q-table over the configured episode budget.
inline QTable train_policy(const SimContext& ctx, std::int64_t episodes_override = -1) {
  SimTrainingEnv env(ctx);
  QTable q(ctx.locations(), ctx.num_bs(), ctx.cfg.handover.levels, ctx.num_bs());
  LearningConfig lc = ctx.cfg.learning;
  for (double& v : q.values()) v = lc.q_init;
  if (episodes_override >= 0) lc.episodes = episodes_override;
  RngStream explore(ctx.master_seed(), "explore");
  train(env, q, lc, explore, /*exclude_serving=*/true);
  return q;
}

// ---------------------------------------------------------------------------
// Evaluation
// ---------------------------------------------------------------------------

/// Runs replications of one policy. SMART-UCB keeps its bandit statistics
/// across replications (it learns online during evaluation).
class EvalSession {
public:
  EvalSession(const SimContext& ctx, PolicyKind kind, const QTable* qtable)
      : ctx_(ctx), kind_(kind), qtable_(qtable) {
    if ((kind == PolicyKind::ours || kind == PolicyKind::ours_ed) && !qtable)
      throw ConfigError("policy '" + to_string(kind) + "' needs a trained Q-table");
    if (kind == PolicyKind::smart_ucb)
      ucb_.emplace(static_cast<int>(ctx.state_count()), ctx.num_bs());
  }

  EpisodeMetrics run_replication(int replication) {
    EpisodeRuntime rt(ctx_, refresh_rule(), kDomainEval, replication);
    if (kind_ == PolicyKind::multi_connectivity) {
      rt.begin();
      while (!rt.done()) rt.step_multi();
      return rt.metrics();
    }
    RlState s = rt.begin();
    bool done = false;
    while (!done) {
      const int action = select_backup(s);
      const EpisodeRuntime::CiResult r = rt.step_with_backup(action);
      if (kind_ == PolicyKind::smart_ucb)
        ucb_->update(static_cast<int>(ctx_.state_flat(s)), action, r.reward_gbps);
      s = r.next_state;
      done = r.done;
    }
    return rt.metrics();
  }

private:
  RefreshRule refresh_rule() const {
    if (kind_ == PolicyKind::ours_ed)
      return RefreshRule::euclidean(ctx_.cfg.skeleton.ed_distance_m);
    return RefreshRule::distance_threshold(ctx_.cfg.skeleton.t_d);
  }

  int select_backup(const RlState& s) {
    switch (kind_) {
      case PolicyKind::ours:
      case PolicyKind::ours_ed:
        return qtable_->argmax_action_excluding(s, s.serving_bs);
      case PolicyKind::smart_ucb:
        return ucb_select_excluding(*ucb_, static_cast<int>(ctx_.state_flat(s)),
                                    ctx_.cfg.ucb_c, s.serving_bs);
      default:
        throw ConfigError("select_backup: policy has no DM1 rule");
    }
  }

  const SimContext& ctx_;
  PolicyKind kind_;
  const QTable* qtable_;
  std::optional<UcbStats> ucb_;
};

struct ExperimentResult {
  std::vector<std::string> policy_order;
  std::map<std::string, std::vector<EpisodeMetrics>> episodes;
};

inline ExperimentResult run_experiment(const SimContext& ctx,
                                       const std::vector<PolicyKind>& policies,
                                       int replications, const QTable* qtable) {
  ExperimentResult result;
  for (const PolicyKind kind : policies) {
    const std::string name = to_string(kind);
    result.policy_order.push_back(name);
    EvalSession session(ctx, kind, qtable);
    std::vector<EpisodeMetrics> episodes;
    episodes.reserve(replications);
    for (int rep = 0; rep < replications; ++rep)
      episodes.push_back(session.run_replication(rep));
    result.episodes.emplace(name, std::move(episodes));
  }
  return result;
}

// ---------------------------------------------------------------------------
// Threshold tuning
// ---------------------------------------------------------------------------

/// One training-set episode evaluated with a fixed round-robin backup
/// policy; DM1 learning is orthogonal to the beamforming threshold.
inline EpisodeMetrics run_round_robin_episode(const SimContext& ctx, double t_d,
                                              std::int64_t episode,
                                              std::uint64_t domain = kDomainTune) {
  EpisodeRuntime rt(ctx, RefreshRule::distance_threshold(t_d), domain, episode);
  rt.begin();
  int cursor = 0;
  bool done = rt.done();
  while (!done) {
    const int n = ctx.num_bs();
    const int backup =
        n > 1 ? (rt.serving() + 1 + (cursor++ % (n - 1))) % n : rt.serving();
    done = rt.step_with_backup(backup).done;
  }
  return rt.metrics();
}

/// Largest skeleton distance observed over a few probe episodes; the golden
/// section bracket is [0, t_hi].
inline double estimate_t_d_hi(const SimContext& ctx, int probe_episodes = 2) {
  // Sample ground-truth skeletons across BSs and locations.
  std::vector<PathSkeleton> samples;
  for (int e = 0; e < probe_episodes; ++e) {
    RngStream blockage(ctx.master_seed(), "blockage",
                       {kDomainProbe, static_cast<std::uint64_t>(e)});
    const LinkStateTable links =
        draw_link_states(ctx.zone, ctx.traj, blockage, ctx.cfg.ue_height_m,
                         ctx.cfg.blockage_correlation_m);
    for (int j = 0; j < ctx.num_bs(); ++j)
      for (int i = 0; i < ctx.locations(); i += 2) {
        RngStream rng(ctx.master_seed(), "channel",
                      {kDomainProbe, static_cast<std::uint64_t>(e),
                       static_cast<std::uint64_t>(j), static_cast<std::uint64_t>(i)});
        const auto cl =
            ctx.trace.has_value()
                ? ctx.trace->clusters(j, i, rng)
                : generate_clusters(ctx.zone.bs_list[j], ctx.traj.points[i],
                                    ctx.cfg.ue_height_m, links.at(j, i),
                                    ctx.cfg.radio, rng);
        samples.push_back(extract_skeleton(cl, links.at(j, i), ctx.cfg.skeleton.max_paths));
      }
  }
  double hi = 0.0;
  for (std::size_t a = 0; a < samples.size(); ++a)
    for (std::size_t b = a + 1; b < samples.size(); ++b)
      hi = std::max(hi, skeleton_distance(samples[a], samples[b],
                                          ctx.cfg.skeleton.gain_weight_per_db));
  return hi > 0.0 ? hi : 1.0;
}

inline ThresholdEvaluator make_threshold_evaluator(const SimContext& ctx,
                                                   int episodes) {
  return [&ctx, episodes](double t_d) {
    double rate_sum = 0.0;
    int exceed = 0;
    for (int e = 0; e < episodes; ++e) {
      const EpisodeMetrics m = run_round_robin_episode(ctx, t_d, e);
      rate_sum += m.r_traj;
      if (m.skeleton_queries > ctx.cfg.skeleton.u_max) ++exceed;
    }
    return ThresholdObjective{rate_sum / episodes,
                              static_cast<double>(exceed) / episodes};
  };
}

struct TuneResult {
  ThresholdResult threshold;
  double t_hi = 0.0;
};

inline TuneResult tune_threshold(const SimContext& ctx, int episodes_override = -1) {
  const int episodes =
      episodes_override > 0 ? episodes_override : ctx.cfg.tune_episodes;
  const double t_hi = estimate_t_d_hi(ctx);
  const ThresholdEvaluator evaluator = make_threshold_evaluator(ctx, episodes);
  const double tol = 1e-3 * t_hi;
  return {optimize_threshold(evaluator, t_hi, ctx.cfg.skeleton.delta, tol), t_hi};
}

// ---------------------------------------------------------------------------
// Policy artifact (train -> evaluate handoff)
// ---------------------------------------------------------------------------

struct PolicyArtifact {
  QTable qtable;
  double t_d = 1.0;
  std::uint64_t seed = 0;
  std::vector<Vec2> bs_positions;
};

inline nlohmann::json artifact_to_json(const PolicyArtifact& artifact) {
  nlohmann::json positions = nlohmann::json::array();
  for (const auto& p : artifact.bs_positions) positions.push_back({p.x, p.y});
  return {{"format", "mmhsim-policy"},
          {"version", 1},
          {"t_d", artifact.t_d},
          {"seed", artifact.seed},
          {"bs_positions", positions},
          {"qtable", qtable_to_json(artifact.qtable)}};
}

inline PolicyArtifact artifact_from_json(const nlohmann::json& j) {
  if (j.value("format", "") != "mmhsim-policy")
    throw ConfigError("artifact_from_json: unrecognized format");
  if (j.value("version", 0) != 1)
    throw ConfigError("artifact_from_json: unsupported version");
  PolicyArtifact artifact{qtable_from_json(j.at("qtable")), j.at("t_d").get<double>(),
                          j.at("seed").get<std::uint64_t>(), {}};
  for (const auto& p : j.at("bs_positions")) {
    const auto v = p.get<std::vector<double>>();
    if (v.size() != 2) throw ConfigError("artifact bs_positions must be [x, y]");
    artifact.bs_positions.push_back({v[0], v[1]});
  }
  return artifact;
}

inline void save_artifact(const PolicyArtifact& artifact, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw ConfigError("cannot write artifact: " + path);
  out << artifact_to_json(artifact).dump(2) << '\n';
}

inline PolicyArtifact load_artifact(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open artifact: " + path);
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError("artifact parse error in " + path + ": " + e.what());
  }
  return artifact_from_json(j);
}

/// The artifact must have been trained on the same deployment and state
/// space the evaluation runs on.
inline void check_artifact(const PolicyArtifact& artifact, const SimContext& ctx) {
  if (static_cast<int>(artifact.bs_positions.size()) != ctx.num_bs())
    throw ConfigError("artifact BS count does not match the scenario deployment");
  for (int j = 0; j < ctx.num_bs(); ++j) {
    const Vec2& a = artifact.bs_positions[j];
    const Vec2& b = ctx.zone.bs_list[j].position;
    if (std::abs(a.x - b.x) > 1e-9 || std::abs(a.y - b.y) > 1e-9)
      throw ConfigError("artifact BS positions do not match the scenario deployment");
  }
  if (artifact.qtable.locations() != ctx.locations() ||
      artifact.qtable.num_bs() != ctx.num_bs() ||
      artifact.qtable.levels() != ctx.cfg.handover.levels ||
      artifact.qtable.actions() != ctx.num_bs())
    throw ConfigError("artifact Q-table dimensions do not match the scenario");
}

// ---------------------------------------------------------------------------
// CSV emission
// ---------------------------------------------------------------------------

inline void write_experiment_csvs(const ExperimentResult& result,
                                  const std::string& prefix) {
  std::ofstream metrics(prefix + "_metrics.csv");
  std::ofstream summary(prefix + "_summary.csv");
  std::ofstream locations(prefix + "_locations.csv");
  std::ofstream histogram(prefix + "_handovers.csv");
  if (!metrics || !summary || !locations || !histogram)
    throw ConfigError("cannot write CSV outputs with prefix: " + prefix);

  metrics << kMetricsHeader << '\n';
  summary << kSummaryHeader << '\n';
  locations << kLocationHeader << '\n';
  histogram << kHandoverHistogramHeader << '\n';

  for (const auto& policy : result.policy_order) {
    const auto& episodes = result.episodes.at(policy);
    for (std::size_t rep = 0; rep < episodes.size(); ++rep) {
      const EpisodeMetrics& ep = episodes[rep];
      for (std::size_t i = 0; i < ep.rate_bps.size(); ++i) {
        MetricsRow row{policy, static_cast<int>(rep), static_cast<int>(i),
                       ep.rate_bps[i], ep.serving_bs[i], ep.handover_flag[i]};
        metrics << emit_csv_row(row) << '\n';
      }
    }
    summary << emit_csv_row(summarize(policy, episodes)) << '\n';
    const LocationStats stats = per_location_stats(episodes);
    for (std::size_t i = 0; i < stats.mean_rate_bps.size(); ++i)
      locations << policy << ',' << i << ',' << fmt_double(stats.mean_rate_bps[i])
                << ',' << fmt_double(stats.std_rate_bps[i]) << '\n';
    for (const auto& [count, freq] : handover_histogram(episodes))
      histogram << policy << ',' << count << ',' << freq << '\n';
  }
}

}  // namespace mmhsim

#endif  // MMHSIM_SIMULATION_HPP
