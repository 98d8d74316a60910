// SPDX-License-Identifier: Apache-2.0
//
// Path skeletons and the machinery built on them: extraction from cluster
// ground truth, codebook beam search restricted to skeleton directions,
// the skeleton distance metric, distance-threshold optimization by
// golden-section search, and the per-BS grid database with normal/watch
// lists and aging.

#ifndef MMHSIM_SKELETON_HPP
#define MMHSIM_SKELETON_HPP

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <map>
#include <memory>
#include <optional>
#include <set>
#include <utility>
#include <vector>

#include <json.hpp>

#include "mmhsim/channel.hpp"
#include "mmhsim/errors.hpp"

namespace mmhsim {

struct SkeletonPath {
  double aod_az = 0.0, aod_el = 0.0;
  double aoa_az = 0.0, aoa_el = 0.0;
  double gain = 0.0;  // linear amplitude
};

/// Dominant path clusters of one (BS, grid) pair, sorted by descending gain.
struct PathSkeleton {
  std::vector<SkeletonPath> paths;
  int bs_id = -1;
  int grid_id = -1;

  bool empty() const { return paths.empty(); }
  int size() const { return static_cast<int>(paths.size()); }
};

/// Keeps up to `max_paths` clusters ranked by dominant-subpath gain; each
/// path records the cluster-center angles and that amplitude. An empty
/// cluster list yields an empty skeleton (fully blocked link).
inline PathSkeleton extract_skeleton(const std::vector<PathCluster>& clusters,
                                     const LinkState& link, int max_paths) {
  PathSkeleton ps;
  ps.bs_id = link.bs_id;
  for (const auto& cluster : clusters) {
    SkeletonPath path;
    path.aod_az = cluster.center_aod_az;
    path.aod_el = cluster.center_aod_el;
    path.aoa_az = cluster.center_aoa_az;
    path.aoa_el = cluster.center_aoa_el;
    path.gain = cluster.dominant_gain();
    ps.paths.push_back(path);
  }
  std::stable_sort(ps.paths.begin(), ps.paths.end(),
                   [](const SkeletonPath& a, const SkeletonPath& b) {
                     return a.gain > b.gain;
                   });
  if (static_cast<int>(ps.paths.size()) > max_paths) ps.paths.resize(max_paths);
  return ps;
}

// ---------------------------------------------------------------------------
// Codebooks and beam search
// ---------------------------------------------------------------------------

/// A set of unit-norm steering codewords for one array geometry. Each
/// codeword carries its direction cosines (a, b) so inner products against
/// array responses have a closed form.
struct Codebook {
  Eigen::MatrixXcd codewords;  // (rows*cols) x count, unit-norm columns
  std::vector<std::pair<double, double>> directions;  // (a, b) per codeword
  int rows = 0;
  int cols = 0;

  int count() const { return static_cast<int>(codewords.cols()); }
  int dim() const { return rows * cols; }

  /// Steering grid over quantized (azimuth x elevation) directions,
  /// `oversampling` samples per array dimension per axis. Azimuth spans
  /// [-pi/2, pi/2]: under the planar-array phase map the signed sin(az)
  /// already reaches every beam direction once, so a wider azimuth grid
  /// would only duplicate codewords.
  static Codebook angle_grid(int rows, int cols, int oversampling = 2) {
    if (rows < 1 || cols < 1 || oversampling < 1)
      throw ConfigError("Codebook::angle_grid: bad geometry");
    const int n_az = oversampling * rows;
    const int n_el = oversampling * cols;
    Codebook cb;
    cb.rows = rows;
    cb.cols = cols;
    cb.codewords.resize(rows * cols, n_az * n_el);
    cb.directions.reserve(n_az * n_el);
    const double norm = 1.0 / std::sqrt(static_cast<double>(rows * cols));
    int idx = 0;
    for (int k = 0; k < n_az; ++k) {
      const double az = -M_PI / 2.0 + (k + 0.5) * (M_PI / n_az);
      for (int m = 0; m < n_el; ++m) {
        const double el = -M_PI / 2.0 + (m + 0.5) * (M_PI / n_el);
        cb.codewords.col(idx) = norm * array_response(az, el, rows, cols);
        cb.directions.emplace_back(std::sin(az) * std::cos(el),
                                   std::sin(az) * std::sin(el));
        ++idx;
      }
    }
    return cb;
  }

  /// Critically-sampled DFT codebook; columns are mutually orthogonal.
  static Codebook dft(int rows, int cols) {
    if (rows < 1 || cols < 1) throw ConfigError("Codebook::dft: bad geometry");
    Codebook cb;
    cb.rows = rows;
    cb.cols = cols;
    cb.codewords.resize(rows * cols, rows * cols);
    cb.directions.reserve(rows * cols);
    const double norm = 1.0 / std::sqrt(static_cast<double>(rows * cols));
    int idx = 0;
    for (int k = 0; k < rows; ++k) {
      const double a = -1.0 + 2.0 * k / rows;
      for (int m = 0; m < cols; ++m) {
        const double b = -1.0 + 2.0 * m / cols;
        Eigen::VectorXcd v(rows * cols);
        for (int r = 0; r < rows; ++r)
          for (int c = 0; c < cols; ++c)
            v(r * cols + c) = std::polar(1.0, M_PI * (r * a + c * b));
        cb.codewords.col(idx) = norm * v;
        cb.directions.emplace_back(a, b);
        ++idx;
      }
    }
    return cb;
  }
};

/// Index of the codeword with the largest |codeword^H u(az, el)|,
/// ties broken by lowest index.
inline int nearest_codeword(const Codebook& cb, double az, double el) {
  const double a = std::sin(az) * std::cos(el);
  const double b = std::sin(az) * std::sin(el);
  int best = 0;
  double best_score = -1.0;
  for (int i = 0; i < cb.count(); ++i) {
    const double score =
        std::abs(steering_kernel(a - cb.directions[i].first, cb.rows)) *
        std::abs(steering_kernel(b - cb.directions[i].second, cb.cols));
    if (score > best_score) {
      best_score = score;
      best = i;
    }
  }
  return best;
}

/// Same selection via explicit inner products (reference route for tests).
inline int nearest_codeword_direct(const Codebook& cb, double az, double el) {
  const Eigen::VectorXcd u = array_response(az, el, cb.rows, cb.cols);
  int best = 0;
  double best_score = -1.0;
  for (int i = 0; i < cb.count(); ++i) {
    const double score = std::abs(std::complex<double>(cb.codewords.col(i).adjoint() * u));
    if (score > best_score) {
      best_score = score;
      best = i;
    }
  }
  return best;
}

struct BeamSearchResult {
  int w_index = -1;
  int f_index = -1;
  double gain = 0.0;  // |w^H H f|^2
};

/// Exhaustive search: G = W^H H F, argmax |g_{a,b}|^2 over all pairs.
/// Scan order is w-major with strict improvement, so ties resolve to the
/// lexicographically lowest pair.
inline BeamSearchResult beam_search(const Eigen::MatrixXcd& h, const Codebook& f_book,
                                    const Codebook& w_book) {
  if (f_book.count() < 1 || w_book.count() < 1)
    throw ConfigError("beam_search: empty codebook");
  if (w_book.dim() != h.rows() || f_book.dim() != h.cols())
    throw ShapeError("beam_search: codebook/channel dimension mismatch");
  const Eigen::MatrixXcd g = w_book.codewords.adjoint() * h * f_book.codewords;
  BeamSearchResult best;
  for (int a = 0; a < g.rows(); ++a)
    for (int b = 0; b < g.cols(); ++b) {
      const double v = std::norm(g(a, b));
      if (v > best.gain) {
        best.gain = v;
        best.w_index = a;
        best.f_index = b;
      }
    }
  if (best.w_index < 0) {
    best.w_index = 0;
    best.f_index = 0;
    best.gain = std::norm(std::complex<double>(
        w_book.codewords.col(0).adjoint() * h * f_book.codewords.col(0)));
  }
  return best;
}

/// Candidate codeword pairs of a skeleton: per path, the nearest combining
/// and beamforming codewords to the path's AoA/AoD.
struct RestrictedSearchPlan {
  std::vector<std::pair<int, int>> pairs;  // (w index, f index), path order
};

inline RestrictedSearchPlan plan_restricted_search(const PathSkeleton& ps,
                                                   const Codebook& f_book,
                                                   const Codebook& w_book) {
  if (ps.empty())
    throw BlockedSkeletonError("plan_restricted_search: empty path skeleton");
  RestrictedSearchPlan plan;
  plan.pairs.reserve(ps.paths.size());
  for (const auto& path : ps.paths)
    plan.pairs.emplace_back(nearest_codeword(w_book, path.aoa_az, path.aoa_el),
                            nearest_codeword(f_book, path.aod_az, path.aod_el));
  return plan;
}

/// Skeleton-restricted search over H: evaluates only the plan's candidate
/// pairs (P pairs instead of |W|x|F|).
inline BeamSearchResult beam_search(const Eigen::MatrixXcd& h, const Codebook& f_book,
                                    const Codebook& w_book, const PathSkeleton& ps) {
  const RestrictedSearchPlan plan = plan_restricted_search(ps, f_book, w_book);
  BeamSearchResult best;
  for (const auto& [wi, fi] : plan.pairs) {
    const std::complex<double> g =
        w_book.codewords.col(wi).adjoint() * h * f_book.codewords.col(fi);
    const double v = std::norm(g);
    if (best.w_index < 0 || v > best.gain) {
      best.gain = v;
      best.w_index = wi;
      best.f_index = fi;
    }
  }
  return best;
}

/// Restricted search evaluated directly on the cluster list (no H formed).
/// Matches beam_search(H, ...) on the same plan to floating-point accuracy.
inline BeamSearchResult run_restricted_search(const std::vector<PathCluster>& clusters,
                                              const Codebook& f_book,
                                              const Codebook& w_book,
                                              const RestrictedSearchPlan& plan,
                                              const ArrayConfig& arrays) {
  BeamSearchResult best;
  for (const auto& [wi, fi] : plan.pairs) {
    const auto [wa, wb] = w_book.directions[wi];
    const auto [fa, fb] = f_book.directions[fi];
    const double v =
        std::norm(pair_gain_from_clusters(clusters, wa, wb, fa, fb, arrays));
    if (best.w_index < 0 || v > best.gain) {
      best.gain = v;
      best.w_index = wi;
      best.f_index = fi;
    }
  }
  return best;
}

// ---------------------------------------------------------------------------
// Skeleton distance (pseudometric between path sets)
// ---------------------------------------------------------------------------

namespace detail {
inline double azimuth_diff(double a, double b) { return wrap_angle(a - b); }

inline double gain_db(double amplitude) {
  return 20.0 * std::log10(std::max(amplitude, 1e-30));
}
}  // namespace detail

/// Euclidean norm over greedily angle-matched path features. Paths are
/// matched by nearest AoD; matched pairs contribute their feature difference
/// (four angles in radians, gain in dB scaled by `gain_weight_per_db`),
/// unmatched paths contribute their full feature norm. Symmetric, and zero
/// exactly for identical skeletons.
inline double skeleton_distance(const PathSkeleton& first, const PathSkeleton& second,
                                double gain_weight_per_db = 0.1) {
  const auto& pa = first.paths;
  const auto& pb = second.paths;
  if (pa.empty() && pb.empty()) return 0.0;

  struct Candidate {
    double dist;
    int i, j;
  };
  std::vector<Candidate> candidates;
  candidates.reserve(pa.size() * pb.size());
  for (int i = 0; i < static_cast<int>(pa.size()); ++i)
    for (int j = 0; j < static_cast<int>(pb.size()); ++j) {
      const double daz = detail::azimuth_diff(pa[i].aod_az, pb[j].aod_az);
      const double del = pa[i].aod_el - pb[j].aod_el;
      candidates.push_back({std::hypot(daz, del), i, j});
    }
  std::sort(candidates.begin(), candidates.end(),
            [](const Candidate& x, const Candidate& y) {
              if (x.dist != y.dist) return x.dist < y.dist;
              const int xmin = std::min(x.i, x.j), ymin = std::min(y.i, y.j);
              if (xmin != ymin) return xmin < ymin;
              return std::max(x.i, x.j) < std::max(y.i, y.j);
            });

  std::vector<bool> used_a(pa.size(), false), used_b(pb.size(), false);
  double sum_sq = 0.0;
  for (const auto& c : candidates) {
    if (used_a[c.i] || used_b[c.j]) continue;
    used_a[c.i] = true;
    used_b[c.j] = true;
    const auto& x = pa[c.i];
    const auto& y = pb[c.j];
    const double d_aod_az = detail::azimuth_diff(x.aod_az, y.aod_az);
    const double d_aod_el = x.aod_el - y.aod_el;
    const double d_aoa_az = detail::azimuth_diff(x.aoa_az, y.aoa_az);
    const double d_aoa_el = x.aoa_el - y.aoa_el;
    const double d_gain =
        gain_weight_per_db * (detail::gain_db(x.gain) - detail::gain_db(y.gain));
    sum_sq += d_aod_az * d_aod_az + d_aod_el * d_aod_el + d_aoa_az * d_aoa_az +
              d_aoa_el * d_aoa_el + d_gain * d_gain;
  }
  auto unmatched_norm_sq = [gain_weight_per_db](const SkeletonPath& p) {
    const double g = gain_weight_per_db * detail::gain_db(p.gain);
    return p.aod_az * p.aod_az + p.aod_el * p.aod_el + p.aoa_az * p.aoa_az +
           p.aoa_el * p.aoa_el + g * g;
  };
  for (std::size_t i = 0; i < pa.size(); ++i)
    if (!used_a[i]) sum_sq += unmatched_norm_sq(pa[i]);
  for (std::size_t j = 0; j < pb.size(); ++j)
    if (!used_b[j]) sum_sq += unmatched_norm_sq(pb[j]);
  return std::sqrt(sum_sq);
}

// ---------------------------------------------------------------------------
// Distance-threshold optimization (golden-section search)
// ---------------------------------------------------------------------------

struct ThresholdPolicy {
  double t_d = 0.0;     // skeleton distance threshold
  int u_max = 10;       // query budget
  double delta = 0.2;   // allowed Pr{U > U_max}
};

struct ThresholdObjective {
  double mean_rate = 0.0;     // mean trajectory-rate estimate at this T_D
  double prob_exceed = 0.0;   // estimated Pr{U > U_max}
};

using ThresholdEvaluator = std::function<ThresholdObjective(double)>;

struct ThresholdResult {
  double t_d = 0.0;
  double mean_rate = 0.0;
  double prob_exceed = 0.0;
};

/// Golden-section maximization of the evaluator's mean rate over
/// T_D in [0, t_hi]; candidates with Pr{U > U_max} > delta score -inf.
/// Throws InfeasibleThresholdError when no evaluated candidate is feasible.
inline ThresholdResult optimize_threshold(const ThresholdEvaluator& evaluator,
                                          double t_hi, double delta,
                                          double tol) {
  if (t_hi <= 0.0) throw ConfigError("optimize_threshold: t_hi must be positive");
  if (tol <= 0.0) throw ConfigError("optimize_threshold: tol must be positive");

  constexpr double kNegInf = -std::numeric_limits<double>::infinity();
  bool found_feasible = false;
  ThresholdResult best;

  auto score = [&](double x) {
    const ThresholdObjective obj = evaluator(x);
    if (obj.prob_exceed > delta) return kNegInf;
    if (!found_feasible || obj.mean_rate > best.mean_rate)
      best = {x, obj.mean_rate, obj.prob_exceed};
    found_feasible = true;
    return obj.mean_rate;
  };

  const double inv_phi = (std::sqrt(5.0) - 1.0) / 2.0;
  double a = 0.0, b = t_hi;
  score(a);
  score(b);
  double c = b - inv_phi * (b - a);
  double d = a + inv_phi * (b - a);
  double fc = score(c);
  double fd = score(d);
  while (b - a > tol) {
    // Infeasible candidates score -inf; a -inf/-inf tie moves the bracket
    // right, toward larger T_D where the query budget binds less.
    if (fc < fd || (fc == kNegInf && fd == kNegInf)) {
      a = c;
      c = d;
      fc = fd;
      d = a + inv_phi * (b - a);
      fd = score(d);
    } else {
      b = d;
      d = c;
      fd = fc;
      c = b - inv_phi * (b - a);
      fc = score(c);
    }
  }
  score((a + b) / 2.0);
  if (!found_feasible)
    throw InfeasibleThresholdError(
        "optimize_threshold: no candidate satisfies Pr{U > U_max} <= delta");
  return best;
}

// ---------------------------------------------------------------------------
// Path-skeleton grid database (normal list / watch list / aging)
// ---------------------------------------------------------------------------

/// Per-BS database of grid skeletons. Fresh skeletons live in the normal
/// list with an aging counter; entries older than T_Aging move to the watch
/// list and must be rebuilt before reuse.
class SkeletonDatabase {
public:
  struct Entry {
    std::shared_ptr<const PathSkeleton> skeleton;
    int aging_counter = 0;  // CIs since the skeleton was built
  };

  struct QueryResult {
    std::shared_ptr<const PathSkeleton> skeleton;  // null when no UE accepted
    bool rebuilt = false;  // rebuild_fn was invoked for this query
  };

  using RebuildFn = std::function<std::optional<PathSkeleton>(int grid_id)>;

  SkeletonDatabase(int t_aging, double grid_size_m)
      : t_aging_(t_aging), grid_size_m_(grid_size_m) {
    if (t_aging < 0) throw ConfigError("SkeletonDatabase: negative T_Aging");
    if (grid_size_m <= 0.0) throw ConfigError("SkeletonDatabase: bad grid size");
  }

  /// One CI elapses: every normal-list counter increments; entries beyond
  /// T_Aging are dropped to the watch list.
  void tick() {
    for (auto it = normal_.begin(); it != normal_.end();) {
      if (++it->second.aging_counter > t_aging_) {
        watch_.insert(it->first);
        it = normal_.erase(it);
      } else {
        ++it;
      }
    }
  }

  /// Normal-list hit returns the stored skeleton; a miss or watch-listed
  /// grid invokes rebuild_fn. A failed rebuild (no UE accepts) leaves the
  /// grid on the watch list and returns a null skeleton.
  QueryResult query(int grid_id, const RebuildFn& rebuild) {
    if (auto it = normal_.find(grid_id); it != normal_.end())
      return {it->second.skeleton, false};

    QueryResult result;
    result.rebuilt = true;
    std::optional<PathSkeleton> built = rebuild(grid_id);
    if (!built.has_value()) {
      watch_.insert(grid_id);
      return result;
    }
    built->grid_id = grid_id;
    auto stored = std::make_shared<const PathSkeleton>(std::move(*built));
    normal_[grid_id] = Entry{stored, 0};
    watch_.erase(grid_id);
    result.skeleton = std::move(stored);
    return result;
  }

  void add_to_watch(int grid_id) {
    if (!normal_.contains(grid_id)) watch_.insert(grid_id);
  }

  /// Direct insertion used when importing a snapshot.
  void restore_entry(int grid_id, PathSkeleton skeleton, int aging_counter) {
    skeleton.grid_id = grid_id;
    normal_[grid_id] =
        Entry{std::make_shared<const PathSkeleton>(std::move(skeleton)), aging_counter};
    watch_.erase(grid_id);
  }

  int t_aging() const { return t_aging_; }
  double grid_size_m() const { return grid_size_m_; }
  const std::map<int, Entry>& normal_list() const { return normal_; }
  const std::set<int>& watch_list() const { return watch_; }

private:
  int t_aging_;
  double grid_size_m_;
  std::map<int, Entry> normal_;
  std::set<int> watch_;
};

// ---------------------------------------------------------------------------
// Database snapshot (structured-text export/import)
// ---------------------------------------------------------------------------

inline nlohmann::json skeleton_to_json(const PathSkeleton& ps) {
  nlohmann::json paths = nlohmann::json::array();
  for (const auto& p : ps.paths)
    paths.push_back({{"aod_az", p.aod_az},
                     {"aod_el", p.aod_el},
                     {"aoa_az", p.aoa_az},
                     {"aoa_el", p.aoa_el},
                     {"gain", p.gain}});
  return {{"bs_id", ps.bs_id}, {"grid_id", ps.grid_id}, {"paths", paths}};
}

inline PathSkeleton skeleton_from_json(const nlohmann::json& j) {
  PathSkeleton ps;
  ps.bs_id = j.at("bs_id").get<int>();
  ps.grid_id = j.at("grid_id").get<int>();
  for (const auto& p : j.at("paths"))
    ps.paths.push_back({p.at("aod_az").get<double>(), p.at("aod_el").get<double>(),
                        p.at("aoa_az").get<double>(), p.at("aoa_el").get<double>(),
                        p.at("gain").get<double>()});
  return ps;
}

inline nlohmann::json database_snapshot(const SkeletonDatabase& db) {
  nlohmann::json normal = nlohmann::json::array();
  for (const auto& [grid_id, entry] : db.normal_list())
    normal.push_back({{"grid_id", grid_id},
                      {"aging_counter", entry.aging_counter},
                      {"skeleton", skeleton_to_json(*entry.skeleton)}});
  return {{"format", "mmhsim-skeleton-db"},
          {"version", 1},
          {"t_aging", db.t_aging()},
          {"grid_size_m", db.grid_size_m()},
          {"normal_list", normal},
          {"watch_list", db.watch_list()}};
}

inline SkeletonDatabase database_from_snapshot(const nlohmann::json& j) {
  if (j.value("format", "") != "mmhsim-skeleton-db")
    throw ConfigError("database_from_snapshot: unrecognized format");
  SkeletonDatabase db(j.at("t_aging").get<int>(), j.at("grid_size_m").get<double>());
  for (const auto& entry : j.at("normal_list")) {
    const int grid_id = entry.at("grid_id").get<int>();
    PathSkeleton ps = skeleton_from_json(entry.at("skeleton"));
    db.restore_entry(grid_id, std::move(ps), entry.at("aging_counter").get<int>());
  }
  for (const auto& g : j.at("watch_list")) db.add_to_watch(g.get<int>());
  return db;
}

}  // namespace mmhsim

#endif  // MMHSIM_SKELETON_HPP
