// Benchmark utilities: the pure-noise false-alarm trial that validates the
// scale test's calibration, detection-vs-reference correspondence with
// per-branch error accounting, repeatability, and matching metrics under a
// known affine map.
#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <optional>
#include <tuple>
#include <vector>

#include "asj/detect.hpp"
#include "asj/matching.hpp"
#include "asj/scale.hpp"
#include "asj/synthetic.hpp"

namespace asj {

struct TrialParams {
  double epsilon = 1.0;
  double tau = 1.0;
  int local_radius = 5;
  double r_start = 4.0;
};

/// False-alarm trial for the radial scale test. On a pure Gaussian noise
/// image every pixel (inset by a small margin) is probed with an independent
/// random orientation, and we count how many sites report any scale at all.
/// With a calibrated null the expected count stays below epsilon.
inline int false_alarm_trial(int width, int height, uint64_t seed, const TrialParams& p = {}) {
  const NoiseImage noise = noise_image(width, height, seed);
  const GradientField f = compute_gradient(noise.image, noise.scale);
  const LocalJunctionField field = local_junction_field(f, p.local_radius, p.epsilon, p.tau);

  ScaleParams sp;
  sp.epsilon = p.epsilon;
  sp.tau = p.tau;

  const int margin = static_cast<int>(std::ceil(p.r_start)) + 2;
  const int xs = margin, xe = width - margin, ys = margin, ye = height - margin;
  if (xs >= xe || ys >= ye) throw std::invalid_argument("trial image too small for margin");

  // Orientations are drawn sequentially so the trial is thread-count
  // independent; the probes themselves are read-only and run in parallel.
  Rng rng(seed ^ 0x9e3779b97f4a7c15ull);
  const int cols = xe - xs;
  std::vector<double> thetas(static_cast<size_t>(ye - ys) * cols);
  for (double& t : thetas) t = rng.uniform(0.0, kTwoPi);

  std::vector<int> row_hits(ye - ys, 0);
  parallel_for(ys, ye, [&](int y) {
    int hits = 0;
    for (int x = xs; x < xe; ++x) {
      const double theta = thetas[static_cast<size_t>(y - ys) * cols + (x - xs)];
      if (estimate_scale(field, {static_cast<double>(x), static_cast<double>(y)}, theta,
                         p.r_start, sp))
        ++hits;
    }
    row_hits[y - ys] = hits;
  });
  return std::accumulate(row_hits.begin(), row_hits.end(), 0);
}

/// Minimal junction view shared by detections and ground truth.
struct EvalJunction {
  Vec2 center;
  std::vector<GtBranch> branches;
};

inline EvalJunction to_eval(const ASJunction& j) {
  EvalJunction e;
  e.center = j.center;
  for (const auto& b : j.branches) e.branches.push_back({b.orientation, b.scale});
  return e;
}

inline EvalJunction to_eval(const GtJunction& j) { return {j.center, j.branches}; }

template <typename T>
std::vector<EvalJunction> to_eval(const std::vector<T>& js) {
  std::vector<EvalJunction> out;
  out.reserve(js.size());
  for (const auto& j : js) out.push_back(to_eval(j));
  return out;
}

struct CorrespondenceCriteria {
  double center_tol = 3.0;
  double scale_tol = 3.0;
  double angle_tol = kPi / 20.0;
};

struct BranchCorrespondence {
  double angle_error = 0.0;  // to the nearest-orientation branch of the partner
  double scale_error = 0.0;  // absolute, on that same pairing
};

struct JunctionCorrespondence {
  int index_a = -1, index_b = -1;
  double center_distance = 0.0;
  bool branch_count_ok = false;
  bool angle_ok = false;  // every a-branch within angle_tol of some b-branch
  bool scale_ok = false;
  bool full_ok = false;
  std::vector<BranchCorrespondence> branches;  // one entry per a-branch
};

struct CorrespondenceReport {
  std::vector<JunctionCorrespondence> assigned;
  int count_a = 0, count_b = 0;

  int full_ok_count() const {
    int n = 0;
    for (const auto& m : assigned) n += m.full_ok;
    return n;
  }
};

/// Greedy one-to-one assignment by center distance (closest pairs first,
/// within center_tol), then one-sided branch checks: each a-branch is paired
/// with the b-branch of nearest orientation, and the junction passes when all
/// its branch errors stay inside the criteria.
inline CorrespondenceReport correspond(const std::vector<EvalJunction>& a,
                                       const std::vector<EvalJunction>& b,
                                       const CorrespondenceCriteria& crit = {}) {
  CorrespondenceReport rep;
  rep.count_a = static_cast<int>(a.size());
  rep.count_b = static_cast<int>(b.size());

  std::vector<std::tuple<double, int, int>> candidates;
  for (size_t i = 0; i < a.size(); ++i)
    for (size_t j = 0; j < b.size(); ++j) {
      const double d = dist(a[i].center, b[j].center);
      if (d <= crit.center_tol) candidates.emplace_back(d, static_cast<int>(i),
                                                        static_cast<int>(j));
    }
  std::sort(candidates.begin(), candidates.end());

  std::vector<char> used_a(a.size(), 0), used_b(b.size(), 0);
  for (const auto& [d, i, j] : candidates) {
    if (used_a[i] || used_b[j]) continue;
    used_a[i] = used_b[j] = 1;

    JunctionCorrespondence m;
    m.index_a = i;
    m.index_b = j;
    m.center_distance = d;
    m.branch_count_ok = a[i].branches.size() == b[j].branches.size();
    m.angle_ok = m.scale_ok = !a[i].branches.empty() && !b[j].branches.empty();
    for (const auto& ba : a[i].branches) {
      BranchCorrespondence bc;
      bc.angle_error = std::numeric_limits<double>::infinity();
      for (const auto& bb : b[j].branches) {
        const double ae = circ_dist(ba.orientation, bb.orientation);
        if (ae < bc.angle_error) {
          bc.angle_error = ae;
          bc.scale_error = std::fabs(ba.scale - bb.scale);
        }
      }
      m.angle_ok = m.angle_ok && bc.angle_error <= crit.angle_tol;
      m.scale_ok = m.scale_ok && bc.scale_error <= crit.scale_tol;
      m.branches.push_back(bc);
    }
    m.full_ok = m.angle_ok && m.scale_ok;
    rep.assigned.push_back(std::move(m));
  }
  return rep;
}

/// Fraction of a-junctions that found a fully consistent partner in b.
inline double repeatability(const std::vector<EvalJunction>& a,
                            const std::vector<EvalJunction>& b,
                            const CorrespondenceCriteria& crit = {}) {
  if (a.empty()) return 0.0;
  const auto rep = correspond(a, b, crit);
  return static_cast<double>(rep.full_ok_count()) / static_cast<double>(a.size());
}

/// Repeatability under a known rescaling by s: a-junction centers are mapped
/// through s before the greedy center assignment, and an assigned pair counts
/// only when branch counts agree and the cross-junction max-min angular and
/// scale errors stay inside the criteria (scales compare as |s*r - r'|; the
/// angular and scale max-min run independently). The rate is over all of a,
/// so unassigned junctions count as failures.
inline double repeatability(const std::vector<EvalJunction>& a,
                            const std::vector<EvalJunction>& b, double s,
                            const CorrespondenceCriteria& crit = {}) {
  if (a.empty()) return 0.0;
  std::vector<EvalJunction> mapped = a;
  for (EvalJunction& j : mapped) j.center = s * j.center;
  const CorrespondenceReport rep = correspond(mapped, b, crit);
  int good = 0;
  for (const auto& m : rep.assigned) {
    const auto& ba = a[m.index_a].branches;
    const auto& bb = b[m.index_b].branches;
    if (ba.size() != bb.size() || ba.empty()) continue;
    double worst_angle = 0.0, worst_scale = 0.0;
    for (const GtBranch& x : ba) {
      double best_angle = std::numeric_limits<double>::infinity(), best_scale = best_angle;
      for (const GtBranch& y : bb) {
        best_angle = std::min(best_angle, circ_dist(x.orientation, y.orientation));
        best_scale = std::min(best_scale, std::fabs(s * x.scale - y.scale));
      }
      worst_angle = std::max(worst_angle, best_angle);
      worst_scale = std::max(worst_scale, best_scale);
    }
    if (worst_angle <= crit.angle_tol && worst_scale <= crit.scale_tol) ++good;
  }
  return static_cast<double>(good) / static_cast<double>(a.size());
}

struct MatchMetrics {
  int correct = 0;
  int total = 0;      // matches reported
  int matchable = 0;  // L-junctions in P with a consistent partner under the map

  double precision() const { return total > 0 ? double(correct) / total : 0.0; }
  double recall() const { return matchable > 0 ? double(correct) / matchable : 0.0; }
};

namespace detail {

inline bool l_pair_consistent(const LJunction& lp, const LJunction& lq, const AffineMap& gt,
                              double center_tol, double angle_tol) {
  if (dist(gt.apply(lp.center), lq.center) > center_tol) return false;
  auto mapped_angle = [&](double theta) {
    const Vec2 v = gt.linear({std::cos(theta), std::sin(theta)});
    return ray_angle({0.0, 0.0}, v);
  };
  const double e1 = circ_dist(mapped_angle(lp.branch1.orientation), lq.branch1.orientation);
  const double e2 = circ_dist(mapped_angle(lp.branch2.orientation), lq.branch2.orientation);
  return e1 <= angle_tol && e2 <= angle_tol;
}

}  // namespace detail

/// Score reported matches against a known map from image P to image Q: a
/// match is correct when the mapped center lands on its partner and both
/// branch orientations transport consistently. `matchable` counts P-side
/// L-junctions for which any consistent partner exists, bounding recall.
inline MatchMetrics match_metrics(const std::vector<MatchPair>& matches,
                                  const std::vector<LJunction>& lp,
                                  const std::vector<LJunction>& lq, const AffineMap& gt_map,
                                  double center_tol = 3.0, double angle_tol = kPi / 20.0) {
  MatchMetrics mm;
  mm.total = static_cast<int>(matches.size());
  for (const auto& m : matches)
    if (detail::l_pair_consistent(lp[m.index_p], lq[m.index_q], gt_map, center_tol, angle_tol))
      ++mm.correct;
  for (const auto& p : lp)
    for (const auto& q : lq)
      if (detail::l_pair_consistent(p, q, gt_map, center_tol, angle_tol)) {
        ++mm.matchable;
        break;
      }
  return mm;
}

}  // namespace asj
