// Junction matching through junction-induced affine maps: L-junction
// decomposition, the exact three-point affine solve, bidirectional normalized
// patch dissimilarity, and ratio-test matching with mutual consistency.
#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <optional>
#include <vector>

#include "asj/geometry.hpp"
#include "asj/image.hpp"
#include "asj/scale.hpp"

namespace asj {

struct MatchBranch {
  double scale = 0.0;
  double orientation = 0.0;
};

/// Two-branch junction, branches in canonical order.
struct LJunction {
  Vec2 center;
  MatchBranch branch1, branch2;
  int parent = -1;  // index of the source junction
};

/// Canonical branch order: the CCW sweep from branch1 to branch2 (increasing
/// angle) crosses the interior angle smaller than pi; an exact pi tie puts the
/// smaller orientation first.
inline std::pair<MatchBranch, MatchBranch> canonical_order(MatchBranch a, MatchBranch b) {
  const double sweep = wrap_angle(b.orientation - a.orientation);
  if (std::fabs(sweep - kPi) < 1e-12)
    return a.orientation <= b.orientation ? std::make_pair(a, b) : std::make_pair(b, a);
  return sweep < kPi ? std::make_pair(a, b) : std::make_pair(b, a);
}

/// Split a junction into L-junctions: every branch pair except near-collinear
/// ones (orientations antipodal within `collinear_tol`).
inline std::vector<LJunction> decompose(const ASJunction& j, int parent_index = -1,
                                        double collinear_tol = kPi / 18.0) {
  std::vector<LJunction> out;
  for (size_t i = 0; i < j.branches.size(); ++i) {
    for (size_t k = i + 1; k < j.branches.size(); ++k) {
      const double sep = circ_dist(j.branches[i].orientation, j.branches[k].orientation);
      if (std::fabs(sep - kPi) < collinear_tol) continue;
      auto [b1, b2] = canonical_order({j.branches[i].scale, j.branches[i].orientation},
                                      {j.branches[k].scale, j.branches[k].orientation});
      out.push_back({j.center, b1, b2, parent_index});
    }
  }
  return out;
}

/// The three defining points: center and the two branch endpoints.
inline std::array<Vec2, 3> endpoints(const LJunction& l) {
  return {l.center,
          l.center + l.branch1.scale * Vec2{std::cos(l.branch1.orientation),
                                            std::sin(l.branch1.orientation)},
          l.center + l.branch2.scale * Vec2{std::cos(l.branch2.orientation),
                                            std::sin(l.branch2.orientation)}};
}

/// Plane affine map x' = A x + t, stored row-major [a11 a12 tx a21 a22 ty].
struct AffineMap {
  std::array<double, 6> h{1, 0, 0, 0, 1, 0};

  Vec2 apply(Vec2 p) const {
    return {h[0] * p.x + h[1] * p.y + h[2], h[3] * p.x + h[4] * p.y + h[5]};
  }
  Vec2 linear(Vec2 v) const { return {h[0] * v.x + h[1] * v.y, h[3] * v.x + h[4] * v.y}; }
  double det() const { return h[0] * h[4] - h[1] * h[3]; }

  std::optional<AffineMap> inverse() const {
    const double d = det();
    if (std::fabs(d) < 1e-12) return std::nullopt;
    AffineMap inv;
    inv.h[0] = h[4] / d;
    inv.h[1] = -h[1] / d;
    inv.h[3] = -h[3] / d;
    inv.h[4] = h[0] / d;
    inv.h[2] = -(inv.h[0] * h[2] + inv.h[1] * h[5]);
    inv.h[5] = -(inv.h[3] * h[2] + inv.h[4] * h[5]);
    return inv;
  }

  static AffineMap similarity(double rotation, double scale, Vec2 translation,
                              Vec2 pivot = {0.0, 0.0}) {
    AffineMap m;
    const double c = scale * std::cos(rotation), s = scale * std::sin(rotation);
    m.h = {c, -s, 0.0, s, c, 0.0};
    const Vec2 moved = m.linear(pivot);
    m.h[2] = pivot.x - moved.x + translation.x;
    m.h[5] = pivot.y - moved.y + translation.y;
    return m;
  }
};

/// Exact affine through the three point correspondences of an L-pair
/// (centers map to centers, endpoints to endpoints). Coordinates are centered
/// on the junction centers before the 2x2 solve, so the result is accurate to
/// machine precision. Degenerate (collinear) source triangles give nullopt.
inline std::optional<AffineMap> estimate_affine(const LJunction& lp, const LJunction& lq) {
  const auto src = endpoints(lp);
  const auto dst = endpoints(lq);
  const Vec2 u1 = src[1] - src[0], u2 = src[2] - src[0];
  const Vec2 v1 = dst[1] - dst[0], v2 = dst[2] - dst[0];
  const double det = u1.x * u2.y - u1.y * u2.x;
  const double scale = std::max({std::fabs(u1.x), std::fabs(u1.y), std::fabs(u2.x),
                                 std::fabs(u2.y), 1e-30});
  if (std::fabs(det) < 1e-9 * scale * scale) return std::nullopt;

  AffineMap m;
  // A [u1 u2] = [v1 v2]  =>  A = [v1 v2] [u1 u2]^{-1}
  m.h[0] = (v1.x * u2.y - v2.x * u1.y) / det;
  m.h[1] = (v2.x * u1.x - v1.x * u2.x) / det;
  m.h[3] = (v1.y * u2.y - v2.y * u1.y) / det;
  m.h[4] = (v2.y * u1.x - v1.y * u2.x) / det;
  m.h[2] = dst[0].x - (m.h[0] * src[0].x + m.h[1] * src[0].y);
  m.h[5] = dst[0].y - (m.h[3] * src[0].x + m.h[4] * src[0].y);
  return m;
}

namespace detail {

struct PatchSamples {
  std::vector<double> a, b;
  int valid = 0;
};

// Normalized one-way patch distance: sample a patch_size^2 grid around
// `center` in `src`, map each sample through `map` into `dst`, keep samples
// inside both images, then compare after zero-mean unit-norm normalization.
inline std::optional<double> one_way_patch_distance(const GrayImage& src, const GrayImage& dst,
                                                    Vec2 center, const AffineMap& map,
                                                    int patch_size, double min_overlap) {
  const int half = patch_size / 2;
  std::vector<double> a, b;
  a.reserve(static_cast<size_t>(patch_size) * patch_size);
  b.reserve(a.capacity());
  for (int dy = -half; dy <= half; ++dy) {
    for (int dx = -half; dx <= half; ++dx) {
      const Vec2 ps{center.x + dx, center.y + dy};
      if (ps.x < 0.0 || ps.x > src.width() - 1.0 || ps.y < 0.0 || ps.y > src.height() - 1.0)
        continue;
      const Vec2 qs = map.apply(ps);
      if (qs.x < 0.0 || qs.x > dst.width() - 1.0 || qs.y < 0.0 || qs.y > dst.height() - 1.0)
        continue;
      a.push_back(src.sample_bilinear(ps.x, ps.y));
      b.push_back(dst.sample_bilinear(qs.x, qs.y));
    }
  }
  const double needed = min_overlap * patch_size * patch_size;
  if (static_cast<double>(a.size()) < needed) return std::nullopt;

  auto normalize = [](std::vector<double>& v) {
    double mean = 0.0;
    for (double x : v) mean += x;
    mean /= static_cast<double>(v.size());
    double nrm = 0.0;
    for (double& x : v) {
      x -= mean;
      nrm += x * x;
    }
    nrm = std::sqrt(nrm);
    if (nrm < 1e-12) return false;
    for (double& x : v) x /= nrm;
    return true;
  };
  const bool ok_a = normalize(a), ok_b = normalize(b);
  if (!ok_a || !ok_b) return 2.0;  // flat patch carries no signal
  double ssd = 0.0;
  for (size_t i = 0; i < a.size(); ++i) {
    const double d = a[i] - b[i];
    ssd += d * d;
  }
  return ssd;
}

}  // namespace detail

/// Bidirectional dissimilarity of an L-pair under its induced affine:
/// D(P->Q under H) + D(Q->P under H^{-1}). Symmetric by construction. Returns
/// nullopt when either direction has less than `min_overlap` of the patch
/// inside both images, or the map is not invertible.
inline std::optional<double> patch_dissimilarity(const GrayImage& img_p, const GrayImage& img_q,
                                                 const LJunction& lp, const LJunction& lq,
                                                 const AffineMap& map, int patch_size = 33,
                                                 double min_overlap = 0.6) {
  if (patch_size < 3 || patch_size % 2 == 0)
    throw std::invalid_argument("patch size must be odd and >= 3");
  const auto inv = map.inverse();
  if (!inv) return std::nullopt;
  const auto fwd =
      detail::one_way_patch_distance(img_p, img_q, lp.center, map, patch_size, min_overlap);
  if (!fwd) return std::nullopt;
  const auto bwd =
      detail::one_way_patch_distance(img_q, img_p, lq.center, *inv, patch_size, min_overlap);
  if (!bwd) return std::nullopt;
  return *fwd + *bwd;
}

struct MatchPair {
  int index_p = -1;  // into the decomposed L list of P
  int index_q = -1;
  double dissimilarity = 0.0;
  AffineMap map;  // P -> Q
};

struct MatchParams {
  double ratio = 1.5;  // second-best / best acceptance threshold
  int patch_size = 33;
  double min_overlap = 0.6;
  bool mutual = true;
  double collinear_tol = kPi / 18.0;
};

/// Match two junction sets: decompose into L-junctions, score every pair by
/// the bidirectional patch dissimilarity under the pair's affine, then accept
/// a pair when the runner-up is at least `ratio` times worse and (optionally)
/// the choice is mutual. Output sorted by dissimilarity.
inline std::vector<MatchPair> match(const std::vector<ASJunction>& junctions_p,
                                    const std::vector<ASJunction>& junctions_q,
                                    const GrayImage& img_p, const GrayImage& img_q,
                                    const MatchParams& params = {},
                                    std::vector<LJunction>* out_lp = nullptr,
                                    std::vector<LJunction>* out_lq = nullptr) {
  std::vector<LJunction> lp, lq;
  for (size_t i = 0; i < junctions_p.size(); ++i) {
    auto d = decompose(junctions_p[i], static_cast<int>(i), params.collinear_tol);
    lp.insert(lp.end(), d.begin(), d.end());
  }
  for (size_t i = 0; i < junctions_q.size(); ++i) {
    auto d = decompose(junctions_q[i], static_cast<int>(i), params.collinear_tol);
    lq.insert(lq.end(), d.begin(), d.end());
  }

  const size_t n = lp.size(), m = lq.size();
  const double inf = std::numeric_limits<double>::infinity();
  std::vector<double> cost(n * m, inf);
  std::vector<AffineMap> maps(n * m);
  parallel_for(0, static_cast<int>(n), [&](int i) {
    for (size_t j = 0; j < m; ++j) {
      const auto map = estimate_affine(lp[i], lq[j]);
      if (!map) continue;
      const auto d = patch_dissimilarity(img_p, img_q, lp[i], lq[j], *map, params.patch_size,
                                         params.min_overlap);
      if (!d) continue;
      cost[static_cast<size_t>(i) * m + j] = *d;
      maps[static_cast<size_t>(i) * m + j] = *map;
    }
  });

  auto best_of_row = [&](size_t i) {
    int jbest = -1;
    double best = inf, second = inf;
    for (size_t j = 0; j < m; ++j) {
      const double c = cost[i * m + j];
      if (c < best) {
        second = best;
        best = c;
        jbest = static_cast<int>(j);
      } else if (c < second) {
        second = c;
      }
    }
    return std::tuple<int, double, double>(jbest, best, second);
  };
  auto best_of_col = [&](size_t j) {
    int ibest = -1;
    double best = inf;
    for (size_t i = 0; i < n; ++i) {
      const double c = cost[i * m + j];
      if (c < best) {
        best = c;
        ibest = static_cast<int>(i);
      }
    }
    return ibest;
  };

  std::vector<MatchPair> out;
  for (size_t i = 0; i < n; ++i) {
    auto [j, best, second] = best_of_row(i);
    if (j < 0) continue;
    const bool distinct = std::isinf(second) ? best < inf
                          : best > 0.0       ? second / best >= params.ratio
                                             : second > 0.0;
    if (!distinct) continue;
    if (params.mutual && best_of_col(static_cast<size_t>(j)) != static_cast<int>(i)) continue;
    out.push_back({static_cast<int>(i), j, best, maps[i * m + j]});
  }
  std::stable_sort(out.begin(), out.end(), [](const MatchPair& a, const MatchPair& b) {
    return a.dissimilarity < b.dissimilarity;
  });

  if (out_lp) *out_lp = std::move(lp);
  if (out_lq) *out_lq = std::move(lq);
  return out;
}

}  // namespace asj
