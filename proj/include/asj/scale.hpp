// Anisotropic branch scale estimation: radial derivative of branch strength
// over the local junction field, its a-contrario meaningfulness test, the
// golden-section orientation refinement, and the full detector pipeline.
#pragma once

#include <algorithm>
#include <cmath>
#include <optional>
#include <tuple>
#include <vector>

#include "asj/detect.hpp"
#include "asj/distribution.hpp"
#include "asj/geometry.hpp"
#include "asj/image.hpp"
#include "asj/parallel.hpp"
#include "asj/sector.hpp"

namespace asj {

struct ScaleParams {
  double epsilon = 1.0;
  double tau = 1.0;
  double n_tests = 0.0;    // 0 = sqrt(width * height)
  double max_scale = 0.0;  // 0 = image diagonal
  // Ablation switch: fold the Gaussian boundary-term correction of the radial
  // derivative into the null. The default drops the boundary terms.
  bool boundary_terms = false;
};

/// Modified pairwise strength: the local-junction response at q whose
/// orientation is nearest to the branch direction, weighted by how well that
/// response aligns with the ray p -> q. Zero when q holds no responses.
inline double modified_pairwise_strength(const LocalJunctionField& field, Vec2 p, PixelCoord q,
                                         double theta) {
  if (!field.in_bounds(q.x, q.y)) return 0.0;
  const auto responses = field.at(q.x, q.y);
  if (responses.empty()) return 0.0;
  const LocalResponse* pick = &responses[0];
  double best = circ_dist(responses[0].theta, theta);
  for (const LocalResponse& r : responses.subspan(1)) {
    const double d = circ_dist(r.theta, theta);
    if (d < best) {
      best = d;
      pick = &r;
    }
  }
  const double alpha = ray_angle(p, {static_cast<double>(q.x), static_cast<double>(q.y)});
  return pick->omega * alignment_factor(pick->theta - alpha);
}

/// Arc sample count: samples at most one pixel apart along the 2*tau arc.
inline int arc_sample_count(double tau) {
  return std::max(3, static_cast<int>(std::ceil(2.0 * tau)));
}

/// Radial derivative of the branch strength at radius r: the sum of modified
/// pairwise strengths over m samples of the sector's outer arc (the interior
/// boundary terms are dropped). Samples land on nearest integer pixels;
/// out-of-bounds samples contribute zero.
inline double radial_derivative(const LocalJunctionField& field, Vec2 p, double r, double theta,
                                double tau = 1.0) {
  if (r < 1.0) throw std::invalid_argument("radius must be >= 1");
  const int m = arc_sample_count(tau);
  const double delta = sector_half_width(r, tau);
  double acc = 0.0;
  for (int i = 0; i < m; ++i) {
    const double psi = theta - delta + (2.0 * delta * i) / (m - 1);
    const PixelCoord q{static_cast<int>(std::lround(p.x + r * std::cos(psi))),
                       static_cast<int>(std::lround(p.y + r * std::sin(psi)))};
    acc += modified_pairwise_strength(field, p, q, theta);
  }
  return acc;
}

/// P{sum of m modified-null terms >= derivative}.
inline double branch_probability(double derivative, int m) {
  return modified_convolved(m).tail(derivative);
}

struct RadialProfile {
  std::vector<double> radius, derivative, probability, nfa_value;
};

struct ScaleEstimate {
  double scale = 0.0;
  double worst_nfa = 0.0;  // max NFA over the accepted radii
  RadialProfile trace;
};

namespace detail {

inline TabulatedDistribution boundary_adjusted_null(int m, double r, double tau) {
  const int k = std::max(1, static_cast<int>(std::lround(r)));  // 1-px radial sampling
  const auto [b_mean, b_var] = derivative_gaussian_params(r, k, tau);
  return convolve(modified_convolved(m),
                  gaussian_tabulated(b_mean, b_var, modified_pdf().grid_step()));
}

}  // namespace detail

/// Scan radii r = r_start, r_start + 1, ... and keep going while
/// NFA(r) = n_tests * P{S_m >= derivative(r)} stays <= epsilon. The branch
/// scale is the last accepted radius, sharpened by bisecting the interval up
/// to the first rejected radius; if the very first radius fails the branch is
/// rejected (nullopt).
inline std::optional<ScaleEstimate> estimate_scale(const LocalJunctionField& field, Vec2 p,
                                                   double theta, double r_start,
                                                   const ScaleParams& params = {}) {
  if (r_start < 1.0) throw std::invalid_argument("start radius must be >= 1");
  const double n_tests = params.n_tests > 0.0
                             ? params.n_tests
                             : std::sqrt(static_cast<double>(field.width()) * field.height());
  const double max_r = params.max_scale > 0.0
                           ? params.max_scale
                           : std::hypot(static_cast<double>(field.width()),
                                        static_cast<double>(field.height()));
  const int m = arc_sample_count(params.tau);

  auto nfa_at = [&](double r) {
    const double d = radial_derivative(field, p, r, theta, params.tau);
    double prob;
    if (params.boundary_terms) {
      prob = detail::boundary_adjusted_null(m, r, params.tau).tail(d);
    } else {
      prob = branch_probability(d, m);
    }
    return std::tuple{d, prob, nfa(n_tests, prob)};
  };

  ScaleEstimate est;
  bool any = false, rejected = false;
  for (double r = r_start; r <= max_r; r += 1.0) {
    const auto [d, prob, value] = nfa_at(r);
    est.trace.radius.push_back(r);
    est.trace.derivative.push_back(d);
    est.trace.probability.push_back(prob);
    est.trace.nfa_value.push_back(value);
    if (value > params.epsilon) {
      rejected = true;
      break;
    }
    est.scale = r;
    est.worst_nfa = std::max(est.worst_nfa, value);
    any = true;
  }
  if (!any) return std::nullopt;
  if (rejected) {
    double lo = est.scale, hi = est.scale + 1.0;
    for (int it = 0; it < 6; ++it) {
      const double mid = 0.5 * (lo + hi);
      const double value = std::get<2>(nfa_at(mid));
      if (value <= params.epsilon) {
        lo = mid;
        est.worst_nfa = std::max(est.worst_nfa, value);
      } else {
        hi = mid;
      }
    }
    est.scale = lo;
  }
  return est;
}

/// Golden-section maximization of the raw branch strength at the currently
/// estimated scale, over [theta0 - pi/20, theta0 + pi/20] to tolerance pi/720.
/// Falls back to theta0 when no probe improves on it.
inline double refine_orientation(const GradientField& f, const LocalJunctionField& field, Vec2 p,
                                 double theta0, double r_start, const ScaleParams& params = {},
                                 double half_width = kPi / 20.0, double tol = kPi / 720.0) {
  auto objective = [&](double theta) -> double {
    const auto est = estimate_scale(field, p, wrap_angle(theta), r_start, params);
    if (!est) return -std::numeric_limits<double>::infinity();
    return branch_strength(f, SectorSpec{p, est->scale, wrap_angle(theta), params.tau});
  };

  const double inv_phi = (std::sqrt(5.0) - 1.0) / 2.0;
  double a = theta0 - half_width, b = theta0 + half_width;
  double c = b - inv_phi * (b - a), d = a + inv_phi * (b - a);
  double fc = objective(c), fd = objective(d);
  while (b - a > tol) {
    if (fc >= fd) {
      b = d;
      d = c;
      fd = fc;
      c = b - inv_phi * (b - a);
      fc = objective(c);
    } else {
      a = c;
      c = d;
      fc = fd;
      d = a + inv_phi * (b - a);
      fd = objective(d);
    }
  }
  const double theta_star = wrap_angle(0.5 * (a + b));
  if (objective(theta_star) > objective(theta0)) return theta_star;
  return wrap_angle(theta0);
}

struct AsjBranch {
  double scale = 0.0;
  double orientation = 0.0;
  double nfa = 0.0;  // worst accepted NFA along the radial scan
};

namespace detail {

// One branch's support summarized as a weighted line: the centroid of the
// local responses backing the branch and their principal axis, oriented away
// from the junction center. line_ok is false when the support is too round
// (or too weak) to define a direction.
struct SupportLine {
  Vec2 point{0.0, 0.0};
  Vec2 dir{0.0, 0.0};
  double weight = 0.0;
  bool line_ok = false;
};

// Small radii open the scan wedge very wide; cap the cone used for the
// support fit so neighbouring branches cannot leak in near the center.
inline constexpr double kSupportConeCap = 0.35;

inline SupportLine branch_support_line(const LocalJunctionField& field, Vec2 p, double theta,
                                       double scale, double tau) {
  SupportLine out;
  const int m = arc_sample_count(tau);
  double sw = 0.0, sx = 0.0, sy = 0.0, sxx = 0.0, sxy = 0.0, syy = 0.0;
  for (double r = 1.0; r <= scale + 0.5; r += 1.0) {
    const double delta = std::min(sector_half_width(r, tau), kSupportConeCap);
    for (int i = 0; i < m; ++i) {
      const double psi = theta - delta + (2.0 * delta * i) / (m - 1);
      const PixelCoord q{static_cast<int>(std::lround(p.x + r * std::cos(psi))),
                         static_cast<int>(std::lround(p.y + r * std::sin(psi)))};
      const double w = modified_pairwise_strength(field, p, q, theta);
      if (w <= 0.0) continue;
      const double dx = q.x - p.x, dy = q.y - p.y;
      sw += w;
      sx += w * dx;
      sy += w * dy;
      sxx += w * dx * dx;
      sxy += w * dx * dy;
      syy += w * dy * dy;
    }
  }
  if (sw <= 0.0) return out;
  const double cx = sx / sw, cy = sy / sw;
  out.point = {p.x + cx, p.y + cy};
  out.weight = sw;
  const double vxx = sxx / sw - cx * cx;
  const double vxy = sxy / sw - cx * cy;
  const double vyy = syy / sw - cy * cy;
  const double half_tr = 0.5 * (vxx + vyy);
  const double disc = std::sqrt(std::max(half_tr * half_tr - (vxx * vyy - vxy * vxy), 0.0));
  const double l1 = half_tr + disc, l2 = half_tr - disc;
  if (l1 <= 1e-9 || l1 < 8.0 * std::max(l2, 0.0)) return out;
  Vec2 u = std::fabs(vxy) > 1e-12 ? Vec2{l1 - vyy, vxy}
                                  : (vxx >= vyy ? Vec2{1.0, 0.0} : Vec2{0.0, 1.0});
  const double n = norm(u);
  if (n <= 0.0) return out;
  u = {u.x / n, u.y / n};
  if (u.x * cx + u.y * cy < 0.0) u = {-u.x, -u.y};
  out.dir = u;
  out.line_ok = true;
  return out;
}

// Weighted least-squares point nearest to all usable support lines. Needs two
// lines separated by at least ~10 degrees; anything flatter slides along one
// line and the center must stay put.
inline std::optional<Vec2> support_center(const std::vector<SupportLine>& lines) {
  double max_sin = 0.0;
  for (size_t i = 0; i < lines.size(); ++i) {
    if (!lines[i].line_ok) continue;
    for (size_t j = i + 1; j < lines.size(); ++j) {
      if (!lines[j].line_ok) continue;
      const double cross = lines[i].dir.x * lines[j].dir.y - lines[i].dir.y * lines[j].dir.x;
      max_sin = std::max(max_sin, std::fabs(cross));
    }
  }
  if (max_sin < std::sin(kPi / 18.0)) return std::nullopt;
  double a11 = 0.0, a12 = 0.0, a22 = 0.0, b1 = 0.0, b2 = 0.0;
  for (const SupportLine& l : lines) {
    if (!l.line_ok) continue;
    const double nx = -l.dir.y, ny = l.dir.x;
    const double d = nx * l.point.x + ny * l.point.y;
    a11 += l.weight * nx * nx;
    a12 += l.weight * nx * ny;
    a22 += l.weight * ny * ny;
    b1 += l.weight * nx * d;
    b2 += l.weight * ny * d;
  }
  const double det = a11 * a22 - a12 * a12;
  if (det <= 1e-12 * (a11 + a22) * (a11 + a22)) return std::nullopt;
  return Vec2{(a22 * b1 - a12 * b2) / det, (a11 * b2 - a12 * b1) / det};
}

}  // namespace detail

/// Anisotropic-scale junction: center plus per-branch scale and orientation.
struct ASJunction {
  Vec2 center;
  double seed_radius = 0.0;
  std::vector<AsjBranch> branches;  // ascending orientation
};

struct AsjParams {
  double epsilon = 1.0;
  double tau = 1.0;
  int local_radius = 5;
  int seed_radius_min = 4;
  int seed_radius_max = 12;
  int max_branches = 8;
  double max_scale = 0.0;  // 0 = image diagonal
  double n_tests = 0.0;    // 0 = sqrt(width * height)
  bool boundary_terms = false;
  double refine_half_width = kPi / 20.0;
  double refine_tol = kPi / 720.0;
  double edge_tol = kPi / 18.0;       // reject 2-branch antipodal (edge) shapes
  double field_min_span = kPi / 2.0;  // response-span gate for the pipeline's field
  std::optional<double> noise_scale;  // gradient calibration override

  DetectionParams seed_params() const {
    DetectionParams d;
    d.epsilon = epsilon;
    d.tau = tau;
    d.seed_radius_min = seed_radius_min;
    d.seed_radius_max = seed_radius_max;
    d.max_branches = max_branches;
    d.edge_tol = edge_tol;
    return d;
  }
  ScaleParams scale_params() const {
    ScaleParams s;
    s.epsilon = epsilon;
    s.tau = tau;
    s.n_tests = n_tests;
    s.max_scale = max_scale;
    s.boundary_terms = boundary_terms;
    return s;
  }
};

/// Full pipeline: gradient -> isotropic seeds -> local junction field ->
/// per-branch orientation refinement and scale scan. Branches whose scan
/// rejects every radius are dropped; junctions keep >= 2 branches or vanish.
inline std::vector<ASJunction> detect_asj(const GrayImage& img, const AsjParams& params = {}) {
  const GradientField f = compute_gradient(img, params.noise_scale);
  const auto seeds = detect_isotropic(f, params.seed_params());
  const auto field = local_junction_field(f, params.local_radius, params.epsilon, params.tau,
                                          params.field_min_span);
  const ScaleParams sp = params.scale_params();

  std::vector<std::optional<ASJunction>> slots(seeds.size());
  parallel_for(0, static_cast<int>(seeds.size()), [&](int si) {
    const IsotropicJunction& seed = seeds[si];
    ASJunction out;
    out.center = seed.center;
    out.seed_radius = seed.radius;
    for (double theta0 : seed.orientations) {
      const double theta = refine_orientation(f, field, seed.center, theta0, seed.radius, sp,
                                              params.refine_half_width, params.refine_tol);
      const auto est = estimate_scale(field, seed.center, theta, seed.radius, sp);
      if (!est) continue;
      out.branches.push_back({est->scale, theta, est->worst_nfa});
    }

    // Support polish. Discrete seeds on thin strokes land a couple of pixels
    // off the true center, which skews every orientation by more than the
    // refinement window can recover. Re-fit each branch's support line, pull
    // the center to the weighted intersection of the lines, read orientations
    // off the fitted axes, and re-scan the scales from there.
    for (int pass = 0; pass < 2 && out.branches.size() >= 2; ++pass) {
      std::vector<detail::SupportLine> lines(out.branches.size());
      for (size_t i = 0; i < out.branches.size(); ++i)
        lines[i] = detail::branch_support_line(field, out.center, out.branches[i].orientation,
                                               out.branches[i].scale, params.tau);
      Vec2 center = out.center;
      if (const auto c = detail::support_center(lines)) {
        if (dist(*c, seed.center) <= 1.5 * std::max(seed.radius, 1.0)) center = *c;
      }
      std::vector<AsjBranch> polished;
      for (size_t i = 0; i < out.branches.size(); ++i) {
        double theta = out.branches[i].orientation;
        if (lines[i].line_ok) {
          Vec2 u = lines[i].dir;
          const Vec2 away{lines[i].point.x - center.x, lines[i].point.y - center.y};
          if (u.x * away.x + u.y * away.y < 0.0) u = {-u.x, -u.y};
          theta = wrap_angle(std::atan2(u.y, u.x));
        }
        const auto est = estimate_scale(field, center, theta, seed.radius, sp);
        if (!est) continue;
        polished.push_back({est->scale, theta, est->worst_nfa});
      }
      out.center = center;
      out.branches = std::move(polished);
    }

    std::sort(out.branches.begin(), out.branches.end(),
              [](const AsjBranch& a, const AsjBranch& b) { return a.orientation < b.orientation; });
    // Refinement and polish can pull distinct seed directions onto the same
    // branch; keep the more meaningful one.
    for (size_t i = 0; i + 1 < out.branches.size();) {
      if (circ_dist(out.branches[i].orientation, out.branches[i + 1].orientation) < kPi / 36.0) {
        out.branches.erase(out.branches.begin() +
                           (out.branches[i].nfa <= out.branches[i + 1].nfa ? i + 1 : i));
      } else {
        ++i;
      }
    }
    if (out.branches.size() >= 2 &&
        circ_dist(out.branches.front().orientation, out.branches.back().orientation) <
            kPi / 36.0) {
      out.branches.erase(out.branches.front().nfa <= out.branches.back().nfa
                             ? out.branches.end() - 1
                             : out.branches.begin());
    }
    if (out.branches.size() < 2) return;
    // Two branches running along nearly the same line (antipodal or nearly
    // parallel) describe a single stroke seen off-axis, not a junction.
    if (out.branches.size() == 2) {
      const double d = circ_dist(out.branches[0].orientation, out.branches[1].orientation);
      if (std::min(d, kPi - d) < kPi / 6.0) return;
    }
    slots[si] = std::move(out);
  });

  std::vector<ASJunction> all;
  for (auto& s : slots)
    if (s) all.push_back(std::move(*s));

  // Polished centers from distinct seeds can converge onto the same junction;
  // keep the one with more branches, then the more meaningful one.
  auto worst_nfa = [](const ASJunction& j) {
    double worst = 0.0;
    for (const AsjBranch& b : j.branches) worst = std::max(worst, b.nfa);
    return worst;
  };
  std::vector<size_t> order(all.size());
  for (size_t i = 0; i < order.size(); ++i) order[i] = i;
  std::stable_sort(order.begin(), order.end(), [&](size_t a, size_t b) {
    if (all[a].branches.size() != all[b].branches.size())
      return all[a].branches.size() > all[b].branches.size();
    return worst_nfa(all[a]) < worst_nfa(all[b]);
  });
  std::vector<char> drop(all.size(), 0);
  for (size_t i = 0; i < order.size(); ++i) {
    if (drop[order[i]]) continue;
    for (size_t j = i + 1; j < order.size(); ++j)
      if (!drop[order[j]] && dist(all[order[i]].center, all[order[j]].center) <= 3.0)
        drop[order[j]] = 1;
  }
  std::vector<ASJunction> out;
  for (size_t i = 0; i < all.size(); ++i)
    if (!drop[i]) out.push_back(std::move(all[i]));
  std::stable_sort(out.begin(), out.end(), [](const ASJunction& a, const ASJunction& b) {
    return a.center.y != b.center.y ? a.center.y < b.center.y : a.center.x < b.center.x;
  });
  return out;
}

}  // namespace asj
