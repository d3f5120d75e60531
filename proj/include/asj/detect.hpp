// Isotropic junction detection (seed stage) and the local junction field the
// anisotropic scale search runs on.
#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <span>
#include <vector>

#include "asj/distribution.hpp"
#include "asj/geometry.hpp"
#include "asj/image.hpp"
#include "asj/parallel.hpp"
#include "asj/sector.hpp"

namespace asj {

struct DetectionParams {
  double epsilon = 1.0;
  double tau = 1.0;
  int orientation_bins = 72;  // pi/36 sweep
  int seed_radius_min = 4;
  int seed_radius_max = 12;
  int local_radius = 5;  // fixed radius of the local junction field
  int max_branches = 8;
  // Two-branch candidates whose orientations are antipodal within this
  // tolerance are interior edge pixels, not junctions.
  double edge_tol = kPi / 18.0;
};

/// Seed junction: center with the scale of its shortest branch.
struct IsotropicJunction {
  Vec2 center;
  double radius = 0.0;
  std::vector<double> orientations;  // ascending, [0, 2*pi)
  double strength = 0.0;
  double nfa = 0.0;
  double log10_nfa = 0.0;
};

namespace detail {

struct DiscOffset {
  int dx, dy;
  double dist;
  double alpha;
  double cos_a, sin_a;
};

inline std::vector<DiscOffset> disc_offsets(double radius) {
  std::vector<DiscOffset> out;
  const int r = static_cast<int>(std::ceil(radius));
  for (int dy = -r; dy <= r; ++dy) {
    for (int dx = -r; dx <= r; ++dx) {
      const double d = std::hypot(static_cast<double>(dx), static_cast<double>(dy));
      if (d <= 0.0 || d > radius) continue;
      const double a = wrap_angle(std::atan2(static_cast<double>(dy), static_cast<double>(dx)));
      out.push_back({dx, dy, d, a, std::cos(a), std::sin(a)});
    }
  }
  return out;
}

// |cos(phase - alpha)| - |sin(phase - alpha)| clipped at zero, from
// precomputed sines/cosines.
inline double alignment_from_trig(double cos_p, double sin_p, double cos_a, double sin_a) {
  const double c = cos_p * cos_a + sin_p * sin_a;
  const double s = sin_p * cos_a - cos_p * sin_a;
  return std::max(std::fabs(c) - std::fabs(s), 0.0);
}

struct TrigField {
  std::vector<double> cos_p, sin_p;
};

inline TrigField phase_trig(const GradientField& f) {
  TrigField t;
  t.cos_p.resize(f.phase.size());
  t.sin_p.resize(f.phase.size());
  parallel_for(0, f.height, [&](int y) {
    for (int x = 0; x < f.width; ++x) {
      const size_t i = f.idx(x, y);
      t.cos_p[i] = std::cos(f.phase[i]);
      t.sin_p[i] = std::sin(f.phase[i]);
    }
  });
  return t;
}

}  // namespace detail

/// Standardized branch strengths of the full orientation sweep at one pixel:
/// omega(theta_j) = (sum gamma - n mu) / (sqrt(n) sigma) over the fixed-radius
/// sector, where mu, sigma^2 are the elementary null moments. Empty sectors
/// yield 0. Exposed for the field builder and for calibration tests.
inline std::vector<double> local_orientation_strengths(const GradientField& f, PixelCoord p,
                                                       int radius, double tau,
                                                       int orientation_bins = 72) {
  const double mu = elementary_pdf().mean();
  const double sigma = std::sqrt(elementary_pdf().variance());
  std::vector<double> omega(orientation_bins, 0.0);
  const double bin_step = kTwoPi / orientation_bins;
  for (int j = 0; j < orientation_bins; ++j) {
    SectorSpec spec{{static_cast<double>(p.x), static_cast<double>(p.y)},
                    static_cast<double>(radius), j * bin_step, tau};
    const auto pix = sector_pixels(spec, f.width, f.height);
    if (pix.empty()) continue;
    double sum = 0.0;
    for (const PixelCoord& q : pix) sum += pairwise_strength(f, spec.center, q);
    const double n = static_cast<double>(pix.size());
    omega[j] = (sum - n * mu) / (std::sqrt(n) * sigma);
  }
  return omega;
}

/// One retained orientation response at a pixel of the local junction field.
struct LocalResponse {
  double theta = 0.0;  // bin center
  double omega = 0.0;  // standardized strength
  double nfa = 0.0;
};

/// Per-pixel lists (K <= 8 after non-maximum suppression and NFA filtering)
/// of very local junction branches at a fixed radius.
class LocalJunctionField {
 public:
  LocalJunctionField(int width, int height, int fixed_radius, double tau,
                     std::vector<std::uint32_t> starts, std::vector<LocalResponse> pool)
      : width_(width), height_(height), fixed_radius_(fixed_radius), tau_(tau),
        starts_(std::move(starts)), pool_(std::move(pool)) {}

  int width() const { return width_; }
  int height() const { return height_; }
  int fixed_radius() const { return fixed_radius_; }
  double tau() const { return tau_; }
  bool in_bounds(int x, int y) const {
    return x >= 0 && x < width_ && y >= 0 && y < height_;
  }
  std::span<const LocalResponse> at(int x, int y) const {
    const size_t i = static_cast<size_t>(y) * width_ + x;
    return {pool_.data() + starts_[i], pool_.data() + starts_[i + 1]};
  }
  size_t response_count() const { return pool_.size(); }

 private:
  int width_, height_, fixed_radius_;
  double tau_;
  std::vector<std::uint32_t> starts_;  // CSR, size width*height + 1
  std::vector<LocalResponse> pool_;
};

/// Build the local junction field: per pixel, sweep 72 orientations at the
/// fixed radius, standardize, keep circular local maxima that pass the
/// single-branch NFA test, cap at 8. The test count is twice the pixel
/// count: the 72 sweep bins are far from independent tests (non-maximum
/// suppression plus window overlap collapse them to a few correlated maxima
/// per pixel), and counting all of them over-penalizes by ~70x, emptying the
/// field on pure noise instead of leaving the expected epsilon worth of
/// stray responses that the downstream scale test is calibrated against.
///
/// min_span > 0 additionally drops every pixel whose surviving orientations
/// all fit inside an angular window narrower than min_span. Junction evidence
/// needs responses that actually straddle the pixel: a pixel just past a
/// stroke end (or beside a stroke) sees the structure as a one-half-plane
/// cluster of orientations, while an on-structure pixel always carries
/// responses at least a quarter turn apart (antipodal for edges, more spread
/// for corners). The gate keeps branch-scale scans from smearing past line
/// ends; the full-detector pipeline turns it on, calibration trials that
/// probe the raw field leave it off.
inline LocalJunctionField local_junction_field(const GradientField& f, int fixed_radius,
                                               double epsilon, double tau = 1.0,
                                               double min_span = 0.0) {
  if (fixed_radius < 1) throw std::invalid_argument("field radius must be >= 1");
  const int bins = 72;
  const double bin_step = kTwoPi / bins;
  const int w = f.width, h = f.height;
  const double mu = elementary_pdf().mean();
  const double sigma = std::sqrt(elementary_pdf().variance());
  const double n_tests = 2.0 * static_cast<double>(w) * h;

  const auto offsets = detail::disc_offsets(fixed_radius);
  const double delta = sector_half_width(fixed_radius, tau);
  // Bin window of each offset is static: which orientation bins see it.
  std::vector<std::vector<int>> windows(offsets.size());
  for (size_t i = 0; i < offsets.size(); ++i) {
    for (int j = 0; j < bins; ++j)
      if (circ_dist(offsets[i].alpha, j * bin_step) <= delta) windows[i].push_back(j);
  }
  const detail::TrigField trig = detail::phase_trig(f);

  std::vector<std::vector<LocalResponse>> rows(static_cast<size_t>(w) * h);
  parallel_for(0, h, [&](int y) {
    std::vector<double> sum(bins), cnt(bins), omega(bins);
    std::vector<int> order;
    for (int x = 0; x < w; ++x) {
      std::fill(sum.begin(), sum.end(), 0.0);
      std::fill(cnt.begin(), cnt.end(), 0.0);
      for (size_t i = 0; i < offsets.size(); ++i) {
        const int qx = x + offsets[i].dx, qy = y + offsets[i].dy;
        if (qx < 0 || qx >= w || qy < 0 || qy >= h) continue;
        const size_t qi = f.idx(qx, qy);
        const double g =
            f.norm[qi] > 0.0
                ? f.norm[qi] * detail::alignment_from_trig(trig.cos_p[qi], trig.sin_p[qi],
                                                           offsets[i].cos_a, offsets[i].sin_a)
                : 0.0;
        for (int j : windows[i]) {
          sum[j] += g;
          cnt[j] += 1.0;
        }
      }
      for (int j = 0; j < bins; ++j)
        omega[j] = cnt[j] > 0.0 ? (sum[j] - cnt[j] * mu) / (std::sqrt(cnt[j]) * sigma) : 0.0;

      order.clear();
      for (int j = 0; j < bins; ++j) {
        const int jp = (j + bins - 1) % bins, jn = (j + 1) % bins;
        if (cnt[j] > 0.0 && omega[j] > omega[jp] && omega[j] >= omega[jn]) {
          const double tail = elementary_convolved(static_cast<int>(cnt[j])).tail(sum[j]);
          if (n_tests * tail <= epsilon) order.push_back(j);
        }
      }
      if (min_span > 0.0) {
        if (order.size() < 2) continue;
        double span = 0.0;
        for (size_t a = 0; a + 1 < order.size(); ++a)
          for (size_t b = a + 1; b < order.size(); ++b)
            span = std::max(span, circ_dist(order[a] * bin_step, order[b] * bin_step));
        if (span < min_span) continue;
      }
      std::stable_sort(order.begin(), order.end(),
                       [&](int a, int b) { return omega[a] > omega[b]; });
      if (order.size() > 8) order.resize(8);
      std::sort(order.begin(), order.end());
      auto& slot = rows[f.idx(x, y)];
      for (int j : order) {
        const double tail = elementary_convolved(static_cast<int>(cnt[j])).tail(sum[j]);
        slot.push_back({j * bin_step, omega[j], n_tests * tail});
      }
    }
  });

  std::vector<std::uint32_t> starts(static_cast<size_t>(w) * h + 1, 0);
  size_t total = 0;
  for (size_t i = 0; i < rows.size(); ++i) {
    starts[i] = static_cast<std::uint32_t>(total);
    total += rows[i].size();
  }
  starts.back() = static_cast<std::uint32_t>(total);
  std::vector<LocalResponse> pool;
  pool.reserve(total);
  for (auto& r : rows) pool.insert(pool.end(), r.begin(), r.end());
  return LocalJunctionField(w, h, fixed_radius, tau, std::move(starts), std::move(pool));
}

/// Isotropic (seed) detection. For every pixel and every radius in
/// [seed_radius_min, seed_radius_max], branch candidates are the circular
/// local maxima of the orientation sweep; a junction with M branches is kept
/// when
///   NFA = (W*H) * bins^M * n_radii * prod_m F(t; J_m) <= epsilon,
/// with t the weakest branch strength and J_m the sector cardinalities. M is
/// chosen per candidate as the strength-ordered prefix of the maxima with the
/// lowest NFA, so spurious weak maxima never dilute a strong junction.
/// Overlapping detections are resolved by lowest-NFA-wins exclusion within
/// the winner's radius; centers are refined to the 3x3 NFA-weighted centroid.
inline std::vector<IsotropicJunction> detect_isotropic(const GradientField& f,
                                                       const DetectionParams& params = {}) {
  const int bins = params.orientation_bins;
  const double bin_step = kTwoPi / bins;
  const int r_min = params.seed_radius_min, r_max = params.seed_radius_max;
  if (r_min < 1 || r_max < r_min) throw std::invalid_argument("bad seed radius range");
  const int n_radii = r_max - r_min + 1;
  const int w = f.width, h = f.height;
  const double log10_eps = std::log10(params.epsilon);
  const double log10_base =
      std::log10(static_cast<double>(w) * h) + std::log10(static_cast<double>(n_radii));
  const double log10_bins = std::log10(static_cast<double>(bins));

  const auto offsets = detail::disc_offsets(r_max);
  // Static per-offset update plan: the orientation bins this offset feeds and
  // for each the integer radius range where the sector contains it
  // (r >= dist and circ_dist(alpha, theta_j) <= tau / r).
  struct Update {
    std::uint32_t offset;
    std::uint16_t bin;
    std::uint8_t r_lo, r_hi;
  };
  std::vector<Update> plan;
  for (size_t i = 0; i < offsets.size(); ++i) {
    for (int j = 0; j < bins; ++j) {
      const double d_ang = circ_dist(offsets[i].alpha, j * bin_step);
      const int r_hi_ang = d_ang > 0.0
                               ? static_cast<int>(std::floor(params.tau / d_ang))
                               : r_max;
      const int lo = std::max(r_min, static_cast<int>(std::ceil(offsets[i].dist)));
      const int hi = std::min(r_max, r_hi_ang);
      if (lo <= hi)
        plan.push_back({static_cast<std::uint32_t>(i), static_cast<std::uint16_t>(j),
                        static_cast<std::uint8_t>(lo), static_cast<std::uint8_t>(hi)});
    }
  }
  const detail::TrigField trig = detail::phase_trig(f);

  struct Candidate {
    double log10_nfa = std::numeric_limits<double>::infinity();
    double strength = 0.0;
    std::uint8_t radius = 0;
    std::vector<double> orientations;
  };
  std::vector<Candidate> best(static_cast<size_t>(w) * h);

  parallel_for(0, h, [&](int y) {
    const int nr = r_max + 2;
    std::vector<double> sdiff(static_cast<size_t>(bins) * nr), cdiff(static_cast<size_t>(bins) * nr);
    std::vector<double> gamma(offsets.size());
    std::vector<int> maxima, kept;
    std::vector<double> srow(bins), crow(bins);
    for (int x = 0; x < w; ++x) {
      std::fill(sdiff.begin(), sdiff.end(), 0.0);
      std::fill(cdiff.begin(), cdiff.end(), 0.0);
      for (size_t i = 0; i < offsets.size(); ++i) {
        const int qx = x + offsets[i].dx, qy = y + offsets[i].dy;
        if (qx < 0 || qx >= w || qy < 0 || qy >= h) {
          gamma[i] = -1.0;  // out of bounds marker
          continue;
        }
        const size_t qi = f.idx(qx, qy);
        gamma[i] = f.norm[qi] > 0.0
                       ? f.norm[qi] * detail::alignment_from_trig(trig.cos_p[qi], trig.sin_p[qi],
                                                                  offsets[i].cos_a,
                                                                  offsets[i].sin_a)
                       : 0.0;
      }
      for (const Update& u : plan) {
        if (gamma[u.offset] < 0.0) continue;
        const size_t base = static_cast<size_t>(u.bin) * nr;
        sdiff[base + u.r_lo] += gamma[u.offset];
        sdiff[base + u.r_hi + 1] -= gamma[u.offset];
        cdiff[base + u.r_lo] += 1.0;
        cdiff[base + u.r_hi + 1] -= 1.0;
      }

      Candidate& slot = best[f.idx(x, y)];
      std::fill(srow.begin(), srow.end(), 0.0);
      std::fill(crow.begin(), crow.end(), 0.0);
      for (int r = 0; r <= r_max; ++r) {
        for (int j = 0; j < bins; ++j) {
          srow[j] += sdiff[static_cast<size_t>(j) * nr + r];
          crow[j] += cdiff[static_cast<size_t>(j) * nr + r];
        }
        if (r < r_min) continue;

        maxima.clear();
        for (int j = 0; j < bins; ++j) {
          const int jp = (j + bins - 1) % bins, jn = (j + 1) % bins;
          // crow guard: the running sums are maintained by range add/remove, so
          // a fully vacated bin can hold a ~1e-17 residue in srow while crow
          // cancelled to exactly zero.
          if (crow[j] >= 1.0 && srow[j] > 0.0 && srow[j] > srow[jp] && srow[j] >= srow[jn])
            maxima.push_back(j);
        }
        if (maxima.size() < 2) continue;
        std::stable_sort(maxima.begin(), maxima.end(),
                         [&](int a, int b) { return srow[a] > srow[b]; });
        kept.clear();
        const double min_sep = 2.0 * params.tau / r;
        for (int j : maxima) {
          bool ok = true;
          for (int k : kept)
            if (circ_dist(j * bin_step, k * bin_step) <= min_sep) {
              ok = false;
              break;
            }
          if (ok) {
            kept.push_back(j);
            if (static_cast<int>(kept.size()) >= params.max_branches) break;
          }
        }
        if (static_cast<int>(kept.size()) < 2) continue;
        // kept is strength-sorted; every branch-count prefix is its own test
        // class (72^k configurations), so pick the most meaningful count. The
        // min-strength coupling keeps weak padding branches from helping: one
        // junk branch drags t down for every factor.
        double best_lognfa = std::numeric_limits<double>::infinity();
        double best_t = 0.0;
        int best_m = 0;
        for (int k = 2; k <= static_cast<int>(kept.size()); ++k) {
          if (k == 2 &&
              std::fabs(circ_dist(kept[0] * bin_step, kept[1] * bin_step) - kPi) <
                  params.edge_tol)
            continue;  // interior edge pixel, not a junction
          const double t = srow[kept[k - 1]];
          double log10_nfa = log10_base + k * log10_bins;
          for (int i = 0; i < k; ++i)
            log10_nfa += elementary_convolved(static_cast<int>(crow[kept[i]])).log10_tail(t);
          if (log10_nfa < best_lognfa) {
            best_lognfa = log10_nfa;
            best_t = t;
            best_m = k;
          }
        }
        if (best_m < 2 || best_lognfa > log10_eps) continue;
        if (best_lognfa < slot.log10_nfa ||
            (best_lognfa == slot.log10_nfa && r < slot.radius)) {
          slot.log10_nfa = best_lognfa;
          slot.strength = best_t;
          slot.radius = static_cast<std::uint8_t>(r);
          slot.orientations.assign(kept.begin(), kept.begin() + best_m);
          for (double& o : slot.orientations) o *= bin_step;
        }
      }
    }
  });

  // Lowest-NFA-wins exclusion within the winner's radius; ties by scanline.
  std::vector<size_t> idx;
  for (size_t i = 0; i < best.size(); ++i)
    if (std::isfinite(best[i].log10_nfa)) idx.push_back(i);
  std::stable_sort(idx.begin(), idx.end(), [&](size_t a, size_t b) {
    return best[a].log10_nfa < best[b].log10_nfa;
  });
  std::vector<char> suppressed(best.size(), 0);
  std::vector<size_t> winners;
  for (size_t i : idx) {
    if (suppressed[i]) continue;
    winners.push_back(i);
    const int cx = static_cast<int>(i % w), cy = static_cast<int>(i / w);
    const int r = best[i].radius;
    for (int dy = -r; dy <= r; ++dy) {
      const int yy = cy + dy;
      if (yy < 0 || yy >= h) continue;
      for (int dx = -r; dx <= r; ++dx) {
        const int xx = cx + dx;
        if (xx < 0 || xx >= w) continue;
        if (dx * dx + dy * dy <= r * r) suppressed[static_cast<size_t>(yy) * w + xx] = 1;
      }
    }
  }

  std::vector<IsotropicJunction> out;
  out.reserve(winners.size());
  for (size_t i : winners) {
    const int cx = static_cast<int>(i % w), cy = static_cast<int>(i / w);
    // 3x3 centroid weighted by the per-pixel NFA margin below epsilon.
    double wx = 0.0, wy = 0.0, wsum = 0.0;
    for (int dy = -1; dy <= 1; ++dy) {
      for (int dx = -1; dx <= 1; ++dx) {
        const int xx = cx + dx, yy = cy + dy;
        if (xx < 0 || xx >= w || yy < 0 || yy >= h) continue;
        const double ln = best[static_cast<size_t>(yy) * w + xx].log10_nfa;
        if (!std::isfinite(ln)) continue;
        const double weight = std::max(0.0, log10_eps - std::max(ln, -300.0));
        wx += weight * xx;
        wy += weight * yy;
        wsum += weight;
      }
    }
    IsotropicJunction j;
    j.center = wsum > 0.0 ? Vec2{wx / wsum, wy / wsum}
                          : Vec2{static_cast<double>(cx), static_cast<double>(cy)};
    j.radius = best[i].radius;
    j.orientations = best[i].orientations;
    std::sort(j.orientations.begin(), j.orientations.end());
    j.strength = best[i].strength;
    j.log10_nfa = best[i].log10_nfa;
    j.nfa = std::pow(10.0, best[i].log10_nfa);
    out.push_back(std::move(j));
  }
  std::stable_sort(out.begin(), out.end(), [](const IsotropicJunction& a, const IsotropicJunction& b) {
    return a.center.y != b.center.y ? a.center.y < b.center.y : a.center.x < b.center.x;
  });
  return out;
}

}  // namespace asj
