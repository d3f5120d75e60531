// Synthetic inputs for tests and benchmarks: a deterministic RNG, Gaussian
// noise images, wireframe scene descriptions with exact junction ground truth,
// an antialiased stroke renderer, and bicubic resampling.
#pragma once

#include <array>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <limits>
#include <optional>
#include <random>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "asj/geometry.hpp"
#include "asj/image.hpp"
#include "asj/matching.hpp"

namespace asj {

/// mt19937_64 with explicit real-number derivation, so streams are identical
/// across standard libraries (std::uniform_real_distribution is not portable).
class Rng {
 public:
  explicit Rng(uint64_t seed) : gen_(seed) {}

  /// Uniform in [0, 1) with 53 random bits.
  double uniform() { return static_cast<double>(gen_() >> 11) * 0x1.0p-53; }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  int uniform_int(int lo, int hi) {
    const int span = hi - lo + 1;
    int v = lo + static_cast<int>(uniform() * span);
    return v > hi ? hi : v;
  }

  /// Standard normal via Box-Muller on explicit uniforms.
  double normal() {
    if (spare_) {
      const double v = *spare_;
      spare_.reset();
      return v;
    }
    double u1 = uniform();
    while (u1 <= 0.0) u1 = uniform();
    const double u2 = uniform();
    const double r = std::sqrt(-2.0 * std::log(u1));
    spare_ = r * std::sin(kTwoPi * u2);
    return r * std::cos(kTwoPi * u2);
  }

  uint64_t bits() { return gen_(); }

 private:
  std::mt19937_64 gen_;
  std::optional<double> spare_;
};

/// White Gaussian noise squashed into [0,1] by its own min/max. The affine
/// squash keeps the field Gaussian up to that one global map, and its
/// parameters let callers recover the per-pixel noise deviation in image
/// units (deviation = scale, since the raw field is standard normal).
struct NoiseImage {
  GrayImage image{GrayImage::constant(16, 16, 0.0)};
  double offset = 0.0;  // image = offset + scale * z
  double scale = 1.0;
};

inline NoiseImage noise_image(int width, int height, uint64_t seed) {
  Rng rng(seed);
  std::vector<double> z(static_cast<size_t>(width) * height);
  double lo = std::numeric_limits<double>::infinity(), hi = -lo;
  for (double& v : z) {
    v = rng.normal();
    lo = std::min(lo, v);
    hi = std::max(hi, v);
  }
  const double span = hi > lo ? hi - lo : 1.0;
  std::vector<double> px(z.size());
  for (size_t i = 0; i < z.size(); ++i) px[i] = (z[i] - lo) / span;
  NoiseImage out;
  out.image = GrayImage(width, height, std::move(px));
  out.scale = 1.0 / span;
  out.offset = -lo / span;
  return out;
}

struct Stroke {
  Vec2 a, b;
  double width = 2.0;
};

/// Smooth Gaussian intensity blob modulating the background. Positive
/// amplitude darkens (toward ink). Blobs give otherwise self-similar
/// wireframe neighborhoods distinct appearance, which patch-based matching
/// needs; their gradients are far too weak to seed junctions.
struct ShadeBlob {
  Vec2 center;
  double sigma = 20.0;
  double amplitude = 0.2;
};

struct GtBranch {
  double orientation = 0.0;
  double scale = 0.0;
};

struct GtJunction {
  Vec2 center;
  std::vector<GtBranch> branches;
};

/// A wireframe scene: dark strokes on a light background (or any two
/// intensities), plus the exact junction ground truth implied by the
/// geometry. Branch scale in the ground truth is the distance from the
/// junction center to where the stroke stops running straight, so chains of
/// collinear segments extend a branch past intermediate vertices.
struct SceneSpec {
  int width = 128, height = 128;
  double ink = 0.0;
  double background = 1.0;
  double noise_sigma = 0.0;
  double psf_sigma = 0.0;  // imaging blur applied before sensor noise
  std::vector<Stroke> strokes;
  std::vector<ShadeBlob> shading;
  std::vector<GtJunction> ground_truth;
};

namespace detail {

// Butt-capped stroke coverage: antialiased across the width and across the
// end faces, so ink stops at the endpoints instead of bulging half a width
// past them (round caps would shift every free-end scale estimate).
inline double stroke_coverage(Vec2 p, const Stroke& st) {
  const Vec2 ab = st.b - st.a;
  const double len = norm(ab);
  if (len <= 0.0) return std::clamp(st.width * 0.5 + 0.5 - dist(p, st.a), 0.0, 1.0);
  const Vec2 u{ab.x / len, ab.y / len};
  const Vec2 ap = p - st.a;
  const double t = ap.x * u.x + ap.y * u.y;
  const double perp = std::fabs(ap.x * u.y - ap.y * u.x);
  const double across = std::clamp(st.width * 0.5 + 0.5 - perp, 0.0, 1.0);
  const double along = std::clamp(std::min(t, len - t) + 0.5, 0.0, 1.0);
  return across * along;
}

// Ground truth for a polyline: every interior vertex with a real turn is a
// two-branch junction; each branch reaches the farthest vertex that stays
// collinear with the branch direction.
inline void polyline_ground_truth(const std::vector<Vec2>& pts, std::vector<GtJunction>& out,
                                  double collinear_tol = 1e-6) {
  auto collinear = [&](Vec2 d1, Vec2 d2) {
    const double n1 = norm(d1), n2 = norm(d2);
    if (n1 <= 0.0 || n2 <= 0.0) return true;
    const double cross = (d1.x * d2.y - d1.y * d2.x) / (n1 * n2);
    const double dot = (d1.x * d2.x + d1.y * d2.y) / (n1 * n2);
    return std::fabs(cross) < collinear_tol && dot > 0.0;
  };
  auto branch_reach = [&](size_t vertex, int step) {
    size_t far = vertex + step;
    Vec2 dir = pts[far] - pts[vertex];
    while (true) {
      const size_t next = far + step;
      if (next >= pts.size()) break;  // relies on size_t wraparound for step<0
      if (!collinear(dir, pts[next] - pts[far])) break;
      far = next;
    }
    return far;
  };
  for (size_t i = 1; i + 1 < pts.size(); ++i) {
    const Vec2 back = pts[i - 1] - pts[i], fwd = pts[i + 1] - pts[i];
    if (collinear_tol > std::fabs((back.x * fwd.y - back.y * fwd.x) /
                                  std::max(norm(back) * norm(fwd), 1e-30)) ||
        norm(back) <= 0.0 || norm(fwd) <= 0.0)
      continue;  // straight continuation or degenerate, not a junction
    const size_t rb = branch_reach(i, -1), rf = branch_reach(i, +1);
    GtJunction j;
    j.center = pts[i];
    j.branches.push_back({ray_angle(pts[i], pts[i - 1]), dist(pts[rb], pts[i])});
    j.branches.push_back({ray_angle(pts[i], pts[i + 1]), dist(pts[rf], pts[i])});
    out.push_back(std::move(j));
  }
}

}  // namespace detail

/// Scene builders. All take explicit geometry; ground truth is filled in to
/// match. Orientations follow the image convention (y grows downward).
inline void add_segment(SceneSpec& s, Vec2 a, Vec2 b, double width = 2.0) {
  s.strokes.push_back({a, b, width});
}

inline void add_polyline(SceneSpec& s, const std::vector<Vec2>& pts, double width = 2.0) {
  if (pts.size() < 2) throw std::invalid_argument("polyline needs at least 2 points");
  for (size_t i = 0; i + 1 < pts.size(); ++i) s.strokes.push_back({pts[i], pts[i + 1], width});
  detail::polyline_ground_truth(pts, s.ground_truth);
}

/// Star junction: k arms radiating from one center.
inline void add_star(SceneSpec& s, Vec2 center, const std::vector<GtBranch>& arms,
                     double width = 2.0) {
  if (arms.size() < 2) throw std::invalid_argument("star needs at least 2 arms");
  GtJunction j;
  j.center = center;
  for (const auto& arm : arms) {
    const Vec2 tip{center.x + arm.scale * std::cos(arm.orientation),
                   center.y + arm.scale * std::sin(arm.orientation)};
    s.strokes.push_back({center, tip, width});
    j.branches.push_back(arm);
  }
  s.ground_truth.push_back(std::move(j));
}

inline void add_rect(SceneSpec& s, Vec2 corner, double w, double h, double width = 2.0) {
  const Vec2 p0 = corner, p1{corner.x + w, corner.y}, p2{corner.x + w, corner.y + h},
      p3{corner.x, corner.y + h};
  for (auto [a, b] : {std::pair{p0, p1}, {p1, p2}, {p2, p3}, {p3, p0}})
    s.strokes.push_back({a, b, width});
  const std::array<std::array<Vec2, 3>, 4> corners = {
      {{p0, p1, p3}, {p1, p2, p0}, {p2, p3, p1}, {p3, p0, p2}}};
  for (const auto& [c, n1, n2] : corners) {
    GtJunction j;
    j.center = c;
    j.branches.push_back({ray_angle(c, n1), dist(n1, c)});
    j.branches.push_back({ray_angle(c, n2), dist(n2, c)});
    s.ground_truth.push_back(std::move(j));
  }
}

/// Parse a plain-text scene description, one directive per line:
///   canvas W H            image size (default 128x128)
///   ink V / background V  stroke and backdrop intensities in [0,1]
///   noise SIGMA           additive Gaussian noise deviation
///   stroke W              stroke width for subsequent geometry
///   segment X1 Y1 X2 Y2
///   polyline X1 Y1 X2 Y2 X3 Y3 ...
///   star CX CY THETA1 LEN1 [THETA2 LEN2 ...]
///   rect X Y W H
///   shade CX CY SIGMA AMPL   background blob (positive AMPL darkens)
///   psf SIGMA                imaging blur before the sensor noise
/// '#' starts a comment. Unknown directives throw.
inline SceneSpec parse_scene(const std::string& text) {
  SceneSpec s;
  double stroke_width = 2.0;
  std::istringstream lines(text);
  std::string line;
  while (std::getline(lines, line)) {
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    std::istringstream in(line);
    std::string cmd;
    if (!(in >> cmd)) continue;
    auto num = [&](const char* what) {
      double v;
      if (!(in >> v))
        throw std::invalid_argument("scene directive '" + cmd + "' missing " + what);
      return v;
    };
    if (cmd == "canvas") {
      s.width = static_cast<int>(num("width"));
      s.height = static_cast<int>(num("height"));
    } else if (cmd == "ink") {
      s.ink = num("value");
    } else if (cmd == "background") {
      s.background = num("value");
    } else if (cmd == "noise") {
      s.noise_sigma = num("sigma");
    } else if (cmd == "psf") {
      s.psf_sigma = num("sigma");
    } else if (cmd == "stroke") {
      stroke_width = num("width");
    } else if (cmd == "segment") {
      const Vec2 a{num("x1"), num("y1")}, b{num("x2"), num("y2")};
      add_segment(s, a, b, stroke_width);
    } else if (cmd == "polyline") {
      std::vector<Vec2> pts;
      double x, y;
      while (in >> x >> y) pts.push_back({x, y});
      add_polyline(s, pts, stroke_width);
    } else if (cmd == "star") {
      const Vec2 c{num("cx"), num("cy")};
      std::vector<GtBranch> arms;
      double theta, len;
      while (in >> theta >> len) arms.push_back({wrap_angle(theta), len});
      add_star(s, c, arms, stroke_width);
    } else if (cmd == "rect") {
      const Vec2 c{num("x"), num("y")};
      const double w = num("w"), h = num("h");
      add_rect(s, c, w, h, stroke_width);
    } else if (cmd == "shade") {
      const Vec2 c{num("cx"), num("cy")};
      const double sigma = num("sigma"), ampl = num("ampl");
      if (sigma <= 0.0) throw std::invalid_argument("shade sigma must be positive");
      s.shading.push_back({c, sigma, ampl});
    } else {
      throw std::invalid_argument("unknown scene directive: " + cmd);
    }
  }
  return s;
}

/// A small random wireframe scene per seed, cycling rectangle / four-arm
/// cross / two-arm corner, arm lengths between 20 and 80 px, stroke width 2
/// on a 192x192 canvas. The workhorse input of the seeded recovery sweeps.
inline SceneSpec random_wireframe(uint64_t seed, double noise_sigma = 0.04) {
  Rng rng(seed * 977);
  char shape[160];
  switch (seed % 3) {
    case 0: {
      const int w = rng.uniform_int(40, 80), h = rng.uniform_int(40, 80);
      const int x = rng.uniform_int(30, 150 - w), y = rng.uniform_int(30, 150 - h);
      std::snprintf(shape, sizeof shape, "rect %d %d %d %d\n", x, y, w, h);
      break;
    }
    case 1: {
      const double a = rng.uniform(0.0, 0.5);
      const int l1 = rng.uniform_int(30, 70), l2 = rng.uniform_int(30, 70);
      const int l3 = rng.uniform_int(30, 70), l4 = rng.uniform_int(30, 70);
      std::snprintf(shape, sizeof shape, "star 96 96 %.3f %d %.3f %d %.3f %d %.3f %d\n", a, l1,
                    a + 1.571, l2, a + 3.141, l3, a + 4.712, l4);
      break;
    }
    default: {
      const double a = rng.uniform(0.0, 6.28);
      const double open = rng.uniform(0.9, 2.2);
      const int l1 = rng.uniform_int(25, 75), l2 = rng.uniform_int(25, 75);
      std::snprintf(shape, sizeof shape, "star 96 96 %.3f %d %.3f %d\n", a, l1, a + open, l2);
      break;
    }
  }
  char head[80];
  std::snprintf(head, sizeof head, "canvas 192 192\nstroke 2\nnoise %.4f\n", noise_sigma);
  return parse_scene(std::string(head) + shape);
}

/// Apply an affine map to scene geometry and its ground truth. Stroke widths
/// scale with sqrt(|det|), branch orientations and scales are recomputed from
/// the mapped endpoints (exact for affine maps of straight strokes).
inline SceneSpec transformed(const SceneSpec& s, const AffineMap& map, int out_width,
                             int out_height) {
  SceneSpec t = s;
  t.width = out_width;
  t.height = out_height;
  t.strokes.clear();
  t.ground_truth.clear();
  const double width_scale = std::sqrt(std::fabs(map.det()));
  for (const auto& st : s.strokes)
    t.strokes.push_back({map.apply(st.a), map.apply(st.b), st.width * width_scale});
  t.shading.clear();
  for (const auto& blob : s.shading)
    t.shading.push_back({map.apply(blob.center), blob.sigma * width_scale, blob.amplitude});
  for (const auto& j : s.ground_truth) {
    GtJunction m;
    m.center = map.apply(j.center);
    for (const auto& b : j.branches) {
      const Vec2 tip = map.apply(j.center + b.scale * Vec2{std::cos(b.orientation),
                                                           std::sin(b.orientation)});
      m.branches.push_back({ray_angle(m.center, tip), dist(tip, m.center)});
    }
    t.ground_truth.push_back(std::move(m));
  }
  return t;
}

/// Render the scene. Strokes are butt-capped rectangles antialiased on both
/// axes, composited as the max over strokes so overlapping arms do not
/// double-darken; shading blobs modulate the background before ink goes on.
/// Gaussian noise (if any) is drawn from `seed` and the result clamped to
/// [0,1].
inline GrayImage render(const SceneSpec& s, uint64_t seed = 0) {
  std::vector<double> cov(static_cast<size_t>(s.width) * s.height, 0.0);
  for (const auto& st : s.strokes) {
    const double reach = st.width * 0.5 + 1.0;
    const int x0 = std::max(0, static_cast<int>(std::floor(std::min(st.a.x, st.b.x) - reach)));
    const int x1 = std::min(s.width - 1,
                            static_cast<int>(std::ceil(std::max(st.a.x, st.b.x) + reach)));
    const int y0 = std::max(0, static_cast<int>(std::floor(std::min(st.a.y, st.b.y) - reach)));
    const int y1 = std::min(s.height - 1,
                            static_cast<int>(std::ceil(std::max(st.a.y, st.b.y) + reach)));
    for (int y = y0; y <= y1; ++y) {
      for (int x = x0; x <= x1; ++x) {
        const double c = detail::stroke_coverage({double(x), double(y)}, st);
        double& slot = cov[static_cast<size_t>(y) * s.width + x];
        slot = std::max(slot, c);
      }
    }
  }
  std::vector<double> px(cov.size());
  for (int y = 0; y < s.height; ++y) {
    for (int x = 0; x < s.width; ++x) {
      double bg = s.background;
      for (const auto& blob : s.shading) {
        const double dx = x - blob.center.x, dy = y - blob.center.y;
        bg -= blob.amplitude * std::exp(-(dx * dx + dy * dy) / (2.0 * blob.sigma * blob.sigma));
      }
      const size_t i = static_cast<size_t>(y) * s.width + x;
      px[i] = std::clamp(bg * (1.0 - cov[i]) + s.ink * cov[i], 0.0, 1.0);
    }
  }
  GrayImage clean(s.width, s.height, std::move(px));
  if (s.psf_sigma > 0.0) clean = gaussian_blur(clean, s.psf_sigma);

  Rng rng(seed);
  std::vector<double> out(clean.data());
  for (double& v : out) {
    if (s.noise_sigma > 0.0) v += s.noise_sigma * rng.normal();
    v = std::clamp(v, 0.0, 1.0);
  }
  return GrayImage(s.width, s.height, std::move(out));
}

namespace detail {

// Catmull-Rom kernel, widened by 1/scale when minifying so the filter
// footprint covers the source pixels that map into one output pixel.
inline double catmull_rom(double x) {
  x = std::fabs(x);
  if (x < 1.0) return 1.5 * x * x * x - 2.5 * x * x + 1.0;
  if (x < 2.0) return -0.5 * x * x * x + 2.5 * x * x - 4.0 * x + 2.0;
  return 0.0;
}

}  // namespace detail

/// Separable bicubic resize to round(W*s) x round(H*s). When s < 1 the kernel
/// widens by 1/s, acting as a low-pass filter; weights are renormalized per
/// output pixel. Edges clamp.
inline GrayImage resize_bicubic(const GrayImage& img, double scale) {
  if (scale <= 0.0) throw std::invalid_argument("resize scale must be positive");
  const int ow = std::max(16, static_cast<int>(std::lround(img.width() * scale)));
  const int oh = std::max(16, static_cast<int>(std::lround(img.height() * scale)));
  const double widen = scale < 1.0 ? 1.0 / scale : 1.0;
  const int support = static_cast<int>(std::ceil(2.0 * widen));

  auto resample_axis = [&](const std::vector<double>& src, int sw, int sh, int out_len,
                           bool horizontal) {
    const int other = horizontal ? sh : sw;
    std::vector<double> dst(static_cast<size_t>(out_len) * other);
    const int src_len = horizontal ? sw : sh;
    for (int o = 0; o < out_len; ++o) {
      const double center = (o + 0.5) / scale - 0.5;
      const int lo = static_cast<int>(std::floor(center)) - support + 1;
      const int hi = static_cast<int>(std::floor(center)) + support;
      double wsum = 0.0;
      std::vector<std::pair<int, double>> taps;
      taps.reserve(static_cast<size_t>(hi - lo + 1));
      for (int i = lo; i <= hi; ++i) {
        const double w = detail::catmull_rom((center - i) / widen);
        if (w == 0.0) continue;
        taps.push_back({std::clamp(i, 0, src_len - 1), w});
        wsum += w;
      }
      for (int k = 0; k < other; ++k) {
        double acc = 0.0;
        for (const auto& [i, w] : taps)
          acc += w * (horizontal ? src[static_cast<size_t>(k) * sw + i]
                                 : src[static_cast<size_t>(i) * sw + k]);
        const double v = acc / wsum;
        if (horizontal)
          dst[static_cast<size_t>(k) * out_len + o] = v;
        else
          dst[static_cast<size_t>(o) * sw + k] = v;
      }
    }
    return dst;
  };

  std::vector<double> mid = resample_axis(img.data(), img.width(), img.height(), ow, true);
  std::vector<double> out = resample_axis(mid, ow, img.height(), oh, false);
  for (double& v : out) v = std::clamp(v, 0.0, 1.0);
  return GrayImage(ow, oh, std::move(out));
}

/// Affine warp by inverse-mapped bicubic sampling: output pixel (x, y) reads
/// the source at map^-1 (x, y) through a 4x4 Catmull-Rom stencil. Samples whose
/// stencil leaves the source take `fill`. This is the usual way to build a
/// ground-truth-warped second view of an image for repeatability studies.
inline GrayImage warp_bicubic(const GrayImage& img, const AffineMap& map, int out_width,
                              int out_height, double fill) {
  const auto inv_opt = map.inverse();
  if (!inv_opt) throw std::invalid_argument("warp map is singular");
  const AffineMap& inv = *inv_opt;
  const int sw = img.width(), sh = img.height();
  std::vector<double> out(static_cast<size_t>(out_width) * out_height, fill);
  for (int y = 0; y < out_height; ++y) {
    for (int x = 0; x < out_width; ++x) {
      const Vec2 p = inv.apply({static_cast<double>(x), static_cast<double>(y)});
      const int ix = static_cast<int>(std::floor(p.x));
      const int iy = static_cast<int>(std::floor(p.y));
      if (ix < 1 || iy < 1 || ix + 2 >= sw || iy + 2 >= sh) continue;
      double acc = 0.0;
      for (int dy = -1; dy <= 2; ++dy) {
        const double wy = detail::catmull_rom(p.y - (iy + dy));
        if (wy == 0.0) continue;
        for (int dx = -1; dx <= 2; ++dx) {
          const double wx = detail::catmull_rom(p.x - (ix + dx));
          if (wx == 0.0) continue;
          acc += wx * wy * img.at(ix + dx, iy + dy);
        }
      }
      out[static_cast<size_t>(y) * out_width + x] = std::clamp(acc, 0.0, 1.0);
    }
  }
  return GrayImage(out_width, out_height, std::move(out));
}

}  // namespace asj
