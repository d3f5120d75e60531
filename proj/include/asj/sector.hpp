// Sector neighborhoods and the junction-ness strengths summed over them.
#pragma once

#include <cmath>
#include <span>
#include <stdexcept>
#include <vector>

#include "asj/geometry.hpp"
#include "asj/image.hpp"

namespace asj {

/// Disc sector around `center`: pixels q with ||center q|| <= radius whose
/// ray direction lies within delta = tau / radius of `orientation`. The
/// angular width shrinks with the radius so the arc stays ~2*tau long.
struct SectorSpec {
  Vec2 center;
  double radius = 0.0;
  double orientation = 0.0;  // [0, 2*pi)
  double tau = 1.0;
};

inline double sector_half_width(double radius, double tau) { return tau / radius; }

/// Integer pixels of the sector, clipped to the image bounds, in scanline
/// order. The pixel exactly at the center is excluded.
inline std::vector<PixelCoord> sector_pixels(const SectorSpec& spec, int width, int height) {
  if (spec.radius < 1.0) throw std::invalid_argument("sector radius must be >= 1");
  const double delta = sector_half_width(spec.radius, spec.tau);
  const int x0 = std::max(0, static_cast<int>(std::floor(spec.center.x - spec.radius)));
  const int x1 = std::min(width - 1, static_cast<int>(std::ceil(spec.center.x + spec.radius)));
  const int y0 = std::max(0, static_cast<int>(std::floor(spec.center.y - spec.radius)));
  const int y1 = std::min(height - 1, static_cast<int>(std::ceil(spec.center.y + spec.radius)));

  std::vector<PixelCoord> out;
  for (int y = y0; y <= y1; ++y) {
    for (int x = x0; x <= x1; ++x) {
      const double dx = x - spec.center.x, dy = y - spec.center.y;
      const double d = std::hypot(dx, dy);
      if (d <= 0.0 || d > spec.radius) continue;
      const double alpha = wrap_angle(std::atan2(dy, dx));
      if (circ_dist(alpha, spec.orientation) <= delta) out.push_back({x, y});
    }
  }
  return out;
}

/// Alignment factor max(|cos r| - |sin r|, 0): positive only when the
/// level line at q runs within pi/4 of the branch ray (mod pi).
inline double alignment_factor(double residual) {
  return std::max(std::fabs(std::cos(residual)) - std::fabs(std::sin(residual)), 0.0);
}

/// Pairwise strength gamma_p(q): calibrated gradient magnitude at q times the
/// alignment of q's level line with the ray p -> q.
inline double pairwise_strength(const GradientField& f, Vec2 p, PixelCoord q) {
  const double n = f.norm_at(q.x, q.y);
  if (n <= 0.0) return 0.0;
  const double alpha = ray_angle(p, {static_cast<double>(q.x), static_cast<double>(q.y)});
  return n * alignment_factor(f.phase_at(q.x, q.y) - alpha);
}

/// Branch strength: sum of pairwise strengths over the sector.
inline double branch_strength(const GradientField& f, const SectorSpec& spec) {
  double acc = 0.0;
  for (const PixelCoord& q : sector_pixels(spec, f.width, f.height))
    acc += pairwise_strength(f, spec.center, q);
  return acc;
}

/// Junction strength: the weakest branch bounds the whole junction.
inline double junction_strength(std::span<const double> branch_strengths) {
  if (branch_strengths.size() < 2)
    throw std::invalid_argument("a junction needs at least two branches");
  double m = branch_strengths[0];
  for (double s : branch_strengths) m = std::min(m, s);
  return m;
}

}  // namespace asj
