// Null-hypothesis statistics for a-contrario junction detection: tabulated
// distributions of the pairwise strength under noise, their self-convolutions,
// tail probabilities and NFA values.
//
// Two base densities are tabulated on a 1e-3 grid:
//  * elementary: strength of one pixel under noise, i.e. Rayleigh(1) magnitude
//    times the angular alignment factor. Half the mass is an exact atom at 0
//    (the alignment factor clips to zero on half the circle); the continuous
//    part integrates in closed form through erfc.
//  * modified: a standard-normal local-junction strength times the same
//    angular factor; even in z, atom 1/2 at 0, continuous part evaluated by
//    per-bin adaptive quadrature.
#pragma once

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstdint>
#include <memory>
#include <mutex>
#include <ostream>
#include <stdexcept>
#include <unordered_map>
#include <vector>

#include <fftw3.h>

#include "asj/geometry.hpp"

namespace asj {

inline constexpr double kGridStep = 1e-3;
inline constexpr double kTailTruncation = 1e-8;
inline constexpr int kMaxExactConvolutions = 64;

namespace detail {

// log10 of the normal survival function, stable far into the tail where
// erfc underflows (asymptotic expansion past x = 25).
inline double log10_normal_sf(double t, double mean, double variance) {
  const double sigma = std::sqrt(std::max(variance, 1e-300));
  const double x = (t - mean) / (sigma * std::sqrt(2.0));
  constexpr double kLn10 = 2.302585092994046;
  if (x < 25.0) return std::log10(0.5 * std::erfc(x));
  return -std::log10(2.0) +
         (-x * x - std::log(x * std::sqrt(kPi)) + std::log1p(-0.5 / (x * x))) / kLn10;
}

}  // namespace detail

/// Discrete probability mass on the lattice {g * step}, stored as a bin array
/// plus an explicit point mass at exactly zero (never smeared into a bin).
/// Bin i carries the mass of [v_i - step/2, v_i + step/2) with
/// v_i = (origin_index + i) * step.
class TabulatedDistribution {
 public:
  TabulatedDistribution(double step, std::int64_t origin_index,
                        std::vector<double> mass, double atom_zero)
      : step_(step), origin_index_(origin_index), mass_(std::move(mass)),
        atom_zero_(atom_zero) {
    if (step_ <= 0.0) throw std::invalid_argument("grid step must be positive");
    if (atom_zero_ < 0.0) throw std::invalid_argument("negative atom mass");
    double total = atom_zero_, m1 = 0.0, m2 = 0.0;
    for (size_t i = 0; i < mass_.size(); ++i) {
      if (mass_[i] < 0.0) throw std::invalid_argument("negative bin mass");
      const double v = value_at(i);
      total += mass_[i];
      m1 += mass_[i] * v;
      m2 += mass_[i] * v * v;
    }
    total_ = total;
    mean_ = m1;
    variance_ = m2 - m1 * m1;
    suffix_.resize(mass_.size() + 1, 0.0);
    for (size_t i = mass_.size(); i-- > 0;) suffix_[i] = suffix_[i + 1] + mass_[i];
  }

  double grid_step() const { return step_; }
  std::int64_t origin_index() const { return origin_index_; }
  double value_at(size_t bin) const {
    return (origin_index_ + static_cast<std::int64_t>(bin)) * step_;
  }
  const std::vector<double>& mass() const { return mass_; }
  double atom_zero() const { return atom_zero_; }
  double total_mass() const { return total_; }
  double mean() const { return mean_; }
  double variance() const { return variance_; }

  /// P{X >= t}. Bin mass is treated as uniform inside its interval (linear
  /// interpolation in the crossing bin); the atom counts whenever t <= 0.
  /// Values above the tabulated support give exactly 0.
  double tail(double t) const {
    double acc = (t <= 0.0) ? atom_zero_ : 0.0;
    if (mass_.empty()) return acc;
    const size_t n = mass_.size();
    const double lo = value_at(0) - 0.5 * step_;
    const double hi = value_at(n - 1) + 0.5 * step_;
    if (t <= lo) return acc + suffix_[0];
    if (t >= hi) return acc;
    size_t i = static_cast<size_t>(std::floor((t - lo) / step_));
    if (i >= n) i = n - 1;
    const double bin_hi = lo + (i + 1) * step_;
    const double frac = std::clamp((bin_hi - t) / step_, 0.0, 1.0);
    return acc + mass_[i] * frac + suffix_[i + 1];
  }

  /// log10 of tail(t). Past the tabulated support (tail truncation) the score
  /// continues with the Gaussian survival at the distribution's own moments,
  /// so extremely significant statistics remain finite and keep a strict
  /// ordering instead of flooring at -inf.
  double log10_tail(double t) const {
    const double exact = tail(t);
    if (exact > 0.0) return std::log10(exact);
    return detail::log10_normal_sf(t, mean_, variance_);
  }

  void dump_csv(std::ostream& out) const {
    out << "bin_center,mass\n";
    char buf[64];
    if (atom_zero_ > 0.0) {
      std::snprintf(buf, sizeof buf, "0,%.17g\n", atom_zero_);
      out << buf;
    }
    for (size_t i = 0; i < mass_.size(); ++i) {
      std::snprintf(buf, sizeof buf, "%.17g,%.17g\n", value_at(i), mass_[i]);
      out << buf;
    }
  }

 private:
  double step_;
  std::int64_t origin_index_;
  std::vector<double> mass_;
  double atom_zero_;
  double total_ = 0.0, mean_ = 0.0, variance_ = 0.0;
  std::vector<double> suffix_;  // suffix_[i] = sum of mass_[i..]
};

inline double tail_probability(const TabulatedDistribution& d, double t) {
  return d.tail(t);
}

namespace detail {

// FFTW's planner is not thread-safe; executions of distinct plans are.
inline std::mutex& fftw_plan_mutex() {
  static std::mutex m;
  return m;
}

inline std::vector<double> fft_convolve(const std::vector<double>& u,
                                        const std::vector<double>& v) {
  if (u.empty() || v.empty()) return {};
  const size_t n = u.size() + v.size() - 1;
  size_t nfft = 1;
  while (nfft < n) nfft <<= 1;

  std::vector<double> a(nfft, 0.0), b(nfft, 0.0);
  std::copy(u.begin(), u.end(), a.begin());
  std::copy(v.begin(), v.end(), b.begin());
  std::vector<std::complex<double>> fa(nfft / 2 + 1), fb(nfft / 2 + 1);

  fftw_plan pa, pb, pc;
  {
    std::lock_guard<std::mutex> lock(fftw_plan_mutex());
    pa = fftw_plan_dft_r2c_1d(static_cast<int>(nfft), a.data(),
                              reinterpret_cast<fftw_complex*>(fa.data()), FFTW_ESTIMATE);
    pb = fftw_plan_dft_r2c_1d(static_cast<int>(nfft), b.data(),
                              reinterpret_cast<fftw_complex*>(fb.data()), FFTW_ESTIMATE);
  }
  fftw_execute(pa);
  fftw_execute(pb);
  for (size_t i = 0; i < fa.size(); ++i) fa[i] *= fb[i];
  {
    std::lock_guard<std::mutex> lock(fftw_plan_mutex());
    pc = fftw_plan_dft_c2r_1d(static_cast<int>(nfft),
                              reinterpret_cast<fftw_complex*>(fa.data()), a.data(),
                              FFTW_ESTIMATE);
  }
  fftw_execute(pc);
  {
    std::lock_guard<std::mutex> lock(fftw_plan_mutex());
    fftw_destroy_plan(pa);
    fftw_destroy_plan(pb);
    fftw_destroy_plan(pc);
  }

  std::vector<double> out(n);
  for (size_t i = 0; i < n; ++i) out[i] = std::max(a[i] / static_cast<double>(nfft), 0.0);
  return out;
}

}  // namespace detail

/// Convolution of two lattice distributions sharing the same grid step. The
/// atoms multiply analytically; atom-times-continuous cross terms stay on the
/// original lattices; the continuous parts convolve exactly on the lattice.
inline TabulatedDistribution convolve(const TabulatedDistribution& a,
                                      const TabulatedDistribution& b) {
  if (std::fabs(a.grid_step() - b.grid_step()) > 1e-15)
    throw std::invalid_argument("grid step mismatch");
  const double step = a.grid_step();
  const auto& ma = a.mass();
  const auto& mb = b.mass();

  std::int64_t lo = 0, hi = 0;
  bool any = false;
  auto extend = [&](std::int64_t first, std::int64_t last) {
    if (!any) {
      lo = first;
      hi = last;
      any = true;
    } else {
      lo = std::min(lo, first);
      hi = std::max(hi, last);
    }
  };
  if (!ma.empty() && !mb.empty())
    extend(a.origin_index() + b.origin_index(),
           a.origin_index() + b.origin_index() +
               static_cast<std::int64_t>(ma.size() + mb.size()) - 2);
  if (a.atom_zero() > 0.0 && !mb.empty())
    extend(b.origin_index(), b.origin_index() + static_cast<std::int64_t>(mb.size()) - 1);
  if (b.atom_zero() > 0.0 && !ma.empty())
    extend(a.origin_index(), a.origin_index() + static_cast<std::int64_t>(ma.size()) - 1);

  if (!any)
    return TabulatedDistribution(step, 0, {}, a.atom_zero() * b.atom_zero());

  std::vector<double> mass(static_cast<size_t>(hi - lo + 1), 0.0);
  if (!ma.empty() && !mb.empty()) {
    auto cc = detail::fft_convolve(ma, mb);
    const std::int64_t base = a.origin_index() + b.origin_index() - lo;
    for (size_t i = 0; i < cc.size(); ++i) mass[base + i] += cc[i];
  }
  if (a.atom_zero() > 0.0)
    for (size_t i = 0; i < mb.size(); ++i)
      mass[b.origin_index() - lo + i] += a.atom_zero() * mb[i];
  if (b.atom_zero() > 0.0)
    for (size_t i = 0; i < ma.size(); ++i)
      mass[a.origin_index() - lo + i] += b.atom_zero() * ma[i];

  return TabulatedDistribution(step, lo, std::move(mass), a.atom_zero() * b.atom_zero());
}

/// Normal(mu, sigma^2) tabulated over mu +- 10 sigma. Used as the CLT stand-in
/// beyond kMaxExactConvolutions.
inline TabulatedDistribution gaussian_tabulated(double mu, double sigma2, double min_step) {
  const double sigma = std::sqrt(std::max(sigma2, 1e-300));
  const double span = 20.0 * sigma;
  double step = std::max(min_step, span / 200000.0);
  std::int64_t lo = static_cast<std::int64_t>(std::floor((mu - 10.0 * sigma) / step));
  std::int64_t hi = static_cast<std::int64_t>(std::ceil((mu + 10.0 * sigma) / step));
  std::vector<double> mass(static_cast<size_t>(hi - lo + 1));
  auto cdf = [&](double x) { return 0.5 * std::erfc(-(x - mu) / (sigma * std::sqrt(2.0))); };
  for (std::int64_t g = lo; g <= hi; ++g) {
    const double c = g * step;
    mass[g - lo] = cdf(c + 0.5 * step) - cdf(c - 0.5 * step);
  }
  return TabulatedDistribution(step, lo, std::move(mass), 0.0);
}

/// `times`-fold self-convolution. Exact on the lattice (square-and-multiply,
/// ceil(log2 times) pairwise convolutions) up to kMaxExactConvolutions;
/// beyond that the Gaussian approximation N(times*mu, times*sigma^2) is used.
inline TabulatedDistribution convolve_self(const TabulatedDistribution& d, int times) {
  if (times < 1) throw std::invalid_argument("convolution count must be >= 1");
  if (times == 1) return d;
  if (times > kMaxExactConvolutions)
    return gaussian_tabulated(times * d.mean(), times * d.variance(), d.grid_step());

  std::unique_ptr<TabulatedDistribution> result;
  TabulatedDistribution base = d;
  int t = times;
  while (t > 0) {
    if (t & 1) {
      result = result ? std::make_unique<TabulatedDistribution>(convolve(*result, base))
                      : std::make_unique<TabulatedDistribution>(base);
    }
    t >>= 1;
    if (t > 0) base = convolve(base, base);
  }
  return *result;
}

namespace detail {

// Adaptive Simpson with an absolute tolerance; throws if the recursion fails
// to converge (carries the offending bin center in the message).
template <typename F>
double adaptive_simpson(const F& f, double a, double b, double fa, double fb,
                        double fm, double tol, int depth, double bin_center) {
  const double m = 0.5 * (a + b);
  const double lm = 0.5 * (a + m), rm = 0.5 * (m + b);
  const double flm = f(lm), frm = f(rm);
  const double coarse = (b - a) / 6.0 * (fa + 4.0 * fm + fb);
  const double left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
  const double right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
  const double fine = left + right;
  if (std::fabs(fine - coarse) <= 15.0 * tol || (b - a) < 1e-14) return fine;
  if (depth <= 0)
    throw std::runtime_error("quadrature non-convergence at z=" + std::to_string(bin_center));
  return adaptive_simpson(f, a, m, fa, fm, flm, tol / 2.0, depth - 1, bin_center) +
         adaptive_simpson(f, m, b, fm, fb, frm, tol / 2.0, depth - 1, bin_center);
}

template <typename F>
double integrate(const F& f, double a, double b, double tol, double bin_center) {
  const double fa = f(a), fb = f(b), fm = f(0.5 * (a + b));
  return adaptive_simpson(f, a, b, fa, fb, fm, tol, 40, bin_center);
}

inline TabulatedDistribution build_elementary() {
  // Continuous density (1/sqrt(pi)) exp(-z^2/4) erfc(z/2) on z >= 0 has the
  // exact antiderivative -erfc(z/2)^2 / 2, so bin masses and the truncation
  // point come in closed form.
  auto upper = [](double z) { double e = std::erfc(z / 2.0); return 0.5 * e * e; };
  const double step = kGridStep;
  double z_max = 0.0;
  while (upper(z_max) >= kTailTruncation) z_max += step;
  const size_t n = static_cast<size_t>(std::llround(z_max / step)) + 1;
  std::vector<double> mass(n);
  for (size_t g = 0; g < n; ++g) {
    const double a = std::max(0.0, g * step - 0.5 * step);
    const double b = g * step + 0.5 * step;
    mass[g] = upper(a) - upper(b);
  }
  return TabulatedDistribution(step, 0, std::move(mass), 0.5);
}

inline TabulatedDistribution build_modified() {
  // Mass of the continuous part over [a, b] (0 <= a < b), after substituting
  // y = sqrt(2) sin(phi) in the scale-mixture integral:
  //   (1/pi) * Int_0^{pi/4} [erf(b/(2 sin phi)) - erf(a/(2 sin phi))] dphi.
  auto bin_mass = [](double a, double b, double center) {
    auto f = [a, b](double phi) {
      if (phi <= 0.0) return (b > 0.0 ? 1.0 : 0.0) - (a > 0.0 ? 1.0 : 0.0);
      const double s = 2.0 * std::sin(phi);
      return std::erf(b / s) - std::erf(a / s);
    };
    return integrate(f, 0.0, kPi / 4.0, 1e-9, center) / kPi;
  };

  const double step = kGridStep;
  // Conditional on a nonzero draw the statistic is sub-Gaussian(1), so the
  // one-sided truncated mass is below erfc(z/sqrt(2))/4.
  double z_max = 0.0;
  while (0.25 * std::erfc(z_max / std::sqrt(2.0)) >= kTailTruncation) z_max += step;
  const std::int64_t half = std::llround(z_max / step);

  // pos[0] is the full center-bin mass (both halves); pos[g] for g > 0 is the
  // one-sided mass of the bin at +g*step, which by symmetry also serves -g.
  std::vector<double> pos(static_cast<size_t>(half) + 1);
  pos[0] = 2.0 * bin_mass(0.0, 0.5 * step, 0.0);
  for (std::int64_t g = 1; g <= half; ++g)
    pos[g] = bin_mass(g * step - 0.5 * step, g * step + 0.5 * step, g * step);

  std::vector<double> mass(static_cast<size_t>(2 * half) + 1);
  double total = 0.0;
  for (std::int64_t g = -half; g <= half; ++g) {
    mass[g + half] = pos[std::llabs(g)];
    total += mass[g + half];
  }
  const double scale = 0.5 / total;  // continuous part carries exactly 1 - atom
  for (double& m : mass) m *= scale;
  return TabulatedDistribution(step, -half, std::move(mass), 0.5);
}

}  // namespace detail

/// Null distribution of the pairwise strength of one pixel under noise.
inline const TabulatedDistribution& elementary_pdf() {
  static const TabulatedDistribution d = detail::build_elementary();
  return d;
}

/// Null distribution of the modified (local-junction-based) pairwise strength.
inline const TabulatedDistribution& modified_pdf() {
  static const TabulatedDistribution d = detail::build_modified();
  return d;
}

namespace detail {

class ConvolutionCache {
 public:
  const TabulatedDistribution& get(const TabulatedDistribution& base, int times) {
    std::lock_guard<std::mutex> lock(mutex_);
    auto it = cache_.find(times);
    if (it == cache_.end())
      it = cache_.emplace(times,
                          std::make_unique<TabulatedDistribution>(convolve_self(base, times)))
               .first;
    return *it->second;
  }

 private:
  std::mutex mutex_;
  std::unordered_map<int, std::unique_ptr<TabulatedDistribution>> cache_;
};

}  // namespace detail

/// Process-wide cached n-fold self-convolutions of the two base densities.
inline const TabulatedDistribution& elementary_convolved(int times) {
  static detail::ConvolutionCache cache;
  return cache.get(elementary_pdf(), times);
}

inline const TabulatedDistribution& modified_convolved(int times) {
  static detail::ConvolutionCache cache;
  return cache.get(modified_pdf(), times);
}

/// One meaningfulness test: observed statistic, the number of elementary terms
/// summed into it, and the number of tests of its class.
struct NfaQuery {
  double statistic = 0.0;
  int conv_count = 1;
  double n_tests = 1.0;
};

inline double nfa(double n_tests, double tail) {
  if (n_tests < 1.0) throw std::invalid_argument("test count must be >= 1");
  return n_tests * tail;
}

/// NFA of `q` against `sum_null`, the conv_count-fold convolution of the
/// relevant base density.
inline double nfa(const NfaQuery& q, const TabulatedDistribution& sum_null) {
  if (q.conv_count < 1) throw std::invalid_argument("conv count must be >= 1");
  return nfa(q.n_tests, sum_null.tail(q.statistic));
}

/// Gaussian (mean, variance) of the boundary correction to the radial
/// derivative of branch strength at radius r with k radial samples. Kept for
/// ablation; the default scale test drops the boundary terms.
inline std::pair<double, double> derivative_gaussian_params(double r, int k, double tau) {
  if (r <= 0.0) throw std::invalid_argument("radius must be positive");
  if (k < 1) throw std::invalid_argument("sample count must be >= 1");
  const double mu = elementary_pdf().mean();
  const double sigma2 = elementary_pdf().variance();
  const double mean = -2.0 * tau * k * mu / (r * r);
  const double var = 2.0 * k * sigma2 * tau * tau / (r * r * r * r);
  return {mean, var};
}

}  // namespace asj
