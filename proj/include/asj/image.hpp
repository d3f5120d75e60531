// Grayscale image container, PNG/PGM loading, and the calibrated gradient
// field every detector stage works on.
#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <fstream>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include <png.h>

#include "asj/geometry.hpp"
#include "asj/parallel.hpp"

namespace asj {

/// Row-major grayscale raster with intensities in [0, 1].
class GrayImage {
 public:
  GrayImage(int width, int height, std::vector<double> data)
      : width_(width), height_(height), data_(std::move(data)) {
    if (width_ < 16 || height_ < 16)
      throw std::runtime_error("unreadable: dimensions below 16x16");
    if (data_.size() != static_cast<size_t>(width_) * height_)
      throw std::runtime_error("unreadable: pixel count mismatch");
    for (double v : data_)
      if (!std::isfinite(v) || v < 0.0 || v > 1.0)
        throw std::runtime_error("unreadable: intensity outside [0,1]");
  }

  static GrayImage constant(int width, int height, double value) {
    return GrayImage(width, height,
                     std::vector<double>(static_cast<size_t>(width) * height, value));
  }

  int width() const { return width_; }
  int height() const { return height_; }
  bool in_bounds(int x, int y) const {
    return x >= 0 && x < width_ && y >= 0 && y < height_;
  }
  double at(int x, int y) const { return data_[static_cast<size_t>(y) * width_ + x]; }
  void set(int x, int y, double v) { data_[static_cast<size_t>(y) * width_ + x] = v; }
  const std::vector<double>& data() const { return data_; }

  /// Bilinear sample; (x, y) must satisfy 0 <= x <= width-1, 0 <= y <= height-1.
  double sample_bilinear(double x, double y) const {
    int x0 = std::clamp(static_cast<int>(std::floor(x)), 0, width_ - 2);
    int y0 = std::clamp(static_cast<int>(std::floor(y)), 0, height_ - 2);
    double fx = x - x0, fy = y - y0;
    double a = at(x0, y0), b = at(x0 + 1, y0), c = at(x0, y0 + 1), d = at(x0 + 1, y0 + 1);
    return (1 - fy) * ((1 - fx) * a + fx * b) + fy * ((1 - fx) * c + fx * d);
  }

 private:
  int width_, height_;
  std::vector<double> data_;
};

namespace detail {

inline GrayImage load_pgm(std::ifstream& in) {
  auto next_token = [&in]() -> std::string {
    std::string tok;
    int c;
    while ((c = in.get()) != EOF) {
      if (c == '#') {
        while ((c = in.get()) != EOF && c != '\n') {}
        continue;
      }
      if (std::isspace(c)) {
        if (!tok.empty()) return tok;
        continue;
      }
      tok.push_back(static_cast<char>(c));
    }
    return tok;
  };

  std::string magic = next_token();
  if (magic != "P5") throw std::runtime_error("unreadable: not a binary PGM");
  std::string ws = next_token(), hs = next_token(), ms = next_token();
  if (ws.empty() || hs.empty() || ms.empty())
    throw std::runtime_error("unreadable: truncated PGM header");
  long w = 0, h = 0, maxval = 0;
  try {
    w = std::stol(ws);
    h = std::stol(hs);
    maxval = std::stol(ms);
  } catch (const std::exception&) {
    throw std::runtime_error("unreadable: malformed PGM header");
  }
  if (w <= 0 || h <= 0 || maxval <= 0)
    throw std::runtime_error("unreadable: malformed PGM header");
  if (maxval > 255) throw std::runtime_error("unsupported bit depth: PGM maxval > 255");

  std::vector<unsigned char> raw(static_cast<size_t>(w) * h);
  in.read(reinterpret_cast<char*>(raw.data()), static_cast<std::streamsize>(raw.size()));
  if (in.gcount() != static_cast<std::streamsize>(raw.size()))
    throw std::runtime_error("unreadable: truncated PGM pixel data");

  std::vector<double> data(raw.size());
  for (size_t i = 0; i < raw.size(); ++i) data[i] = raw[i] / static_cast<double>(maxval);
  return GrayImage(static_cast<int>(w), static_cast<int>(h), std::move(data));
}

inline GrayImage load_png(const std::string& path) {
  FILE* fp = std::fopen(path.c_str(), "rb");
  if (!fp) throw std::runtime_error("unreadable: cannot open " + path);

  png_structp png = png_create_read_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
  png_infop info = png ? png_create_info_struct(png) : nullptr;
  if (!png || !info) {
    if (png) png_destroy_read_struct(&png, &info, nullptr);
    std::fclose(fp);
    throw std::runtime_error("unreadable: libpng init failed");
  }

  std::vector<png_bytep> rows;
  std::vector<unsigned char> pixels;
  int w = 0, h = 0, channels = 0;
  if (setjmp(png_jmpbuf(png))) {
    png_destroy_read_struct(&png, &info, nullptr);
    std::fclose(fp);
    throw std::runtime_error("unreadable: corrupt PNG stream");
  }

  png_init_io(png, fp);
  png_read_info(png, info);
  if (png_get_bit_depth(png, info) > 8) {
    png_destroy_read_struct(&png, &info, nullptr);
    std::fclose(fp);
    throw std::runtime_error("unsupported bit depth: 16-bit PNG");
  }
  png_set_expand(png);           // palette -> rgb, gray<8 -> 8, tRNS -> alpha
  png_set_strip_alpha(png);
  png_read_update_info(png, info);

  w = static_cast<int>(png_get_image_width(png, info));
  h = static_cast<int>(png_get_image_height(png, info));
  channels = png_get_channels(png, info);
  if (channels != 1 && channels != 3) {
    png_destroy_read_struct(&png, &info, nullptr);
    std::fclose(fp);
    throw std::runtime_error("unreadable: unsupported PNG channel layout");
  }

  pixels.resize(static_cast<size_t>(w) * h * channels);
  rows.resize(h);
  for (int y = 0; y < h; ++y)
    rows[y] = pixels.data() + static_cast<size_t>(y) * w * channels;
  png_read_image(png, rows.data());
  png_read_end(png, nullptr);
  png_destroy_read_struct(&png, &info, nullptr);
  std::fclose(fp);

  std::vector<double> data(static_cast<size_t>(w) * h);
  if (channels == 1) {
    for (size_t i = 0; i < data.size(); ++i) data[i] = pixels[i] / 255.0;
  } else {
    for (size_t i = 0; i < data.size(); ++i) {
      const unsigned char* p = &pixels[i * 3];
      data[i] = (0.299 * p[0] + 0.587 * p[1] + 0.114 * p[2]) / 255.0;
    }
  }
  return GrayImage(w, h, std::move(data));
}

}  // namespace detail

/// Load an 8-bit grayscale or RGB PNG, or a binary (P5) PGM. RGB collapses
/// through the usual luma weights. Throws on unreadable files, bit depths
/// above 8, or images smaller than 16x16.
inline GrayImage load_grayscale(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("unreadable: cannot open " + path);
  unsigned char sig[8] = {0};
  in.read(reinterpret_cast<char*>(sig), 8);
  if (in.gcount() >= 8 && !png_sig_cmp(sig, 0, 8)) {
    in.close();
    return detail::load_png(path);
  }
  in.clear();
  in.seekg(0);
  return detail::load_pgm(in);
}

inline void save_pgm(const GrayImage& img, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("unreadable: cannot write " + path);
  out << "P5\n" << img.width() << " " << img.height() << "\n255\n";
  std::vector<unsigned char> raw(img.data().size());
  for (size_t i = 0; i < raw.size(); ++i)
    raw[i] = static_cast<unsigned char>(std::lround(std::clamp(img.data()[i], 0.0, 1.0) * 255.0));
  out.write(reinterpret_cast<const char*>(raw.data()), static_cast<std::streamsize>(raw.size()));
}

inline void save_png(const GrayImage& img, const std::string& path) {
  FILE* fp = std::fopen(path.c_str(), "wb");
  if (!fp) throw std::runtime_error("unreadable: cannot write " + path);
  png_structp png = png_create_write_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
  png_infop info = png ? png_create_info_struct(png) : nullptr;
  if (!png || !info || setjmp(png_jmpbuf(png))) {
    if (png) png_destroy_write_struct(&png, &info);
    std::fclose(fp);
    throw std::runtime_error("unreadable: PNG write failed");
  }
  png_init_io(png, fp);
  png_set_IHDR(png, info, img.width(), img.height(), 8, PNG_COLOR_TYPE_GRAY,
               PNG_INTERLACE_NONE, PNG_COMPRESSION_TYPE_DEFAULT, PNG_FILTER_TYPE_DEFAULT);
  png_write_info(png, info);
  std::vector<unsigned char> row(img.width());
  for (int y = 0; y < img.height(); ++y) {
    for (int x = 0; x < img.width(); ++x)
      row[x] = static_cast<unsigned char>(std::lround(std::clamp(img.at(x, y), 0.0, 1.0) * 255.0));
    png_write_row(png, row.data());
  }
  png_write_end(png, nullptr);
  png_destroy_write_struct(&png, &info);
  std::fclose(fp);
}

/// Separable Gaussian blur, kernel truncated at 3 sigma and renormalized at
/// the borders (clamp-free). sigma <= 0 returns the input unchanged.
inline GrayImage gaussian_blur(const GrayImage& img, double sigma) {
  if (sigma <= 0.0) return img;
  const int radius = std::max(1, static_cast<int>(std::ceil(3.0 * sigma)));
  std::vector<double> kernel(2 * radius + 1);
  for (int k = -radius; k <= radius; ++k)
    kernel[k + radius] = std::exp(-0.5 * (k * k) / (sigma * sigma));

  const int w = img.width(), h = img.height();
  auto pass = [&](const std::vector<double>& src, int len, int other, bool horizontal) {
    std::vector<double> dst(src.size());
    for (int o = 0; o < other; ++o) {
      for (int i = 0; i < len; ++i) {
        double acc = 0.0, wsum = 0.0;
        const int lo = std::max(0, i - radius), hi = std::min(len - 1, i + radius);
        for (int k = lo; k <= hi; ++k) {
          const double kw = kernel[k - i + radius];
          const size_t idx = horizontal ? static_cast<size_t>(o) * len + k
                                        : static_cast<size_t>(k) * other + o;
          acc += kw * src[idx];
          wsum += kw;
        }
        const size_t idx = horizontal ? static_cast<size_t>(o) * len + i
                                      : static_cast<size_t>(i) * other + o;
        dst[idx] = acc / wsum;
      }
    }
    return dst;
  };
  std::vector<double> tmp(img.data().begin(), img.data().end());
  tmp = pass(tmp, w, h, true);
  tmp = pass(tmp, h, w, false);
  return GrayImage(w, h, std::move(tmp));
}

/// Calibrated gradient field: `norm` is the gradient magnitude divided by the
/// noise scale (so pure-noise magnitudes follow Rayleigh(1)), `phase` is the
/// level-line direction (gradient rotated by +pi/2) in [0, 2*pi).
struct GradientField {
  int width = 0;
  int height = 0;
  std::vector<double> gx, gy, norm, phase;
  double noise_scale = 0.0;

  bool in_bounds(int x, int y) const {
    return x >= 0 && x < width && y >= 0 && y < height;
  }
  size_t idx(int x, int y) const { return static_cast<size_t>(y) * width + x; }
  double norm_at(int x, int y) const { return norm[idx(x, y)]; }
  double phase_at(int x, int y) const { return phase[idx(x, y)]; }
};

/// Central-difference gradient with median-based noise calibration. If
/// `noise_scale` is given it is used as the Rayleigh scale of the raw
/// magnitudes directly; otherwise the scale is estimated as
/// median(nonzero raw magnitudes) / median(Rayleigh(1)). The one-pixel image
/// frame gets norm = 0. Throws "no gradient structure" on constant images.
inline GradientField compute_gradient(const GrayImage& img,
                                      std::optional<double> noise_scale = std::nullopt) {
  const int w = img.width(), h = img.height();
  GradientField f;
  f.width = w;
  f.height = h;
  f.gx.assign(static_cast<size_t>(w) * h, 0.0);
  f.gy.assign(static_cast<size_t>(w) * h, 0.0);
  f.norm.assign(static_cast<size_t>(w) * h, 0.0);
  f.phase.assign(static_cast<size_t>(w) * h, 0.0);

  parallel_for(0, h, [&](int y) {
    for (int x = 0; x < w; ++x) {
      const size_t i = f.idx(x, y);
      const int xl = std::max(x - 1, 0), xr = std::min(x + 1, w - 1);
      const int yu = std::max(y - 1, 0), yd = std::min(y + 1, h - 1);
      f.gx[i] = (img.at(xr, y) - img.at(xl, y)) / (xr - xl > 0 ? xr - xl : 1);
      f.gy[i] = (img.at(x, yd) - img.at(x, yu)) / (yd - yu > 0 ? yd - yu : 1);
      f.norm[i] = std::hypot(f.gx[i], f.gy[i]);
      f.phase[i] = wrap_angle(std::atan2(f.gy[i], f.gx[i]) + kPi / 2.0);
    }
  });

  double s_hat;
  if (noise_scale && *noise_scale > 0.0) {
    s_hat = *noise_scale;
  } else {
    std::vector<double> mags;
    mags.reserve(f.norm.size());
    for (double m : f.norm)
      if (m > 0.0) mags.push_back(m);
    if (mags.empty()) throw std::runtime_error("no gradient structure");
    size_t mid = mags.size() / 2;
    std::nth_element(mags.begin(), mags.begin() + mid, mags.end());
    const double rayleigh_median = std::sqrt(2.0 * std::log(2.0));
    s_hat = mags[mid] / rayleigh_median;
    if (s_hat <= 0.0) throw std::runtime_error("no gradient structure");
  }
  f.noise_scale = s_hat;

  for (size_t i = 0; i < f.norm.size(); ++i) f.norm[i] /= s_hat;
  // Zero out the frame: one-sided differences there are not calibrated.
  for (int x = 0; x < w; ++x) {
    f.norm[f.idx(x, 0)] = 0.0;
    f.norm[f.idx(x, h - 1)] = 0.0;
  }
  for (int y = 0; y < h; ++y) {
    f.norm[f.idx(0, y)] = 0.0;
    f.norm[f.idx(w - 1, y)] = 0.0;
  }
  return f;
}

}  // namespace asj
