#include <gtest/gtest.h>

#include <cstdio>
#include <fstream>

#include "asj/image.hpp"
#include "asj/synthetic.hpp"

using namespace asj;

namespace {

std::string temp_path(const std::string& name) {
  return testing::TempDir() + "/" + name;
}

}  // namespace

TEST(GrayImage, ValidatesConstruction) {
  EXPECT_NO_THROW(GrayImage::constant(16, 16, 0.5));
  EXPECT_THROW(GrayImage::constant(15, 16, 0.5), std::runtime_error);
  EXPECT_THROW(GrayImage::constant(16, 8, 0.5), std::runtime_error);
  EXPECT_THROW(GrayImage(16, 16, std::vector<double>(100, 0.0)), std::runtime_error);
  std::vector<double> bad(256, 0.5);
  bad[7] = 1.5;
  EXPECT_THROW(GrayImage(16, 16, bad), std::runtime_error);
  bad[7] = -0.1;
  EXPECT_THROW(GrayImage(16, 16, bad), std::runtime_error);
  bad[7] = std::numeric_limits<double>::quiet_NaN();
  EXPECT_THROW(GrayImage(16, 16, bad), std::runtime_error);
}

TEST(GrayImage, AccessorsAndBounds) {
  GrayImage img = GrayImage::constant(20, 16, 0.25);
  EXPECT_EQ(img.width(), 20);
  EXPECT_EQ(img.height(), 16);
  img.set(3, 4, 0.75);
  EXPECT_DOUBLE_EQ(img.at(3, 4), 0.75);
  EXPECT_TRUE(img.in_bounds(0, 0));
  EXPECT_TRUE(img.in_bounds(19, 15));
  EXPECT_FALSE(img.in_bounds(20, 0));
  EXPECT_FALSE(img.in_bounds(0, -1));
}

TEST(GrayImage, BilinearInterpolation) {
  GrayImage img = GrayImage::constant(16, 16, 0.0);
  img.set(5, 5, 1.0);
  EXPECT_DOUBLE_EQ(img.sample_bilinear(5.0, 5.0), 1.0);
  EXPECT_DOUBLE_EQ(img.sample_bilinear(5.5, 5.0), 0.5);
  EXPECT_DOUBLE_EQ(img.sample_bilinear(5.0, 4.5), 0.5);
  EXPECT_DOUBLE_EQ(img.sample_bilinear(5.5, 5.5), 0.25);
  // corner sample stays finite and clamped to the valid cell
  EXPECT_DOUBLE_EQ(img.sample_bilinear(15.0, 15.0), 0.0);
}

TEST(ImageIo, PgmRoundTrip) {
  const NoiseImage noise = noise_image(33, 17, 42);
  const std::string path = temp_path("roundtrip.pgm");
  save_pgm(noise.image, path);
  const GrayImage back = load_grayscale(path);
  ASSERT_EQ(back.width(), 33);
  ASSERT_EQ(back.height(), 17);
  for (size_t i = 0; i < back.data().size(); ++i)
    EXPECT_NEAR(back.data()[i], noise.image.data()[i], 0.5 / 255.0 + 1e-12);
  std::remove(path.c_str());
}

TEST(ImageIo, PngRoundTrip) {
  const NoiseImage noise = noise_image(24, 31, 7);
  const std::string path = temp_path("roundtrip.png");
  save_png(noise.image, path);
  const GrayImage back = load_grayscale(path);
  ASSERT_EQ(back.width(), 24);
  ASSERT_EQ(back.height(), 31);
  for (size_t i = 0; i < back.data().size(); ++i)
    EXPECT_NEAR(back.data()[i], noise.image.data()[i], 0.5 / 255.0 + 1e-12);
  std::remove(path.c_str());
}

TEST(ImageIo, PgmCommentsAndErrors) {
  const std::string path = temp_path("commented.pgm");
  {
    std::ofstream out(path, std::ios::binary);
    out << "P5\n# a comment\n16 16\n255\n";
    for (int i = 0; i < 256; ++i) out.put(static_cast<char>(i & 0xff));
  }
  const GrayImage img = load_grayscale(path);
  EXPECT_EQ(img.width(), 16);
  EXPECT_NEAR(img.at(1, 0), 1.0 / 255.0, 1e-12);
  std::remove(path.c_str());

  EXPECT_THROW(load_grayscale(temp_path("no_such_file.pgm")), std::runtime_error);

  const std::string trunc = temp_path("truncated.pgm");
  {
    std::ofstream out(trunc, std::ios::binary);
    out << "P5\n16 16\n255\n";
    out.put('x');  // 1 byte instead of 256
  }
  EXPECT_THROW(load_grayscale(trunc), std::runtime_error);
  std::remove(trunc.c_str());
}

TEST(GaussianBlur, PreservesConstantsAndMass) {
  const GrayImage flat = GrayImage::constant(32, 32, 0.37);
  const GrayImage same = gaussian_blur(flat, 2.0);
  for (double v : same.data()) EXPECT_NEAR(v, 0.37, 1e-12);

  // sigma <= 0 is the identity
  GrayImage img = GrayImage::constant(32, 32, 0.0);
  img.set(16, 16, 1.0);
  const GrayImage id = gaussian_blur(img, 0.0);
  EXPECT_DOUBLE_EQ(id.at(16, 16), 1.0);

  // an interior impulse keeps its mass and spreads symmetrically
  const GrayImage blur = gaussian_blur(img, 1.5);
  double mass = 0.0;
  for (double v : blur.data()) mass += v;
  EXPECT_NEAR(mass, 1.0, 1e-9);
  EXPECT_NEAR(blur.at(15, 16), blur.at(17, 16), 1e-12);
  EXPECT_NEAR(blur.at(16, 15), blur.at(16, 17), 1e-12);
  EXPECT_NEAR(blur.at(14, 16), blur.at(16, 14), 1e-12);
  EXPECT_GT(blur.at(16, 16), blur.at(15, 16));
}

TEST(ComputeGradient, StepEdgeOrientation) {
  // vertical step: gradient along +x, level lines run vertically
  GrayImage img = GrayImage::constant(32, 32, 0.0);
  for (int y = 0; y < 32; ++y)
    for (int x = 16; x < 32; ++x) img.set(x, y, 1.0);
  const GradientField f = compute_gradient(img, 1.0);
  EXPECT_DOUBLE_EQ(f.noise_scale, 1.0);
  EXPECT_NEAR(f.gx[f.idx(16, 16)], 0.5, 1e-12);
  EXPECT_NEAR(f.gy[f.idx(16, 16)], 0.0, 1e-12);
  EXPECT_NEAR(f.phase_at(16, 16), kPi / 2.0, 1e-12);
  EXPECT_NEAR(f.norm_at(16, 16), 0.5, 1e-12);
  // the one-pixel frame is zeroed
  for (int x = 0; x < 32; ++x) {
    EXPECT_DOUBLE_EQ(f.norm_at(x, 0), 0.0);
    EXPECT_DOUBLE_EQ(f.norm_at(x, 31), 0.0);
  }
}

TEST(ComputeGradient, ExplicitScaleDividesNorms) {
  GrayImage img = GrayImage::constant(32, 32, 0.0);
  for (int y = 0; y < 32; ++y)
    for (int x = 16; x < 32; ++x) img.set(x, y, 1.0);
  const GradientField f1 = compute_gradient(img, 1.0);
  const GradientField f2 = compute_gradient(img, 2.0);
  EXPECT_NEAR(f2.norm_at(16, 16), f1.norm_at(16, 16) / 2.0, 1e-12);
}

TEST(ComputeGradient, CalibratesPureNoiseToUnitRayleigh) {
  const NoiseImage noise = noise_image(192, 192, 5);
  const GradientField f = compute_gradient(noise.image);
  // central differences of white noise have deviation sigma/sqrt(2) per axis
  EXPECT_NEAR(f.noise_scale, noise.scale / std::sqrt(2.0), 0.05 * f.noise_scale);
  // after calibration the median magnitude sits at the Rayleigh(1) median
  std::vector<double> mags;
  for (double m : f.norm)
    if (m > 0.0) mags.push_back(m);
  std::nth_element(mags.begin(), mags.begin() + mags.size() / 2, mags.end());
  EXPECT_NEAR(mags[mags.size() / 2], std::sqrt(2.0 * std::log(2.0)), 0.05);
}

TEST(ComputeGradient, RejectsConstantImages) {
  EXPECT_THROW(compute_gradient(GrayImage::constant(32, 32, 0.5)), std::runtime_error);
}
