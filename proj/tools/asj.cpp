// Command-line front end: junction detection, pair matching, and benchmark
// protocols. detect/match emit JSON (stdout or --json FILE) plus optional SVG
// overlays; eval emits CSV. Exit code 2 signals unreadable or unsupported
// inputs and unknown protocols.
#include <cstdio>
#include <fstream>
#include <iostream>
#include <string>

#include <CLI11.hpp>

#include "asj/asj.hpp"

namespace {

struct DetectOptions {
  double epsilon = 1.0;
  double tau = 1.0;
  int local_radius = 5;
  int seed_radius_min = 4;
  int seed_radius_max = 12;
  double max_scale = 0.0;
  double noise_sigma = 0.0;  // 0 = estimate from the image

  asj::AsjParams params() const {
    asj::AsjParams p;
    p.epsilon = epsilon;
    p.tau = tau;
    p.local_radius = local_radius;
    p.seed_radius_min = seed_radius_min;
    p.seed_radius_max = seed_radius_max;
    p.max_scale = max_scale;
    if (noise_sigma > 0.0) p.noise_scale = noise_sigma;
    return p;
  }
};

void add_detect_options(CLI::App* cmd, DetectOptions& o) {
  cmd->add_option("--epsilon", o.epsilon, "detection threshold on the expected false alarms")
      ->check(CLI::PositiveNumber)
      ->capture_default_str();
  cmd->add_option("--tau", o.tau, "sector aperture parameter")
      ->check(CLI::PositiveNumber)
      ->capture_default_str();
  cmd->add_option("--local-radius", o.local_radius, "radius of the very-local orientation sweep")
      ->check(CLI::IsMember({3, 5, 7}))
      ->capture_default_str();
  cmd->add_option("--seed-radius-min", o.seed_radius_min, "smallest seed radius")
      ->check(CLI::Range(2, 64))
      ->capture_default_str();
  cmd->add_option("--seed-radius-max", o.seed_radius_max, "largest seed radius")
      ->check(CLI::Range(2, 64))
      ->capture_default_str();
  cmd->add_option("--max-scale", o.max_scale, "cap on branch scale (0 = image diagonal)")
      ->capture_default_str();
  cmd->add_option("--noise-sigma", o.noise_sigma,
                  "gradient noise deviation (0 = estimate from the image)")
      ->capture_default_str();
}

void emit(const std::string& text, const std::string& path) {
  if (path.empty()) {
    std::cout << text;
    return;
  }
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("unreadable: cannot write " + path);
  out << text;
}

asj::SceneSpec load_scene(const std::string& path) {
  if (path.empty()) throw std::runtime_error("this protocol needs --scene");
  std::ifstream in(path);
  if (!in) throw std::runtime_error("unreadable: cannot open " + path);
  std::string text((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  return asj::parse_scene(text);
}

int run(int argc, char** argv) {
  CLI::App app{"Anisotropic-scale junction detection and matching"};
  app.require_subcommand(1);

  DetectOptions det_opts;
  std::string det_image, det_json, det_svg;
  auto* det = app.add_subcommand("detect", "detect junctions in one image");
  det->add_option("image", det_image, "input image (8-bit PNG or binary PGM)")->required();
  add_detect_options(det, det_opts);
  det->add_option("--json", det_json, "write the result document here instead of stdout");
  det->add_option("--svg", det_svg, "also write an SVG overlay");

  DetectOptions match_opts;
  std::string match_p, match_q, match_json, match_svg;
  double ratio = 1.5;
  int patch_size = 33;
  auto* mat = app.add_subcommand("match", "match junctions across two images");
  mat->add_option("image_p", match_p, "first image")->required();
  mat->add_option("image_q", match_q, "second image")->required();
  add_detect_options(mat, match_opts);
  mat->add_option("--ratio", ratio, "distinctness ratio (second best / best)")
      ->check(CLI::Range(1.0, 100.0))
      ->capture_default_str();
  mat->add_option("--patch-size", patch_size, "comparison patch side (odd)")
      ->check(CLI::Range(3, 129))
      ->capture_default_str();
  mat->add_option("--json", match_json, "write the result document here instead of stdout");
  mat->add_option("--svg", match_svg, "also write a side-by-side SVG of the matches");

  DetectOptions eval_opts;
  std::string protocol = "noise";
  int trials = 100, width = 256, height = 256, pairs = 5;
  uint64_t seed = 1;
  double eval_ratio = 1.5;
  int eval_patch = 33;
  std::string eval_out, scene_path;
  auto* ev = app.add_subcommand("eval", "benchmark protocols, reported as CSV");
  ev->add_option("--protocol", protocol, "noise, repeatability, or matching")
      ->capture_default_str();
  ev->add_option("--trials", trials, "noise-protocol trial count")->check(CLI::Range(1, 10000));
  ev->add_option("--width", width, "noise-trial image width")->check(CLI::Range(32, 4096));
  ev->add_option("--height", height, "noise-trial image height")->check(CLI::Range(32, 4096));
  ev->add_option("--scene", scene_path,
                 "scene description driving the repeatability and matching protocols");
  ev->add_option("--pairs", pairs, "matching-protocol warp count")->check(CLI::Range(1, 100));
  ev->add_option("--seed", seed, "base RNG seed");
  add_detect_options(ev, eval_opts);
  ev->add_option("--ratio", eval_ratio, "distinctness ratio for the matching protocol")
      ->check(CLI::Range(1.0, 100.0))
      ->capture_default_str();
  ev->add_option("--patch-size", eval_patch, "comparison patch side for the matching protocol")
      ->check(CLI::Range(3, 129))
      ->capture_default_str();
  ev->add_option("--out", eval_out, "write the CSV here instead of stdout");

  CLI11_PARSE(app, argc, argv);

  if (det->parsed()) {
    const asj::GrayImage img = asj::load_grayscale(det_image);
    const asj::AsjParams p = det_opts.params();
    const auto junctions = asj::detect_asj(img, p);
    const auto doc = asj::detect_document(img.width(), img.height(), p, junctions);
    emit(doc.dump(2) + "\n", det_json);
    if (!det_svg.empty())
      emit(asj::svg_overlay(img.width(), img.height(), junctions, det_image), det_svg);
    return 0;
  }

  if (mat->parsed()) {
    const asj::GrayImage img_p = asj::load_grayscale(match_p);
    const asj::GrayImage img_q = asj::load_grayscale(match_q);
    const asj::AsjParams p = match_opts.params();
    const auto junc_p = asj::detect_asj(img_p, p);
    const auto junc_q = asj::detect_asj(img_q, p);
    asj::MatchParams mp;
    mp.ratio = ratio;
    mp.patch_size = patch_size;
    std::vector<asj::LJunction> lp, lq;
    const auto pairs = asj::match(junc_p, junc_q, img_p, img_q, mp, &lp, &lq);
    auto doc = asj::match_document(pairs, lp, lq, mp);
    doc["image_p"] = {{"width", img_p.width()}, {"height", img_p.height()}};
    doc["image_q"] = {{"width", img_q.width()}, {"height", img_q.height()}};
    emit(doc.dump(2) + "\n", match_json);
    if (!match_svg.empty())
      emit(asj::svg_matches(img_p.width(), img_p.height(), img_q.width(), img_q.height(), pairs,
                            lp, lq, match_p, match_q),
           match_svg);
    return 0;
  }

  // eval: every protocol reports (protocol, parameter, value) rows, one per
  // trial, followed by a summary row.
  std::string csv = "protocol,parameter,value\n";
  char row[160];

  if (protocol == "noise") {
    asj::TrialParams tp;
    tp.epsilon = eval_opts.epsilon;
    tp.tau = eval_opts.tau;
    tp.local_radius = eval_opts.local_radius;
    double total = 0.0;
    for (int t = 0; t < trials; ++t) {
      const uint64_t s = seed + static_cast<uint64_t>(t);
      const int c = asj::false_alarm_trial(width, height, s, tp);
      std::snprintf(row, sizeof row, "noise,seed=%llu,%d\n",
                    static_cast<unsigned long long>(s), c);
      csv += row;
      total += c;
    }
    std::snprintf(row, sizeof row, "noise,mean,%.6f\n", total / trials);
    csv += row;
  } else if (protocol == "repeatability") {
    const asj::SceneSpec scene = load_scene(scene_path);
    const asj::GrayImage base = asj::render(scene, seed);
    asj::AsjParams p = eval_opts.params();
    // Calibrate against the scene's declared noise. A noiseless synthetic
    // has no noise to estimate from the image, so a token floor stands in.
    if (eval_opts.noise_sigma == 0.0) p.noise_scale = std::max(scene.noise_sigma, 0.01);
    const auto ja = asj::to_eval(asj::detect_asj(base, p));
    double total = 0.0;
    int factors = 0;
    for (double s : {1.0, 0.9, 0.8, 0.7, 0.6, 0.5, 0.4, 0.3}) {
      const asj::GrayImage rescaled = asj::resize_bicubic(base, s);
      const auto jb = asj::to_eval(asj::detect_asj(rescaled, p));
      const double rate = asj::repeatability(ja, jb, s);
      std::snprintf(row, sizeof row, "repeatability,s=%.1f,%.6f\n", s, rate);
      csv += row;
      total += rate;
      ++factors;
    }
    std::snprintf(row, sizeof row, "repeatability,mean,%.6f\n", total / factors);
    csv += row;
  } else if (protocol == "matching") {
    const asj::SceneSpec scene = load_scene(scene_path);
    const asj::GrayImage img_p = asj::render(scene, seed);
    asj::AsjParams p = eval_opts.params();
    // Calibrate against the scene's declared noise. A noiseless synthetic
    // has no noise to estimate from the image, so a token floor stands in.
    if (eval_opts.noise_sigma == 0.0) p.noise_scale = std::max(scene.noise_sigma, 0.01);
    const auto junc_p = asj::detect_asj(img_p, p);
    asj::MatchParams mp;
    mp.ratio = eval_ratio;
    mp.patch_size = eval_patch;
    const asj::Vec2 pivot{scene.width / 2.0, scene.height / 2.0};
    double total_precision = 0.0;
    for (int k = 1; k <= pairs; ++k) {
      asj::Rng rng((seed + static_cast<uint64_t>(k)) * 1913);
      const double rot = rng.uniform(-20.0, 20.0) * asj::kPi / 180.0;
      const double sc = rng.uniform(0.7, 1.0);
      const asj::Vec2 tr{rng.uniform(-30.0, 30.0), rng.uniform(-30.0, 30.0)};
      const asj::AffineMap gt = asj::AffineMap::similarity(rot, sc, tr, pivot);
      const asj::SceneSpec warped = asj::transformed(scene, gt, scene.width, scene.height);
      const asj::GrayImage img_q = asj::render(warped, seed + 100 + static_cast<uint64_t>(k));
      const auto junc_q = asj::detect_asj(img_q, p);
      std::vector<asj::LJunction> lp, lq;
      const auto pair_matches = asj::match(junc_p, junc_q, img_p, img_q, mp, &lp, &lq);
      const auto metrics = asj::match_metrics(pair_matches, lp, lq, gt);
      std::snprintf(row, sizeof row, "matching,pair=%d matches,%d\n", k, metrics.total);
      csv += row;
      std::snprintf(row, sizeof row, "matching,pair=%d correct,%d\n", k, metrics.correct);
      csv += row;
      std::snprintf(row, sizeof row, "matching,pair=%d precision,%.6f\n", k, metrics.precision());
      csv += row;
      total_precision += metrics.precision();
    }
    std::snprintf(row, sizeof row, "matching,mean precision,%.6f\n", total_precision / pairs);
    csv += row;
  } else {
    throw std::runtime_error("unknown protocol: " + protocol);
  }
  emit(csv, eval_out);
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  try {
    return run(argc, argv);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
}
