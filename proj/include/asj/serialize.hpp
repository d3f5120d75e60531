// JSON documents for detection and matching results (stable key order, exact
// round-trip through nlohmann's shortest-representation doubles) and simple
// SVG overlays for visual inspection.
#pragma once

#include <cstdio>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "asj/eval.hpp"
#include "asj/matching.hpp"
#include "asj/scale.hpp"

namespace asj {

using ordered_json = nlohmann::ordered_json;

inline ordered_json detect_document(int width, int height, const AsjParams& p,
                                    const std::vector<ASJunction>& junctions) {
  ordered_json doc;
  doc["image"] = {{"width", width}, {"height", height}};
  doc["params"] = {{"epsilon", p.epsilon},
                   {"tau", p.tau},
                   {"local_radius", p.local_radius},
                   {"seed_radius_min", p.seed_radius_min},
                   {"seed_radius_max", p.seed_radius_max},
                   {"max_branches", p.max_branches},
                   {"max_scale", p.max_scale}};
  doc["junctions"] = ordered_json::array();
  for (const auto& j : junctions) {
    ordered_json branches = ordered_json::array();
    for (const auto& b : j.branches)
      branches.push_back({{"theta", b.orientation}, {"scale", b.scale}, {"nfa", b.nfa}});
    doc["junctions"].push_back({{"x", j.center.x},
                                {"y", j.center.y},
                                {"seed_radius", j.seed_radius},
                                {"branches", std::move(branches)}});
  }
  return doc;
}

inline std::vector<ASJunction> parse_detect_document(const ordered_json& doc) {
  std::vector<ASJunction> out;
  for (const auto& j : doc.at("junctions")) {
    ASJunction a;
    a.center = {j.at("x").get<double>(), j.at("y").get<double>()};
    a.seed_radius = j.at("seed_radius").get<double>();
    for (const auto& b : j.at("branches"))
      a.branches.push_back({b.at("scale").get<double>(), b.at("theta").get<double>(),
                            b.at("nfa").get<double>()});
    out.push_back(std::move(a));
  }
  return out;
}

namespace detail {

inline ordered_json l_junction_json(const LJunction& l) {
  return {{"x", l.center.x},
          {"y", l.center.y},
          {"theta1", l.branch1.orientation},
          {"scale1", l.branch1.scale},
          {"theta2", l.branch2.orientation},
          {"scale2", l.branch2.scale},
          {"parent", l.parent}};
}

inline LJunction l_junction_from_json(const ordered_json& j) {
  LJunction l;
  l.center = {j.at("x").get<double>(), j.at("y").get<double>()};
  l.branch1 = {j.at("scale1").get<double>(), j.at("theta1").get<double>()};
  l.branch2 = {j.at("scale2").get<double>(), j.at("theta2").get<double>()};
  l.parent = j.at("parent").get<int>();
  return l;
}

}  // namespace detail

inline ordered_json match_document(const std::vector<MatchPair>& pairs,
                                   const std::vector<LJunction>& lp,
                                   const std::vector<LJunction>& lq,
                                   const MatchParams& params = {}) {
  ordered_json doc;
  doc["params"] = {{"ratio", params.ratio},
                   {"patch_size", params.patch_size},
                   {"min_overlap", params.min_overlap},
                   {"mutual", params.mutual}};
  doc["junctions_p"] = ordered_json::array();
  for (const auto& l : lp) doc["junctions_p"].push_back(detail::l_junction_json(l));
  doc["junctions_q"] = ordered_json::array();
  for (const auto& l : lq) doc["junctions_q"].push_back(detail::l_junction_json(l));
  doc["pairs"] = ordered_json::array();
  for (const auto& m : pairs) {
    ordered_json affine = ordered_json::array();
    for (double v : m.map.h) affine.push_back(v);
    doc["pairs"].push_back({{"p", m.index_p},
                            {"q", m.index_q},
                            {"dissimilarity", m.dissimilarity},
                            {"affine", std::move(affine)}});
  }
  return doc;
}

struct ParsedMatches {
  std::vector<LJunction> lp, lq;
  std::vector<MatchPair> pairs;
};

inline ParsedMatches parse_match_document(const ordered_json& doc) {
  ParsedMatches out;
  for (const auto& j : doc.at("junctions_p")) out.lp.push_back(detail::l_junction_from_json(j));
  for (const auto& j : doc.at("junctions_q")) out.lq.push_back(detail::l_junction_from_json(j));
  for (const auto& p : doc.at("pairs")) {
    MatchPair m;
    m.index_p = p.at("p").get<int>();
    m.index_q = p.at("q").get<int>();
    m.dissimilarity = p.at("dissimilarity").get<double>();
    const auto& h = p.at("affine");
    for (size_t i = 0; i < 6; ++i) m.map.h[i] = h.at(i).get<double>();
    out.pairs.push_back(m);
  }
  return out;
}

namespace detail {

inline std::string svg_num(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.3f", v);
  return buf;
}

}  // namespace detail

/// SVG overlay of detected junctions: a dot per center, a line per branch at
/// its estimated scale, and a faint circle at the seed radius. `image_href`
/// (optional) is placed underneath, typically the analyzed PNG's filename.
inline std::string svg_overlay(int width, int height, const std::vector<ASJunction>& junctions,
                               const std::string& image_href = "") {
  std::string svg;
  svg += "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" + std::to_string(width) +
         "\" height=\"" + std::to_string(height) + "\" viewBox=\"0 0 " + std::to_string(width) +
         " " + std::to_string(height) + "\">\n";
  if (!image_href.empty())
    svg += "  <image href=\"" + image_href + "\" x=\"0\" y=\"0\" width=\"" +
           std::to_string(width) + "\" height=\"" + std::to_string(height) + "\"/>\n";
  for (const auto& j : junctions) {
    svg += "  <g stroke=\"#e3342f\" fill=\"none\" stroke-width=\"1\">\n";
    svg += "    <circle cx=\"" + detail::svg_num(j.center.x) + "\" cy=\"" +
           detail::svg_num(j.center.y) + "\" r=\"" + detail::svg_num(j.seed_radius) +
           "\" stroke=\"#3490dc\" stroke-dasharray=\"2,2\"/>\n";
    for (const auto& b : j.branches) {
      const double tx = j.center.x + b.scale * std::cos(b.orientation);
      const double ty = j.center.y + b.scale * std::sin(b.orientation);
      svg += "    <line x1=\"" + detail::svg_num(j.center.x) + "\" y1=\"" +
             detail::svg_num(j.center.y) + "\" x2=\"" + detail::svg_num(tx) + "\" y2=\"" +
             detail::svg_num(ty) + "\"/>\n";
    }
    svg += "    <circle cx=\"" + detail::svg_num(j.center.x) + "\" cy=\"" +
           detail::svg_num(j.center.y) + "\" r=\"1.5\" fill=\"#e3342f\"/>\n";
    svg += "  </g>\n";
  }
  svg += "</svg>\n";
  return svg;
}

/// SVG for a match result: the two images side by side with lines joining
/// matched junction centers (Q drawn shifted right by the width of P).
inline std::string svg_matches(int width_p, int height_p, int width_q, int height_q,
                               const std::vector<MatchPair>& pairs,
                               const std::vector<LJunction>& lp, const std::vector<LJunction>& lq,
                               const std::string& href_p = "", const std::string& href_q = "") {
  const int gap = 8;
  const int w = width_p + gap + width_q, h = std::max(height_p, height_q);
  std::string svg;
  svg += "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" + std::to_string(w) +
         "\" height=\"" + std::to_string(h) + "\" viewBox=\"0 0 " + std::to_string(w) + " " +
         std::to_string(h) + "\">\n";
  if (!href_p.empty())
    svg += "  <image href=\"" + href_p + "\" x=\"0\" y=\"0\" width=\"" +
           std::to_string(width_p) + "\" height=\"" + std::to_string(height_p) + "\"/>\n";
  if (!href_q.empty())
    svg += "  <image href=\"" + href_q + "\" x=\"" + std::to_string(width_p + gap) +
           "\" y=\"0\" width=\"" + std::to_string(width_q) + "\" height=\"" +
           std::to_string(height_q) + "\"/>\n";
  const double shift = width_p + gap;
  svg += "  <g stroke=\"#38c172\" stroke-width=\"1\" fill=\"#38c172\">\n";
  for (const auto& m : pairs) {
    const Vec2 a = lp[m.index_p].center, b = lq[m.index_q].center;
    svg += "    <line x1=\"" + detail::svg_num(a.x) + "\" y1=\"" + detail::svg_num(a.y) +
           "\" x2=\"" + detail::svg_num(b.x + shift) + "\" y2=\"" + detail::svg_num(b.y) +
           "\"/>\n";
    svg += "    <circle cx=\"" + detail::svg_num(a.x) + "\" cy=\"" + detail::svg_num(a.y) +
           "\" r=\"2\"/>\n";
    svg += "    <circle cx=\"" + detail::svg_num(b.x + shift) + "\" cy=\"" +
           detail::svg_num(b.y) + "\" r=\"2\"/>\n";
  }
  svg += "  </g>\n</svg>\n";
  return svg;
}

}  // namespace asj
