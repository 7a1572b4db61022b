// SPDX-License-Identifier: Apache-2.0
#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>
#include <random>
#include <stdexcept>

#include "vecmap/geometry.hpp"

using namespace vecmap;

namespace {

constexpr ElementKind kLine{GeometryKind::PolylineUndirected,
                            ClassLabel::LaneDivider};
constexpr ElementKind kPoly{GeometryKind::Polygon,
                            ClassLabel::PedestrianCrossing};

// Independent cumulative-length walker: locates the point at arc length t by
// stepping segments one by one.
Vec2 walk_to(const std::vector<Vec2>& verts, bool closed, double t) {
  std::vector<Vec2> v = verts;
  if (closed) v.push_back(verts.front());
  for (size_t i = 0; i + 1 < v.size(); ++i) {
    const double len = std::hypot(v[i + 1].x - v[i].x, v[i + 1].y - v[i].y);
    if (t <= len || i + 2 == v.size()) {
      const double u = len > 0 ? std::min(t / len, 1.0) : 0.0;
      return {v[i].x + u * (v[i + 1].x - v[i].x),
              v[i].y + u * (v[i + 1].y - v[i].y)};
    }
    t -= len;
  }
  return v.back();
}

}  // namespace

TEST_CASE("resample straight segment") {
  const MapElement e = resample_element({{0, 0}, {10, 0}}, kLine, 5);
  REQUIRE(e.n_points() == 5);
  const std::vector<Vec2> expected{{0, 0}, {2.5, 0}, {5, 0}, {7.5, 0}, {10, 0}};
  for (int j = 0; j < 5; ++j) {
    CHECK(e.points[j].x == doctest::Approx(expected[j].x).epsilon(1e-12));
    CHECK(e.points[j].y == doctest::Approx(expected[j].y).epsilon(1e-12));
  }
}

TEST_CASE("resample unit square to its corners") {
  const MapElement e =
      resample_element({{0, 0}, {1, 0}, {1, 1}, {0, 1}}, kPoly, 4);
  REQUIRE(e.n_points() == 4);
  CHECK(e.points[0] == Vec2{0, 0});
  CHECK(e.points[1] == Vec2{1, 0});
  CHECK(e.points[2] == Vec2{1, 1});
  CHECK(e.points[3] == Vec2{0, 1});
}

TEST_CASE("resample L-shaped polyline against the independent walker") {
  const std::vector<Vec2> raw{{0, 0}, {4, 0}, {4, 4}};
  const MapElement e = resample_element(raw, kLine, 5);
  const std::vector<Vec2> expected{{0, 0}, {2, 0}, {4, 0}, {4, 2}, {4, 4}};
  for (int j = 0; j < 5; ++j) {
    CHECK(e.points[j].x == doctest::Approx(expected[j].x).epsilon(1e-12));
    CHECK(e.points[j].y == doctest::Approx(expected[j].y).epsilon(1e-12));
    const Vec2 oracle = walk_to(raw, false, j * 2.0);
    CHECK(std::abs(e.points[j].x - oracle.x) < 1e-12);
    CHECK(std::abs(e.points[j].y - oracle.y) < 1e-12);
  }
}

TEST_CASE("resampled points sit at uniform arc-length stations") {
  std::mt19937_64 rng(17);
  std::uniform_real_distribution<double> coord(-10.0, 10.0);
  std::uniform_int_distribution<int> raw_n(2, 9);
  std::uniform_int_distribution<int> out_n(2, 24);
  for (int trial = 0; trial < 50; ++trial) {
    std::vector<Vec2> raw(raw_n(rng));
    for (Vec2& p : raw) p = {coord(rng), coord(rng)};
    const int n = out_n(rng);
    MapElement e;
    try {
      e = resample_element(raw, kLine, n);
    } catch (const std::invalid_argument&) {
      continue;  // degenerate random draw
    }
    REQUIRE(e.n_points() == n);
    const double total = arc_length(raw, false);
    for (int j = 0; j < n; ++j) {
      const Vec2 oracle = walk_to(raw, false, j * total / (n - 1));
      CHECK(std::abs(e.points[j].x - oracle.x) < 1e-9 * std::max(1.0, total));
      CHECK(std::abs(e.points[j].y - oracle.y) < 1e-9 * std::max(1.0, total));
    }
  }
}

TEST_CASE("resample polygon stations, closed walk") {
  std::mt19937_64 rng(18);
  std::uniform_real_distribution<double> coord(-8.0, 8.0);
  for (int trial = 0; trial < 30; ++trial) {
    std::vector<Vec2> raw(5);
    for (Vec2& p : raw) p = {coord(rng), coord(rng)};
    const int n = 11;
    MapElement e;
    try {
      e = resample_element(raw, kPoly, n);
    } catch (const std::invalid_argument&) {
      continue;
    }
    const double total = arc_length(raw, true);
    for (int j = 0; j < n; ++j) {
      const Vec2 oracle = walk_to(raw, true, j * total / n);
      CHECK(std::abs(e.points[j].x - oracle.x) < 1e-9 * std::max(1.0, total));
      CHECK(std::abs(e.points[j].y - oracle.y) < 1e-9 * std::max(1.0, total));
    }
  }
}

TEST_CASE("resample rejects degenerate input") {
  CHECK_THROWS_AS(resample_element({{1, 1}, {1, 1}}, kLine, 5),
                  std::invalid_argument);
  CHECK_THROWS_AS(resample_element({{1, 1}}, kLine, 5), std::invalid_argument);
  CHECK_THROWS_AS(resample_element({{0, 0}, {1, 0}}, kPoly, 4),
                  std::invalid_argument);
  CHECK_THROWS_AS(resample_element({{0, 0}, {1, 0}, {2, 0}}, kLine, 1),
                  std::invalid_argument);
}

TEST_CASE("normalize: default frame landmarks") {
  const BevFrame frame;
  MapElement e;
  e.kind = kLine;
  e.points = {{0, 0}, {15, 30}, {-7.5, -15}};
  const MapElement n = normalize_to_bev(e, frame);
  CHECK(n.points[0].x == doctest::Approx(0.5).epsilon(1e-12));
  CHECK(n.points[0].y == doctest::Approx(0.5).epsilon(1e-12));
  CHECK(n.points[1].x == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(n.points[1].y == doctest::Approx(1.0).epsilon(1e-12));
  // independent affine evaluation: (x + left)/(left + right)
  CHECK(n.points[2].x == doctest::Approx((-7.5 + 15.0) / 30.0).epsilon(1e-12));
  CHECK(n.points[2].y == doctest::Approx((-15.0 + 30.0) / 60.0).epsilon(1e-12));
  CHECK(n.points[2].x == doctest::Approx(0.25).epsilon(1e-12));
  CHECK(n.points[2].y == doctest::Approx(0.25).epsilon(1e-12));
}

TEST_CASE("denormalize(normalize(e)) is the identity within 1e-12") {
  const BevFrame frame{22.5, 18.0, 12.0, 14.5, 0.1};
  std::mt19937_64 rng(99);
  std::uniform_real_distribution<double> ux(-frame.left, frame.right);
  std::uniform_real_distribution<double> uy(-frame.rear, frame.front);
  MapElement e;
  e.kind = kLine;
  for (int j = 0; j < 40; ++j) e.points.push_back({ux(rng), uy(rng)});
  const MapElement round = denormalize_from_bev(normalize_to_bev(e, frame), frame);
  for (int j = 0; j < e.n_points(); ++j) {
    CHECK(std::abs(round.points[j].x - e.points[j].x) < 1e-12);
    CHECK(std::abs(round.points[j].y - e.points[j].y) < 1e-12);
  }
}

TEST_CASE("normalize rejects out-of-frame points, naming the index") {
  MapElement e;
  e.kind = kLine;
  e.points = {{0, 0}, {40, 0}};
  try {
    normalize_to_bev(e, BevFrame{});
    FAIL("expected a domain error");
  } catch (const std::invalid_argument& err) {
    CHECK(std::string(err.what()).find("point 1") != std::string::npos);
  }
}

TEST_CASE("clip: fully inside polyline is unchanged") {
  const std::vector<Vec2> raw{{-5, -5}, {5, 5}};
  const auto clipped = clip_to_frame(raw, GeometryKind::PolylineUndirected, BevFrame{});
  REQUIRE(clipped.has_value());
  CHECK(*clipped == raw);
}

TEST_CASE("clip: crossing polyline is cut at the boundary") {
  const auto clipped = clip_to_frame({{0, 0}, {30, 0}},
                                     GeometryKind::PolylineUndirected, BevFrame{});
  REQUIRE(clipped.has_value());
  REQUIRE(clipped->size() == 2);
  CHECK((*clipped)[0] == Vec2{0, 0});
  CHECK((*clipped)[1].x == doctest::Approx(15.0).epsilon(1e-12));
  CHECK((*clipped)[1].y == doctest::Approx(0.0).epsilon(1e-12));
}

TEST_CASE("clip: keeps the longest inside run of a re-entering polyline") {
  // Leaves through the right edge, comes back; second run is longer.
  const std::vector<Vec2> raw{{14, 0}, {20, 0}, {20, 5}, {14, 5}, {0, 5}};
  const auto clipped = clip_to_frame(raw, GeometryKind::PolylineUndirected, BevFrame{});
  REQUIRE(clipped.has_value());
  CHECK(clipped->front().x == doctest::Approx(15.0));
  CHECK(clipped->front().y == doctest::Approx(5.0));
  CHECK(clipped->back() == Vec2{0, 5});
}

TEST_CASE("clip: fully outside element is dropped") {
  CHECK(!clip_to_frame({{100, 100}, {120, 100}},
                       GeometryKind::PolylineUndirected, BevFrame{})
             .has_value());
  CHECK(!clip_to_frame({{100, 100}, {120, 100}, {120, 120}},
                       GeometryKind::Polygon, BevFrame{})
             .has_value());
}

TEST_CASE("clip: polygon is cut to the frame rectangle") {
  // Square straddling the right edge; clipped to x <= 15.
  const auto clipped = clip_to_frame({{10, 0}, {20, 0}, {20, 10}, {10, 10}},
                                     GeometryKind::Polygon, BevFrame{});
  REQUIRE(clipped.has_value());
  REQUIRE(clipped->size() >= 3);
  for (const Vec2& p : *clipped) {
    CHECK(p.x <= 15.0 + 1e-12);
  }
  CHECK(std::abs(arc_length(*clipped, true) - 30.0) < 1e-9);  // 5+10+5+10
}
