// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <array>
#include <cmath>
#include <cstdint>
#include <string>
#include <vector>

namespace vecmap {

struct Vec2 {
  double x = 0.0;
  double y = 0.0;

  friend Vec2 operator+(Vec2 a, Vec2 b) { return {a.x + b.x, a.y + b.y}; }
  friend Vec2 operator-(Vec2 a, Vec2 b) { return {a.x - b.x, a.y - b.y}; }
  friend Vec2 operator*(double s, Vec2 a) { return {s * a.x, s * a.y}; }
  friend bool operator==(Vec2 a, Vec2 b) { return a.x == b.x && a.y == b.y; }
};

inline double manhattan(Vec2 a, Vec2 b) {
  return std::abs(a.x - b.x) + std::abs(a.y - b.y);
}

inline double euclidean(Vec2 a, Vec2 b) {
  return std::hypot(a.x - b.x, a.y - b.y);
}

// The three map classes, plus a reserved "no object" slot used by
// classification score vectors.
enum class ClassLabel : int {
  PedestrianCrossing = 0,
  LaneDivider = 1,
  StopLine = 2,
};

inline constexpr int kNumClasses = 3;
inline constexpr int kNoObject = 3;             // index of the empty class slot
inline constexpr int kScoreSlots = kNumClasses + 1;

const char* class_name(ClassLabel c);

// Geometric family of an element. Pedestrian crossings are closed polygons;
// dividers and stop lines are open polylines, undirected unless the source
// annotation flags a direction.
enum class GeometryKind : int {
  PolylineUndirected = 0,
  PolylineDirected = 1,
  Polygon = 2,
};

inline bool is_polygon(GeometryKind g) { return g == GeometryKind::Polygon; }

const char* geometry_name(GeometryKind g);

struct ElementKind {
  GeometryKind geometry = GeometryKind::PolylineUndirected;
  ClassLabel class_label = ClassLabel::LaneDivider;
};

// One vector map feature: an ordered point set of exactly n_points() vertices.
// Polygon sequences do not repeat the first point; closure is implicit.
struct MapElement {
  ElementKind kind;
  std::vector<Vec2> points;

  int n_points() const { return static_cast<int>(points.size()); }
};

// Perception extents around the ego vehicle, in meters, plus the raster
// resolution. +y is forward (front), +x is rightward.
struct BevFrame {
  double front = 30.0;
  double rear = 30.0;
  double left = 15.0;
  double right = 15.0;
  double resolution = 0.15;

  double width() const { return left + right; }
  double height() const { return front + rear; }
  bool contains(Vec2 p, double eps = 0.0) const {
    return p.x >= -left - eps && p.x <= right + eps && p.y >= -rear - eps &&
           p.y <= front + eps;
  }
};

void validate_frame(const BevFrame& frame);

// Ground-truth element as stored in a scene: the raw annotation points in
// ego-frame meters plus the clipped, resampled element derived from them.
struct SceneGroundTruth {
  ClassLabel label = ClassLabel::LaneDivider;
  GeometryKind geometry = GeometryKind::PolylineUndirected;
  std::vector<Vec2> raw_points;
  MapElement element;
};

struct ScenePrediction {
  ClassLabel label = ClassLabel::LaneDivider;
  GeometryKind geometry = GeometryKind::PolylineUndirected;
  double score = 0.0;
  std::vector<Vec2> raw_points;
  MapElement element;
};

// One evaluation sample: ground truth, optional scored predictions, and the
// BEV frame they live in. Element coordinates are meters in the ego frame.
struct Scene {
  std::string id;
  BevFrame frame;
  int n_points = 20;
  std::vector<SceneGroundTruth> ground_truth;
  std::vector<ScenePrediction> predictions;
};

}  // namespace vecmap
