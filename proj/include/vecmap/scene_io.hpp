// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <stdexcept>
#include <string>
#include <vector>

#include "vecmap/types.hpp"

namespace vecmap {

// Scene file format, line-delimited ("vecmap.scene.v1"):
//
//   # comment
//   schema vecmap.scene.v1
//   scene <id>
//   frame <front> <rear> <left> <right> <resolution>
//   gt   <class> <geometry> <n> <x0> <y0> ... <x(n-1)> <y(n-1)>
//   pred <class> <geometry> <score> <n> <x0> <y0> ...
//
// Classes: pedestrian_crossing | lane_divider | stop_line.
// Geometries: polyline | polyline_directed | polygon. Pedestrian crossings
// must be polygons; dividers and stop lines must be polylines. Coordinates
// are meters in the ego frame. Elements are clipped to the frame and
// resampled to n_points on load; raw points are kept for round-tripping.

enum class SceneError {
  Io,
  BadHeader,
  Syntax,
  UnknownClass,
  UnknownGeometry,
  KindMismatch,
  BadPointCount,
  NonFinite,
  BadScore,
  Degenerate,
  MissingFrame,
};

const char* scene_error_name(SceneError category);

class SceneParseError : public std::runtime_error {
 public:
  SceneParseError(SceneError category, const std::string& message)
      : std::runtime_error(message), category_(category) {}
  SceneError category() const { return category_; }

 private:
  SceneError category_;
};

struct ParseOptions {
  int n_points = 20;
};

struct ElementRecord {
  ClassLabel label = ClassLabel::LaneDivider;
  GeometryKind geometry = GeometryKind::PolylineUndirected;
  std::vector<Vec2> points;
  double score = 1.0;  // used for predictions only
};

// Converter boundary for external annotation formats: validates records,
// clips them to the frame, resamples to n_points, and drops elements that
// leave nothing inside the frame.
Scene build_scene(const std::string& id, const BevFrame& frame, int n_points,
                  const std::vector<ElementRecord>& ground_truth,
                  const std::vector<ElementRecord>& predictions);

Scene parse_scene_text(const std::string& text, const std::string& source_name,
                       const ParseOptions& opts = {});
Scene parse_scene(const std::string& path, const ParseOptions& opts = {});

std::string scene_to_text(const Scene& scene);
void write_scene(const Scene& scene, const std::string& path);

}  // namespace vecmap
