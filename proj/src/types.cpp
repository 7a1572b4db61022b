// SPDX-License-Identifier: Apache-2.0
#include "vecmap/types.hpp"

namespace vecmap {

const char* class_name(ClassLabel c) {
  switch (c) {
    case ClassLabel::PedestrianCrossing: return "pedestrian_crossing";
    case ClassLabel::LaneDivider: return "lane_divider";
    case ClassLabel::StopLine: return "stop_line";
  }
  return "unknown";
}

const char* geometry_name(GeometryKind g) {
  switch (g) {
    case GeometryKind::PolylineUndirected: return "polyline";
    case GeometryKind::PolylineDirected: return "polyline_directed";
    case GeometryKind::Polygon: return "polygon";
  }
  return "unknown";
}

}  // namespace vecmap
