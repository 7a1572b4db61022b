// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <optional>
#include <vector>

#include "vecmap/types.hpp"

namespace vecmap {

// Total arc length of the open polyline through pts (closed: plus the
// wrap-around segment).
double arc_length(const std::vector<Vec2>& pts, bool closed);

// Uniform arc-length resampling to exactly n_points vertices.
// Polylines keep both endpoints; polygons start at raw_points[0] and exclude
// the implicit closing point.
MapElement resample_element(const std::vector<Vec2>& raw_points,
                            ElementKind kind, int n_points);

// Affine map into [0,1]^2: x in [-left, right] -> [0,1],
// y in [-rear, front] -> [0,1]. (0,0) is the rear-left corner.
MapElement normalize_to_bev(const MapElement& element, const BevFrame& frame);
MapElement denormalize_from_bev(const MapElement& element, const BevFrame& frame);

Vec2 normalize_point(Vec2 p, const BevFrame& frame);
Vec2 denormalize_point(Vec2 p, const BevFrame& frame);

// Clips raw annotation geometry against the frame rectangle. Polylines keep
// the longest contiguous inside run (earliest run on ties); polygons are cut
// with Sutherland-Hodgman. Returns nullopt when nothing usable remains.
std::optional<std::vector<Vec2>> clip_to_frame(const std::vector<Vec2>& raw_points,
                                               GeometryKind geometry,
                                               const BevFrame& frame);

}  // namespace vecmap
