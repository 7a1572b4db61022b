// SPDX-License-Identifier: Apache-2.0
#include "vecmap/geometry.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>

namespace vecmap {

namespace {

int count_distinct(const std::vector<Vec2>& pts) {
  int distinct = 0;
  for (size_t i = 0; i < pts.size(); ++i) {
    bool dup = false;
    for (size_t k = 0; k < i; ++k) {
      if (pts[i] == pts[k]) {
        dup = true;
        break;
      }
    }
    if (!dup) ++distinct;
  }
  return distinct;
}

Vec2 lerp(Vec2 a, Vec2 b, double t) {
  if (t == 0.0) return a;
  if (t == 1.0) return b;
  return {a.x + t * (b.x - a.x), a.y + t * (b.y - a.y)};
}

// Liang-Barsky segment/rectangle clip. Returns the clipped parameter range
// [t0, t1] of p->q, or false when the segment misses the rectangle.
bool clip_segment(Vec2 p, Vec2 q, const BevFrame& f, double& t0, double& t1) {
  const double dx = q.x - p.x;
  const double dy = q.y - p.y;
  const double checks[4][2] = {
      {-dx, p.x - (-f.left)},  // x >= -left
      {dx, f.right - p.x},     // x <= right
      {-dy, p.y - (-f.rear)},  // y >= -rear
      {dy, f.front - p.y},     // y <= front
  };
  t0 = 0.0;
  t1 = 1.0;
  for (const auto& c : checks) {
    const double denom = c[0];
    const double num = c[1];
    if (denom == 0.0) {
      if (num < 0.0) return false;  // parallel and outside
      continue;
    }
    const double t = num / denom;
    if (denom < 0.0) {
      t0 = std::max(t0, t);
    } else {
      t1 = std::min(t1, t);
    }
    if (t0 > t1) return false;
  }
  return true;
}

}  // namespace

double arc_length(const std::vector<Vec2>& pts, bool closed) {
  double total = 0.0;
  const size_t n = pts.size();
  if (n < 2) return 0.0;
  for (size_t i = 0; i + 1 < n; ++i) total += euclidean(pts[i], pts[i + 1]);
  if (closed) total += euclidean(pts[n - 1], pts[0]);
  return total;
}

MapElement resample_element(const std::vector<Vec2>& raw_points,
                            ElementKind kind, int n_points) {
  const bool closed = is_polygon(kind.geometry);
  const int min_points = closed ? 3 : 2;
  if (n_points < min_points) {
    throw std::invalid_argument(
        std::string("resample_element: n_points must be >= ") +
        std::to_string(min_points) + " for " + geometry_name(kind.geometry));
  }
  if (count_distinct(raw_points) < min_points) {
    throw std::invalid_argument(
        std::string("resample_element: need >= ") + std::to_string(min_points) +
        " distinct input points for " + geometry_name(kind.geometry));
  }

  // Segment list; closed geometry wraps back to the first point.
  std::vector<Vec2> verts = raw_points;
  if (closed) verts.push_back(raw_points.front());

  const size_t nseg = verts.size() - 1;
  std::vector<double> cum(nseg + 1, 0.0);
  for (size_t i = 0; i < nseg; ++i) {
    cum[i + 1] = cum[i] + euclidean(verts[i], verts[i + 1]);
  }
  const double total = cum[nseg];
  if (!(total > 0.0)) {
    throw std::invalid_argument(
        "resample_element: degenerate input, total arc length is zero");
  }

  MapElement out;
  out.kind = kind;
  out.points.resize(n_points);

  const double step = closed ? total / n_points : total / (n_points - 1);
  size_t seg = 0;
  for (int k = 0; k < n_points; ++k) {
    if (!closed && k == n_points - 1) {
      out.points[k] = verts.back();
      break;
    }
    const double target = k * step;
    while (seg + 1 < nseg && target >= cum[seg + 1]) ++seg;
    const double seg_len = cum[seg + 1] - cum[seg];
    const double u = seg_len > 0.0 ? (target - cum[seg]) / seg_len : 0.0;
    out.points[k] = lerp(verts[seg], verts[seg + 1], std::clamp(u, 0.0, 1.0));
  }
  return out;
}

void validate_frame(const BevFrame& frame) {
  if (!(frame.front > 0.0 && frame.rear > 0.0 && frame.left > 0.0 &&
        frame.right > 0.0 && frame.resolution > 0.0)) {
    throw std::invalid_argument(
        "BevFrame: extents and resolution must all be positive");
  }
}

Vec2 normalize_point(Vec2 p, const BevFrame& frame) {
  return {(p.x + frame.left) / frame.width(), (p.y + frame.rear) / frame.height()};
}

Vec2 denormalize_point(Vec2 p, const BevFrame& frame) {
  return {p.x * frame.width() - frame.left, p.y * frame.height() - frame.rear};
}

MapElement normalize_to_bev(const MapElement& element, const BevFrame& frame) {
  validate_frame(frame);
  // Clipped geometry can sit on the boundary up to rounding; anything beyond
  // a hair outside is a caller error.
  const double eps = 1e-9;
  MapElement out;
  out.kind = element.kind;
  out.points.resize(element.points.size());
  for (size_t j = 0; j < element.points.size(); ++j) {
    const Vec2 p = element.points[j];
    if (!frame.contains(p, eps)) {
      throw std::invalid_argument(
          "normalize_to_bev: point " + std::to_string(j) + " (" +
          std::to_string(p.x) + ", " + std::to_string(p.y) +
          ") lies outside the BEV frame");
    }
    Vec2 q = normalize_point(p, frame);
    out.points[j] = {std::clamp(q.x, 0.0, 1.0), std::clamp(q.y, 0.0, 1.0)};
  }
  return out;
}

MapElement denormalize_from_bev(const MapElement& element, const BevFrame& frame) {
  validate_frame(frame);
  MapElement out;
  out.kind = element.kind;
  out.points.resize(element.points.size());
  for (size_t j = 0; j < element.points.size(); ++j) {
    out.points[j] = denormalize_point(element.points[j], frame);
  }
  return out;
}

std::optional<std::vector<Vec2>> clip_to_frame(const std::vector<Vec2>& raw_points,
                                               GeometryKind geometry,
                                               const BevFrame& frame) {
  validate_frame(frame);
  if (raw_points.size() < 2) return std::nullopt;

  if (!is_polygon(geometry)) {
    // Collect contiguous inside runs; keep the longest by arc length.
    std::vector<std::vector<Vec2>> runs;
    std::vector<Vec2> current;
    auto flush = [&]() {
      if (current.size() >= 2) runs.push_back(current);
      current.clear();
    };
    for (size_t i = 0; i + 1 < raw_points.size(); ++i) {
      double t0, t1;
      if (!clip_segment(raw_points[i], raw_points[i + 1], frame, t0, t1)) {
        flush();
        continue;
      }
      const Vec2 a = lerp(raw_points[i], raw_points[i + 1], t0);
      const Vec2 b = lerp(raw_points[i], raw_points[i + 1], t1);
      const bool connects =
          !current.empty() && std::abs(current.back().x - a.x) <= 1e-12 &&
          std::abs(current.back().y - a.y) <= 1e-12;
      if (!connects) {
        flush();
        current.push_back(a);
      }
      current.push_back(b);
      if (t1 < 1.0) flush();  // exited the frame mid-segment
    }
    flush();

    const std::vector<Vec2>* best = nullptr;
    double best_len = 0.0;
    for (const auto& run : runs) {
      const double len = arc_length(run, false);
      if (best == nullptr || len > best_len) {
        best = &run;
        best_len = len;
      }
    }
    if (best == nullptr || !(best_len > 0.0)) return std::nullopt;
    return *best;
  }

  // Sutherland-Hodgman against the four frame half-planes.
  auto clip_half_plane = [](const std::vector<Vec2>& poly, auto inside,
                            auto intersect) {
    std::vector<Vec2> out;
    const size_t n = poly.size();
    for (size_t i = 0; i < n; ++i) {
      const Vec2 cur = poly[i];
      const Vec2 nxt = poly[(i + 1) % n];
      const bool cur_in = inside(cur);
      const bool nxt_in = inside(nxt);
      if (cur_in) out.push_back(cur);
      if (cur_in != nxt_in) out.push_back(intersect(cur, nxt));
    }
    return out;
  };

  std::vector<Vec2> poly = raw_points;
  struct Edge {
    int axis;      // 0 = x, 1 = y
    double bound;
    int sign;      // +1: coord >= bound, -1: coord <= bound
  };
  const Edge edges[4] = {{0, -frame.left, +1},
                         {0, frame.right, -1},
                         {1, -frame.rear, +1},
                         {1, frame.front, -1}};
  for (const Edge& e : edges) {
    auto coord = [&e](Vec2 p) { return e.axis == 0 ? p.x : p.y; };
    auto inside = [&](Vec2 p) {
      return e.sign > 0 ? coord(p) >= e.bound : coord(p) <= e.bound;
    };
    auto intersect = [&](Vec2 a, Vec2 b) {
      const double t = (e.bound - coord(a)) / (coord(b) - coord(a));
      return lerp(a, b, std::clamp(t, 0.0, 1.0));
    };
    poly = clip_half_plane(poly, inside, intersect);
    if (poly.empty()) return std::nullopt;
  }

  // Drop consecutive duplicates (and a duplicated closing point).
  std::vector<Vec2> cleaned;
  for (const Vec2& p : poly) {
    if (cleaned.empty() || !(cleaned.back() == p)) cleaned.push_back(p);
  }
  while (cleaned.size() > 1 && cleaned.front() == cleaned.back()) {
    cleaned.pop_back();
  }
  if (cleaned.size() < 3 || !(arc_length(cleaned, true) > 0.0)) {
    return std::nullopt;
  }
  return cleaned;
}

}  // namespace vecmap
