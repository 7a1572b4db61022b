// SPDX-License-Identifier: Apache-2.0
#include "vecmap/raster.hpp"

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <fstream>
#include <stdexcept>

#include "vecmap/geometry.hpp"

namespace vecmap {

namespace {

struct Pixel {
  int row = 0;
  int col = 0;
};

Pixel to_pixel(Vec2 p, const BevFrame& frame, int height, int width) {
  int col = static_cast<int>(std::floor((p.x + frame.left) / frame.resolution));
  int row = static_cast<int>(std::floor((frame.front - p.y) / frame.resolution));
  col = std::clamp(col, 0, width - 1);
  row = std::clamp(row, 0, height - 1);
  return {row, col};
}

void draw_line(RasterCanvas& canvas, Pixel a, Pixel b, std::uint8_t bit) {
  // Integer midpoint walk (Bresenham).
  const int dx = std::abs(b.col - a.col);
  const int dy = -std::abs(b.row - a.row);
  const int sx = a.col < b.col ? 1 : -1;
  const int sy = a.row < b.row ? 1 : -1;
  int err = dx + dy;
  int col = a.col, row = a.row;
  while (true) {
    canvas.at(row, col) |= bit;
    if (col == b.col && row == b.row) break;
    const int e2 = 2 * err;
    if (e2 >= dy) {
      err += dy;
      col += sx;
    }
    if (e2 <= dx) {
      err += dx;
      row += sy;
    }
  }
}

}  // namespace

RasterCanvas rasterize(const std::vector<MapElement>& elements,
                       const BevFrame& frame) {
  validate_frame(frame);
  RasterCanvas canvas;
  canvas.resolution = frame.resolution;
  canvas.height = static_cast<int>(std::lround(frame.height() / frame.resolution));
  canvas.width = static_cast<int>(std::lround(frame.width() / frame.resolution));
  canvas.origin = {-frame.left, frame.front};
  canvas.grid.assign(static_cast<size_t>(canvas.height) * canvas.width, 0);

  for (const MapElement& element : elements) {
    const std::uint8_t bit =
        static_cast<std::uint8_t>(1u << static_cast<int>(element.kind.class_label));
    const int n = element.n_points();
    if (n == 0) continue;
    if (n == 1) {
      const Pixel p = to_pixel(element.points[0], frame, canvas.height, canvas.width);
      canvas.at(p.row, p.col) |= bit;
      continue;
    }
    const int segments = is_polygon(element.kind.geometry) ? n : n - 1;
    for (int j = 0; j < segments; ++j) {
      const Pixel a = to_pixel(element.points[j], frame, canvas.height, canvas.width);
      const Pixel b =
          to_pixel(element.points[(j + 1) % n], frame, canvas.height, canvas.width);
      draw_line(canvas, a, b, bit);
    }
  }
  return canvas;
}

std::vector<std::uint8_t> encode_ppm(const RasterCanvas& canvas) {
  // Class colors; overlaps resolve by class order.
  static constexpr std::uint8_t kColors[kNumClasses][3] = {
      {153, 51, 204},  // pedestrian crossing: purple
      {255, 204, 0},   // lane divider: yellow
      {0, 102, 255},   // stop line: blue
  };
  std::string header = "P6\n" + std::to_string(canvas.width) + " " +
                       std::to_string(canvas.height) + "\n255\n";
  std::vector<std::uint8_t> bytes(header.begin(), header.end());
  bytes.reserve(bytes.size() + static_cast<size_t>(canvas.height) * canvas.width * 3);
  for (int r = 0; r < canvas.height; ++r) {
    for (int c = 0; c < canvas.width; ++c) {
      const std::uint8_t mask = canvas.at(r, c);
      std::uint8_t rgb[3] = {255, 255, 255};
      for (int cls = 0; cls < kNumClasses; ++cls) {
        if (mask & (1u << cls)) {
          rgb[0] = kColors[cls][0];
          rgb[1] = kColors[cls][1];
          rgb[2] = kColors[cls][2];
          break;
        }
      }
      bytes.push_back(rgb[0]);
      bytes.push_back(rgb[1]);
      bytes.push_back(rgb[2]);
    }
  }
  return bytes;
}

void emit_plot(const RasterCanvas& canvas, const std::string& path) {
  const std::vector<std::uint8_t> bytes = encode_ppm(canvas);
  std::ofstream out(path, std::ios::binary);
  if (!out) {
    throw std::runtime_error("emit_plot: cannot open " + path);
  }
  out.write(reinterpret_cast<const char*>(bytes.data()),
            static_cast<std::streamsize>(bytes.size()));
  if (!out) {
    throw std::runtime_error("emit_plot: write failed for " + path);
  }
}

}  // namespace vecmap
