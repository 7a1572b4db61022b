// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "vecmap/types.hpp"

namespace vecmap {

// Per-pixel class bitmask image of the BEV frame. Row 0 is the front edge
// (y axis points up); pixel (0,0) covers the front-left corner.
struct RasterCanvas {
  int height = 0;
  int width = 0;
  double resolution = 0.15;
  Vec2 origin;  // ego coordinates of the top-left pixel corner

  std::vector<std::uint8_t> grid;  // bit c set: class c drawn on this pixel

  std::uint8_t& at(int row, int col) {
    return grid[static_cast<size_t>(row) * width + col];
  }
  std::uint8_t at(int row, int col) const {
    return grid[static_cast<size_t>(row) * width + col];
  }
};

// Draws polylines as 1-pixel paths and polygons as closed outlines with an
// integer midpoint line walk. Deterministic for fixed input.
RasterCanvas rasterize(const std::vector<MapElement>& elements,
                       const BevFrame& frame);

// Binary PPM (P6) bytes with the class color convention: lane dividers
// yellow, stop lines blue, pedestrian crossings purple, background white.
std::vector<std::uint8_t> encode_ppm(const RasterCanvas& canvas);

void emit_plot(const RasterCanvas& canvas, const std::string& path);

}  // namespace vecmap
