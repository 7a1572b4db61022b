// SPDX-License-Identifier: Apache-2.0
#include "vecmap/permutation.hpp"

#include <stdexcept>
#include <string>

namespace vecmap {

bool is_bijection(const Permutation& gamma, int n) {
  if (static_cast<int>(gamma.size()) != n) return false;
  std::vector<char> seen(n, 0);
  for (int v : gamma) {
    if (v < 0 || v >= n || seen[v]) return false;
    seen[v] = 1;
  }
  return true;
}

PermutationGroup enumerate_permutations(GeometryKind geometry, int n_points) {
  const int min_points = is_polygon(geometry) ? 3 : 2;
  if (n_points < min_points) {
    throw std::invalid_argument(
        std::string("enumerate_permutations: ") + geometry_name(geometry) +
        " requires n_points >= " + std::to_string(min_points) + ", got " +
        std::to_string(n_points));
  }

  PermutationGroup group;
  group.geometry = geometry;
  group.n_points = n_points;

  const int n = n_points;
  auto forward_shift = [n](int m) {
    Permutation g(n);
    for (int j = 0; j < n; ++j) g[j] = (j + m) % n;
    return g;
  };
  auto reversed_shift = [n](int m) {
    Permutation g(n);
    for (int j = 0; j < n; ++j) g[j] = (n - 1) - (j + m) % n;
    return g;
  };

  switch (geometry) {
    case GeometryKind::PolylineUndirected:
      group.perms.push_back(forward_shift(0));
      group.perms.push_back(reversed_shift(0));
      break;
    case GeometryKind::PolylineDirected:
      group.perms.push_back(forward_shift(0));
      break;
    case GeometryKind::Polygon:
      for (int m = 0; m < n; ++m) {
        group.perms.push_back(forward_shift(m));
        group.perms.push_back(reversed_shift(m));
      }
      break;
  }
  return group;
}

MapElement apply_permutation(const MapElement& element, const Permutation& gamma) {
  const int n = element.n_points();
  if (!is_bijection(gamma, n)) {
    throw std::invalid_argument(
        "apply_permutation: gamma is not a bijection on {0.." +
        std::to_string(n - 1) + "}");
  }
  MapElement out;
  out.kind = element.kind;
  out.points.resize(n);
  for (int j = 0; j < n; ++j) out.points[j] = element.points[gamma[j]];
  return out;
}

Permutation invert_permutation(const Permutation& gamma) {
  const int n = static_cast<int>(gamma.size());
  if (!is_bijection(gamma, n)) {
    throw std::invalid_argument("invert_permutation: input is not a bijection");
  }
  Permutation inv(n);
  for (int j = 0; j < n; ++j) inv[gamma[j]] = j;
  return inv;
}

Permutation compose_permutations(const Permutation& a, const Permutation& b) {
  const int n = static_cast<int>(a.size());
  if (b.size() != a.size()) {
    throw std::invalid_argument("compose_permutations: size mismatch");
  }
  Permutation c(n);
  for (int j = 0; j < n; ++j) c[j] = a[b[j]];
  return c;
}

}  // namespace vecmap
