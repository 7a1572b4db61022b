// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <vector>

#include "vecmap/types.hpp"

namespace vecmap {

using Permutation = std::vector<int>;

// The equivalence group of point orderings for one geometry kind:
//   undirected polyline  -> identity and reversal (2 members)
//   directed polyline    -> identity only (1 member)
//   polygon              -> all cyclic shifts in both orientations (2*n members)
// The identity is always perms[0].
struct PermutationGroup {
  GeometryKind geometry = GeometryKind::PolylineUndirected;
  int n_points = 0;
  std::vector<Permutation> perms;

  int size() const { return static_cast<int>(perms.size()); }
};

PermutationGroup enumerate_permutations(GeometryKind geometry, int n_points);

bool is_bijection(const Permutation& gamma, int n);

// output.points[j] = input.points[gamma[j]]
MapElement apply_permutation(const MapElement& element, const Permutation& gamma);

Permutation invert_permutation(const Permutation& gamma);

// compose(a, b)[j] = a[b[j]]; applying compose(a, b) to an element is the
// same as applying a first and then b.
Permutation compose_permutations(const Permutation& a, const Permutation& b);

}  // namespace vecmap
