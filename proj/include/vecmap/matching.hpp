// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <array>
#include <vector>

#include "vecmap/mat.hpp"
#include "vecmap/permutation.hpp"
#include "vecmap/types.hpp"

namespace vecmap {

using ScoreVector = std::array<double, kScoreSlots>;

ScoreVector softmax_scores(const ScoreVector& logits);

// N predicted elements with class logits. Scores are always the softmax of
// the stored logits, so gradients through the classification head stay
// consistent with the probabilities used for matching.
struct PredictionSet {
  std::vector<MapElement> elements;  // BEV-normalized coordinates
  std::vector<ScoreVector> logits;
  std::vector<ScoreVector> scores;

  int size() const { return static_cast<int>(elements.size()); }

  static PredictionSet from_logits(std::vector<MapElement> elements,
                                   std::vector<ScoreVector> logits);
  // Builds logits as log(max(p, 1e-300)) so that softmax reproduces p.
  static PredictionSet from_scores(std::vector<MapElement> elements,
                                   std::vector<ScoreVector> probabilities);
};

struct GroundTruthSet {
  std::vector<MapElement> elements;  // BEV-normalized; class in kind.class_label

  int size() const { return static_cast<int>(elements.size()); }
};

struct MatchedPair {
  int pred = -1;
  int gt = -1;
  int gamma_index = 0;      // index into the gt element's permutation group
  double point_cost = 0.0;  // best-permutation Manhattan cost
};

struct MatchResult {
  std::vector<MatchedPair> pairs;     // one per gt, ordered by gt index
  std::vector<int> unmatched_preds;   // ascending; these predictions get the empty class
};

struct PointMatch {
  double cost = 0.0;
  int gamma_index = 0;
};

// min over gamma in group of sum_j |pred_j - gt_{gamma(j)}|_1.
// Ties break toward the lowest permutation index.
PointMatch point_matching_cost(const MapElement& pred, const MapElement& gt,
                               const PermutationGroup& group);

// Negated probability of the ground-truth class, the usual set-prediction
// matching cost.
double classification_cost(const ScoreVector& scores, int label);

// Minimum-cost injective assignment of each column to a distinct row,
// R >= C, all costs finite. Returns the column -> row map; among equal-cost
// optima the lexicographically smallest assignment vector is returned.
std::vector<int> hungarian_assign(const Mat& costs);

struct MatchWeights {
  double lambda_c = 10.0;
  double lambda_p = 5.0;
};

// Instance-level matching: builds the (pred, gt) cost matrix from
// classification and best-permutation point costs, then assigns gts to
// predictions with hungarian_assign.
MatchResult instance_matching(const PredictionSet& preds,
                              const GroundTruthSet& gts,
                              const MatchWeights& weights);

}  // namespace vecmap
