// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <vector>

#include "vecmap/matching.hpp"
#include "vecmap/permutation.hpp"
#include "vecmap/types.hpp"

namespace vecmap {

struct LossWeights {
  double lambda_c = 10.0;
  double lambda_p = 5.0;
  double lambda_d = 1.0;
  double focal_alpha = 0.25;
  double focal_gamma = 2.0;
};

struct LossBreakdown {
  double cls = 0.0;
  double p2p = 0.0;
  double dir = 0.0;
  double total = 0.0;  // always lambda_c*cls + lambda_p*p2p + lambda_d*dir
  // d total / d predicted coordinate, per prediction per point.
  std::vector<std::vector<Vec2>> point_grads;
  // d total / d class logit, per prediction.
  std::vector<ScoreVector> logit_grads;
};

// -alpha_t (1-p_t)^gamma log(p_t) with p_t = scores[label]. alpha_t is alpha
// for real classes and 1-alpha for the empty class; p_t is clamped at 1e-12
// inside the log so the result stays finite.
double focal_loss(const ScoreVector& scores, int label, double alpha,
                  double gamma);

// sum_j |pred_j - gt_{gamma(j)}|_1
double p2p_loss(const MapElement& pred, const MapElement& gt,
                const Permutation& gamma);

// -sum_j cos_similarity(pred edge j, permuted-gt edge j). Polylines have
// n-1 edges, polygons n (wrap-around). A zero-length edge contributes 0.
double edge_direction_loss(const MapElement& pred, const MapElement& gt,
                           const Permutation& gamma);

// Composite loss over a matched scene: focal classification over all N
// predictions (unmatched ones against the empty class), point and direction
// terms over matched pairs only. Gradients are analytic.
LossBreakdown total_loss(const PredictionSet& preds, const GroundTruthSet& gts,
                         const MatchResult& match, const LossWeights& weights);

int edge_count(const MapElement& element);

}  // namespace vecmap
