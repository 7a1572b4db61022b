// SPDX-License-Identifier: Apache-2.0
#include "vecmap/losses.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

namespace vecmap {

namespace {

constexpr double kProbEps = 1e-12;

double sign0(double x) { return x > 0.0 ? 1.0 : (x < 0.0 ? -1.0 : 0.0); }

double alpha_for_label(int label, double alpha) {
  return label == kNoObject ? 1.0 - alpha : alpha;
}

// d focal / d p_t; the clamp region contributes no log-derivative.
double focal_grad_pt(double pt, int label, double alpha, double gamma) {
  const double at = alpha_for_label(label, alpha);
  const double one_minus = std::max(1.0 - pt, 0.0);
  const double log_pt = std::log(std::max(pt, kProbEps));
  double grad = 0.0;
  if (gamma > 0.0 && log_pt != 0.0) {
    grad = at * gamma * std::pow(one_minus, gamma - 1.0) * log_pt;
  }
  if (pt >= kProbEps) grad -= at * std::pow(one_minus, gamma) / pt;
  return grad;
}

void check_pair_sizes(const MapElement& pred, const MapElement& gt,
                      const Permutation& gamma) {
  if (pred.n_points() != gt.n_points() ||
      static_cast<int>(gamma.size()) != gt.n_points()) {
    throw std::invalid_argument("loss: prediction, gt and permutation sizes differ");
  }
}

}  // namespace

int edge_count(const MapElement& element) {
  return is_polygon(element.kind.geometry) ? element.n_points()
                                           : element.n_points() - 1;
}

double focal_loss(const ScoreVector& scores, int label, double alpha,
                  double gamma) {
  if (label < 0 || label >= kScoreSlots) {
    throw std::invalid_argument("focal_loss: label " + std::to_string(label) +
                                " out of range");
  }
  const double pt = scores[label];
  const double at = alpha_for_label(label, alpha);
  return -at * std::pow(std::max(1.0 - pt, 0.0), gamma) *
         std::log(std::max(pt, kProbEps));
}

double p2p_loss(const MapElement& pred, const MapElement& gt,
                const Permutation& gamma) {
  check_pair_sizes(pred, gt, gamma);
  double total = 0.0;
  for (int j = 0; j < pred.n_points(); ++j) {
    total += manhattan(pred.points[j], gt.points[gamma[j]]);
  }
  return total;
}

double edge_direction_loss(const MapElement& pred, const MapElement& gt,
                           const Permutation& gamma) {
  check_pair_sizes(pred, gt, gamma);
  const int n = pred.n_points();
  const int edges = edge_count(gt);
  double total = 0.0;
  for (int j = 0; j < edges; ++j) {
    const int j1 = (j + 1) % n;
    const Vec2 ep = pred.points[j1] - pred.points[j];
    const Vec2 eg = gt.points[gamma[j1]] - gt.points[gamma[j]];
    const double na = std::hypot(ep.x, ep.y);
    const double nb = std::hypot(eg.x, eg.y);
    if (na == 0.0 || nb == 0.0) continue;  // degenerate edge: zero contribution
    total -= (ep.x * eg.x + ep.y * eg.y) / (na * nb);
  }
  return total;
}

LossBreakdown total_loss(const PredictionSet& preds, const GroundTruthSet& gts,
                         const MatchResult& match, const LossWeights& weights) {
  const int n = preds.size();
  LossBreakdown out;
  out.point_grads.resize(n);
  for (int i = 0; i < n; ++i) {
    out.point_grads[i].assign(preds.elements[i].points.size(), Vec2{});
  }
  out.logit_grads.assign(n, ScoreVector{});

  std::vector<int> label_of_pred(n, kNoObject);
  std::vector<const MatchedPair*> pair_of_pred(n, nullptr);
  for (const MatchedPair& pair : match.pairs) {
    if (pair.pred < 0 || pair.pred >= n || pair.gt < 0 || pair.gt >= gts.size()) {
      throw std::invalid_argument("total_loss: match indices out of range");
    }
    label_of_pred[pair.pred] =
        static_cast<int>(gts.elements[pair.gt].kind.class_label);
    pair_of_pred[pair.pred] = &pair;
  }

  // Classification: every prediction contributes, unmatched against the
  // empty class.
  for (int i = 0; i < n; ++i) {
    const int label = label_of_pred[i];
    out.cls += focal_loss(preds.scores[i], label, weights.focal_alpha,
                          weights.focal_gamma);
    const double dpt = focal_grad_pt(preds.scores[i][label], label,
                                     weights.focal_alpha, weights.focal_gamma);
    const double pt = preds.scores[i][label];
    for (int k = 0; k < kScoreSlots; ++k) {
      const double softmax_jac = pt * ((k == label ? 1.0 : 0.0) - preds.scores[i][k]);
      out.logit_grads[i][k] = weights.lambda_c * dpt * softmax_jac;
    }
  }

  // Point and direction terms over matched pairs.
  for (const MatchedPair& pair : match.pairs) {
    const MapElement& pred = preds.elements[pair.pred];
    const MapElement& gt = gts.elements[pair.gt];
    const PermutationGroup group =
        enumerate_permutations(gt.kind.geometry, gt.n_points());
    if (pair.gamma_index < 0 || pair.gamma_index >= group.size()) {
      throw std::invalid_argument("total_loss: gamma index out of range");
    }
    const Permutation& gamma = group.perms[pair.gamma_index];

    out.p2p += p2p_loss(pred, gt, gamma);
    out.dir += edge_direction_loss(pred, gt, gamma);

    std::vector<Vec2>& grads = out.point_grads[pair.pred];
    const int np = pred.n_points();
    for (int j = 0; j < np; ++j) {
      const Vec2 g = gt.points[gamma[j]];
      grads[j].x += weights.lambda_p * sign0(pred.points[j].x - g.x);
      grads[j].y += weights.lambda_p * sign0(pred.points[j].y - g.y);
    }
    const int edges = edge_count(gt);
    for (int j = 0; j < edges; ++j) {
      const int j1 = (j + 1) % np;
      const Vec2 ep = pred.points[j1] - pred.points[j];
      const Vec2 eg = gt.points[gamma[j1]] - gt.points[gamma[j]];
      const double na = std::hypot(ep.x, ep.y);
      const double nb = std::hypot(eg.x, eg.y);
      if (na == 0.0 || nb == 0.0) continue;
      const double dot = ep.x * eg.x + ep.y * eg.y;
      // d(-cos)/d(pred edge)
      const Vec2 dedge{-eg.x / (na * nb) + dot * ep.x / (na * na * na * nb),
                       -eg.y / (na * nb) + dot * ep.y / (na * na * na * nb)};
      grads[j1].x += weights.lambda_d * dedge.x;
      grads[j1].y += weights.lambda_d * dedge.y;
      grads[j].x -= weights.lambda_d * dedge.x;
      grads[j].y -= weights.lambda_d * dedge.y;
    }
  }

  out.total = weights.lambda_c * out.cls + weights.lambda_p * out.p2p +
              weights.lambda_d * out.dir;
  return out;
}

}  // namespace vecmap
