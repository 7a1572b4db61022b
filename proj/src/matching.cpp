// SPDX-License-Identifier: Apache-2.0
#include "vecmap/matching.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <stdexcept>
#include <string>

namespace vecmap {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

void validate_scores(const ScoreVector& s, int index) {
  double sum = 0.0;
  for (double v : s) {
    if (!(v >= 0.0)) {
      throw std::invalid_argument("prediction " + std::to_string(index) +
                                  ": class scores must be non-negative");
    }
    sum += v;
  }
  if (std::abs(sum - 1.0) > 1e-6) {
    throw std::invalid_argument("prediction " + std::to_string(index) +
                                ": class scores must sum to 1");
  }
}

// Jonker-Volgenant shortest augmenting paths, columns driven (every column
// gets a row). 1-based internals, 0-based interface.
std::vector<int> jv_solve(const Mat& costs) {
  const int n = costs.cols;  // workers: every column must be assigned
  const int m = costs.rows;  // jobs: rows, used at most once
  std::vector<double> u(n + 1, 0.0), v(m + 1, 0.0);
  std::vector<int> p(m + 1, 0), way(m + 1, 0);
  for (int i = 1; i <= n; ++i) {
    p[0] = i;
    int j0 = 0;
    std::vector<double> minv(m + 1, kInf);
    std::vector<char> used(m + 1, 0);
    do {
      used[j0] = 1;
      const int i0 = p[j0];
      int j1 = 0;
      double delta = kInf;
      for (int j = 1; j <= m; ++j) {
        if (used[j]) continue;
        const double cur = costs.at(j - 1, i0 - 1) - u[i0] - v[j];
        if (cur < minv[j]) {
          minv[j] = cur;
          way[j] = j0;
        }
        if (minv[j] < delta) {
          delta = minv[j];
          j1 = j;
        }
      }
      for (int j = 0; j <= m; ++j) {
        if (used[j]) {
          u[p[j]] += delta;
          v[j] -= delta;
        } else {
          minv[j] -= delta;
        }
      }
      j0 = j1;
    } while (p[j0] != 0);
    do {
      const int j1 = way[j0];
      p[j0] = p[j1];
      j0 = j1;
    } while (j0);
  }
  std::vector<int> assign(n, -1);
  for (int j = 1; j <= m; ++j) {
    if (p[j] != 0) assign[p[j] - 1] = j - 1;
  }
  return assign;
}

// Optimal total over a subproblem: the given columns, over rows not banned.
double jv_subtotal(const Mat& costs, const std::vector<int>& cols,
                   const std::vector<char>& row_banned) {
  if (cols.empty()) return 0.0;
  std::vector<int> rows;
  rows.reserve(costs.rows);
  for (int r = 0; r < costs.rows; ++r) {
    if (!row_banned[r]) rows.push_back(r);
  }
  Mat sub(static_cast<int>(rows.size()), static_cast<int>(cols.size()));
  for (size_t r = 0; r < rows.size(); ++r) {
    for (size_t c = 0; c < cols.size(); ++c) {
      sub.at(static_cast<int>(r), static_cast<int>(c)) =
          costs.at(rows[r], cols[c]);
    }
  }
  const std::vector<int> assign = jv_solve(sub);
  double total = 0.0;
  for (size_t c = 0; c < cols.size(); ++c) total += sub.at(assign[c], static_cast<int>(c));
  return total;
}

}  // namespace

ScoreVector softmax_scores(const ScoreVector& logits) {
  double mx = logits[0];
  for (double z : logits) mx = std::max(mx, z);
  ScoreVector out{};
  double sum = 0.0;
  for (int k = 0; k < kScoreSlots; ++k) {
    out[k] = std::exp(logits[k] - mx);
    sum += out[k];
  }
  for (double& v : out) v /= sum;
  return out;
}

PredictionSet PredictionSet::from_logits(std::vector<MapElement> elements,
                                         std::vector<ScoreVector> logits) {
  if (elements.size() != logits.size()) {
    throw std::invalid_argument("PredictionSet: one logit vector per element required");
  }
  PredictionSet set;
  set.elements = std::move(elements);
  set.logits = std::move(logits);
  set.scores.reserve(set.logits.size());
  for (size_t i = 0; i < set.logits.size(); ++i) {
    for (double z : set.logits[i]) {
      if (!std::isfinite(z)) {
        throw std::invalid_argument("prediction " + std::to_string(i) +
                                    ": logits must be finite");
      }
    }
    set.scores.push_back(softmax_scores(set.logits[i]));
    validate_scores(set.scores.back(), static_cast<int>(i));
  }
  return set;
}

PredictionSet PredictionSet::from_scores(std::vector<MapElement> elements,
                                         std::vector<ScoreVector> probabilities) {
  std::vector<ScoreVector> logits(probabilities.size());
  for (size_t i = 0; i < probabilities.size(); ++i) {
    validate_scores(probabilities[i], static_cast<int>(i));
    for (int k = 0; k < kScoreSlots; ++k) {
      logits[i][k] = std::log(std::max(probabilities[i][k], 1e-300));
    }
  }
  return from_logits(std::move(elements), std::move(logits));
}

PointMatch point_matching_cost(const MapElement& pred, const MapElement& gt,
                               const PermutationGroup& group) {
  const int n = gt.n_points();
  if (pred.n_points() != n) {
    throw std::invalid_argument(
        "point_matching_cost: point counts differ (" +
        std::to_string(pred.n_points()) + " vs " + std::to_string(n) + ")");
  }
  if (group.n_points != n || group.geometry != gt.kind.geometry) {
    throw std::invalid_argument(
        "point_matching_cost: permutation group does not match the gt element");
  }

  PointMatch best{kInf, 0};
  for (int k = 0; k < group.size(); ++k) {
    const Permutation& gamma = group.perms[k];
    double cost = 0.0;
    for (int j = 0; j < n; ++j) {
      cost += manhattan(pred.points[j], gt.points[gamma[j]]);
    }
    if (cost < best.cost) {
      best.cost = cost;
      best.gamma_index = k;
    }
  }
  return best;
}

double classification_cost(const ScoreVector& scores, int label) {
  if (label < 0 || label >= kScoreSlots) {
    throw std::invalid_argument("classification_cost: label " +
                                std::to_string(label) + " out of range");
  }
  return -scores[label];
}

std::vector<int> hungarian_assign(const Mat& costs) {
  const int rows = costs.rows;
  const int cols = costs.cols;
  if (rows < cols) {
    throw std::invalid_argument("hungarian_assign: need rows >= cols, got " +
                                std::to_string(rows) + " x " + std::to_string(cols));
  }
  if (cols == 0) return {};
  for (double v : costs.data) {
    if (!std::isfinite(v)) {
      throw std::invalid_argument("hungarian_assign: cost entries must be finite");
    }
  }

  // JV gives an optimum; a column-ascending argmin pass then picks the
  // lexicographically smallest assignment vector among equal-cost optima.
  std::vector<int> result(cols, -1);
  std::vector<char> row_used(rows, 0);
  double prefix = 0.0;
  for (int c = 0; c < cols; ++c) {
    std::vector<int> rest_cols;
    for (int c2 = c + 1; c2 < cols; ++c2) rest_cols.push_back(c2);
    int best_row = -1;
    double best_total = kInf;
    for (int r = 0; r < rows; ++r) {
      if (row_used[r]) continue;
      row_used[r] = 1;
      const double total = prefix + costs.at(r, c) + jv_subtotal(costs, rest_cols, row_used);
      row_used[r] = 0;
      if (total < best_total) {
        best_total = total;
        best_row = r;
      }
    }
    result[c] = best_row;
    row_used[best_row] = 1;
    prefix += costs.at(best_row, c);
  }
  return result;
}

MatchResult instance_matching(const PredictionSet& preds,
                              const GroundTruthSet& gts,
                              const MatchWeights& weights) {
  const int n = preds.size();
  const int m = gts.size();
  if (m > n) {
    throw std::invalid_argument(
        "instance_matching: ground truth count " + std::to_string(m) +
        " exceeds the prediction budget " + std::to_string(n));
  }
  if (static_cast<int>(preds.scores.size()) != n) {
    throw std::invalid_argument("instance_matching: malformed prediction set");
  }

  MatchResult result;
  if (m == 0) {
    result.unmatched_preds.resize(n);
    for (int i = 0; i < n; ++i) result.unmatched_preds[i] = i;
    return result;
  }

  for (int c = 0; c < m; ++c) {
    if (gts.elements[c].n_points() == 0) {
      throw std::invalid_argument("instance_matching: empty gt element " +
                                  std::to_string(c));
    }
  }

  // One permutation group per distinct (geometry, n_points) among the gts.
  std::map<std::pair<int, int>, PermutationGroup> groups;
  for (const MapElement& gt : gts.elements) {
    const auto key = std::make_pair(static_cast<int>(gt.kind.geometry), gt.n_points());
    if (!groups.count(key)) {
      groups.emplace(key, enumerate_permutations(gt.kind.geometry, gt.n_points()));
    }
  }

  for (int r = 0; r < n; ++r) {
    for (int c = 0; c < m; ++c) {
      if (preds.elements[r].n_points() != gts.elements[c].n_points()) {
        throw std::invalid_argument(
            "instance_matching: prediction/gt point counts differ");
      }
    }
  }

  // Pair costs are independent; fill order does not affect the result.
  Mat costs(n, m);
  Mat gamma_index(n, m);
#pragma omp parallel for collapse(2) schedule(static)
  for (int r = 0; r < n; ++r) {
    for (int c = 0; c < m; ++c) {
      const MapElement& gt = gts.elements[c];
      const auto key = std::make_pair(static_cast<int>(gt.kind.geometry), gt.n_points());
      const PointMatch pm =
          point_matching_cost(preds.elements[r], gt, groups.at(key));
      const double cls =
          classification_cost(preds.scores[r], static_cast<int>(gt.kind.class_label));
      costs.at(r, c) = weights.lambda_c * cls + weights.lambda_p * pm.cost;
      gamma_index.at(r, c) = pm.gamma_index;
    }
  }

  const std::vector<int> assign = hungarian_assign(costs);

  std::vector<char> matched(n, 0);
  result.pairs.reserve(m);
  for (int c = 0; c < m; ++c) {
    const int r = assign[c];
    matched[r] = 1;
    MatchedPair pair;
    pair.pred = r;
    pair.gt = c;
    pair.gamma_index = static_cast<int>(gamma_index.at(r, c));
    const auto key = std::make_pair(static_cast<int>(gts.elements[c].kind.geometry),
                                    gts.elements[c].n_points());
    pair.point_cost =
        point_matching_cost(preds.elements[r], gts.elements[c], groups.at(key)).cost;
    result.pairs.push_back(pair);
  }
  for (int r = 0; r < n; ++r) {
    if (!matched[r]) result.unmatched_preds.push_back(r);
  }
  return result;
}

}  // namespace vecmap
