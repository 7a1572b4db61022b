// SPDX-License-Identifier: Apache-2.0
#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>
#include <random>
#include <vector>

#include "vecmap/losses.hpp"

using namespace vecmap;

namespace {

constexpr ElementKind kLine{GeometryKind::PolylineUndirected,
                            ClassLabel::LaneDivider};

MapElement make_element(std::vector<Vec2> pts, ElementKind kind = kLine) {
  MapElement e;
  e.kind = kind;
  e.points = std::move(pts);
  return e;
}

Permutation identity_perm(int n) {
  Permutation p(n);
  for (int j = 0; j < n; ++j) p[j] = j;
  return p;
}

ScoreVector one_hot(int label) {
  ScoreVector s{};
  s[label] = 1.0;
  return s;
}

struct RandomScene {
  std::vector<MapElement> pred_elements;
  std::vector<ScoreVector> pred_logits;
  std::vector<MapElement> gt_elements;
};

RandomScene random_scene(std::mt19937_64& rng, int n_preds, int n_gts, int nv) {
  std::uniform_real_distribution<double> coord(0.0, 1.0);
  std::uniform_real_distribution<double> logit(-2.0, 2.0);
  std::uniform_int_distribution<int> kind_pick(0, 2);
  RandomScene s;
  for (int i = 0; i < n_preds; ++i) {
    MapElement e;
    e.kind = kLine;
    for (int j = 0; j < nv; ++j) e.points.push_back({coord(rng), coord(rng)});
    s.pred_elements.push_back(e);
    ScoreVector z;
    for (double& v : z) v = logit(rng);
    s.pred_logits.push_back(z);
  }
  for (int i = 0; i < n_gts; ++i) {
    MapElement e;
    e.kind.geometry = static_cast<GeometryKind>(kind_pick(rng));
    e.kind.class_label = is_polygon(e.kind.geometry)
                             ? ClassLabel::PedestrianCrossing
                             : (i % 2 == 0 ? ClassLabel::LaneDivider
                                           : ClassLabel::StopLine);
    for (int j = 0; j < nv; ++j) e.points.push_back({coord(rng), coord(rng)});
    s.gt_elements.push_back(e);
  }
  return s;
}

}  // namespace

TEST_CASE("focal loss closed-form values") {
  const double alpha = 0.25, gamma = 2.0;
  CHECK(focal_loss(one_hot(1), 1, alpha, gamma) == 0.0);

  ScoreVector half{};
  half[0] = 0.5;
  half[1] = 0.5;
  const double expected_half = 0.25 * 0.5 * 0.5 * (-std::log(0.5));
  CHECK(focal_loss(half, 0, alpha, gamma) ==
        doctest::Approx(expected_half).epsilon(1e-12));
  CHECK(focal_loss(half, 0, alpha, gamma) == doctest::Approx(0.043322).epsilon(1e-4));

  ScoreVector nine{};
  nine[2] = 0.9;
  nine[3] = 0.1;
  const double expected_nine = 0.25 * 0.01 * (-std::log(0.9));
  CHECK(focal_loss(nine, 2, alpha, gamma) ==
        doctest::Approx(expected_nine).epsilon(1e-10));
  CHECK(focal_loss(nine, 2, alpha, gamma) ==
        doctest::Approx(2.6341e-4).epsilon(1e-3));

  // empty-class weight is 1 - alpha
  ScoreVector empty = one_hot(kNoObject);
  empty[kNoObject] = 0.5;
  empty[0] = 0.5;
  CHECK(focal_loss(empty, kNoObject, alpha, gamma) ==
        doctest::Approx((1.0 - alpha) * 0.25 * (-std::log(0.5))).epsilon(1e-12));

  // clamp keeps zero probabilities finite
  CHECK(std::isfinite(focal_loss(one_hot(0), 1, alpha, gamma)));
}

TEST_CASE("p2p loss: matched permutation and uniform shift") {
  const MapElement gt = make_element({{0, 0}, {0.25, 0.5}, {0.75, 0.25}});
  const Permutation rev{2, 1, 0};
  const MapElement pred = apply_permutation(gt, rev);
  CHECK(p2p_loss(pred, gt, rev) == 0.0);

  MapElement shifted;
  shifted.kind = kLine;
  for (int j = 0; j < 20; ++j) shifted.points.push_back({j * 0.05, 0.0});
  MapElement moved = shifted;
  for (Vec2& p : moved.points) p.x += 1.0;
  CHECK(p2p_loss(moved, shifted, identity_perm(20)) == doctest::Approx(20.0).epsilon(1e-12));
}

TEST_CASE("p2p loss equals the per-coordinate oracle") {
  std::mt19937_64 rng(21);
  std::uniform_real_distribution<double> coord(-1.0, 1.0);
  for (int trial = 0; trial < 50; ++trial) {
    MapElement a = make_element({}), b = make_element({});
    for (int j = 0; j < 4; ++j) {
      a.points.push_back({coord(rng), coord(rng)});
      b.points.push_back({coord(rng), coord(rng)});
    }
    double oracle = 0.0;
    for (int j = 0; j < 4; ++j) {
      oracle += std::abs(a.points[j].x - b.points[j].x);
      oracle += std::abs(a.points[j].y - b.points[j].y);
    }
    CHECK(p2p_loss(a, b, identity_perm(4)) ==
          doctest::Approx(oracle).epsilon(1e-14));
  }
}

TEST_CASE("edge direction loss: aligned, perpendicular, reflected") {
  const MapElement gt =
      make_element({{0, 0}, {0.2, 0.1}, {0.5, 0.3}, {0.6, 0.7}, {0.9, 0.8}});
  CHECK(edge_direction_loss(gt, gt, identity_perm(5)) ==
        doctest::Approx(-4.0).epsilon(1e-12));

  const MapElement horiz = make_element({{0, 0}, {1, 0}, {2, 0}});
  const MapElement vert = make_element({{0, 0}, {0, 1}, {0, 2}});
  CHECK(edge_direction_loss(vert, horiz, identity_perm(3)) ==
        doctest::Approx(0.0).epsilon(1e-12));

  MapElement reflected = gt;
  for (Vec2& p : reflected.points) p = {-p.x, -p.y};
  CHECK(edge_direction_loss(reflected, gt, identity_perm(5)) ==
        doctest::Approx(4.0).epsilon(1e-12));
}

TEST_CASE("edge direction loss: polygon wrap-around edge count") {
  MapElement square = make_element({{0, 0}, {1, 0}, {1, 1}, {0, 1}},
                                   {GeometryKind::Polygon,
                                    ClassLabel::PedestrianCrossing});
  CHECK(edge_direction_loss(square, square, identity_perm(4)) ==
        doctest::Approx(-4.0).epsilon(1e-12));
}

TEST_CASE("edge direction loss: zero-length edges contribute nothing") {
  const MapElement degenerate = make_element({{0, 0}, {0, 0}, {1, 0}});
  const MapElement gt = make_element({{0, 0}, {0.5, 0}, {1, 0}});
  // first pred edge has zero length -> only the second edge counts
  CHECK(edge_direction_loss(degenerate, gt, identity_perm(3)) ==
        doctest::Approx(-1.0).epsilon(1e-12));
}

TEST_CASE("total loss on a perfect scene") {
  std::mt19937_64 rng(22);
  std::uniform_real_distribution<double> coord(0.0, 1.0);
  std::vector<MapElement> elements;
  std::vector<ScoreVector> scores;
  int total_edges = 0;
  for (int i = 0; i < 3; ++i) {
    MapElement e;
    e.kind = i == 0 ? ElementKind{GeometryKind::Polygon, ClassLabel::PedestrianCrossing}
                    : kLine;
    for (int j = 0; j < 5; ++j) e.points.push_back({coord(rng), coord(rng)});
    total_edges += edge_count(e);
    elements.push_back(e);
    scores.push_back(one_hot(static_cast<int>(e.kind.class_label)));
  }
  const PredictionSet preds = PredictionSet::from_scores(elements, scores);
  const GroundTruthSet gts{elements};
  const MatchResult match = instance_matching(preds, gts, MatchWeights{});
  const LossWeights w;
  const LossBreakdown loss = total_loss(preds, gts, match, w);

  CHECK(loss.cls == 0.0);
  CHECK(loss.p2p == 0.0);
  CHECK(loss.dir == doctest::Approx(-total_edges).epsilon(1e-12));
  CHECK(loss.total == w.lambda_c * loss.cls + w.lambda_p * loss.p2p +
                          w.lambda_d * loss.dir);
}

TEST_CASE("total loss on a dyadic uniform translation, lambda_d = 0") {
  // Dyadic coordinates and shift keep every Manhattan term exact.
  std::mt19937_64 rng(23);
  std::uniform_int_distribution<int> grid(0, 700);
  const Vec2 shift{1.0 / 64.0, 1.0 / 128.0};
  const int nv = 5, instances = 3;

  std::vector<MapElement> gt_elements, pred_elements;
  std::vector<ScoreVector> scores;
  for (int i = 0; i < instances; ++i) {
    MapElement gt;
    gt.kind = kLine;
    for (int j = 0; j < nv; ++j) {
      gt.points.push_back(
          {0.3 * i + grid(rng) / 4096.0, 0.1 + grid(rng) / 4096.0});
    }
    MapElement pred = gt;
    for (Vec2& p : pred.points) p = p + shift;
    gt_elements.push_back(gt);
    pred_elements.push_back(pred);
    scores.push_back(one_hot(static_cast<int>(ClassLabel::LaneDivider)));
  }
  const PredictionSet preds = PredictionSet::from_scores(pred_elements, scores);
  const GroundTruthSet gts{gt_elements};
  const MatchResult match = instance_matching(preds, gts, MatchWeights{});
  LossWeights w;
  w.lambda_d = 0.0;
  const LossBreakdown loss = total_loss(preds, gts, match, w);

  const double expected_p2p = instances * nv * (shift.x + shift.y);
  CHECK(loss.cls == 0.0);
  CHECK(loss.p2p == expected_p2p);
  CHECK(loss.total == w.lambda_p * expected_p2p);
}

TEST_CASE("loss is invariant when gts are replaced by equivalent permutations") {
  std::mt19937_64 rng(24);
  std::uniform_int_distribution<int> member(0, 1 << 20);
  for (int trial = 0; trial < 20; ++trial) {
    const RandomScene s = random_scene(rng, 5, 3, 6);
    const PredictionSet preds =
        PredictionSet::from_logits(s.pred_elements, s.pred_logits);
    const GroundTruthSet gts{s.gt_elements};
    const MatchResult match = instance_matching(preds, gts, MatchWeights{});
    const double base = total_loss(preds, gts, match, LossWeights{}).total;

    std::vector<MapElement> permuted;
    for (const MapElement& gt : s.gt_elements) {
      const PermutationGroup group =
          enumerate_permutations(gt.kind.geometry, gt.n_points());
      permuted.push_back(
          apply_permutation(gt, group.perms[member(rng) % group.size()]));
    }
    const GroundTruthSet gts2{permuted};
    const MatchResult match2 = instance_matching(preds, gts2, MatchWeights{});
    const double moved = total_loss(preds, gts2, match2, LossWeights{}).total;
    CHECK(std::abs(base - moved) < 1e-12);
  }
}

TEST_CASE("analytic gradients match central finite differences") {
  std::mt19937_64 rng(25);
  const double h = 1e-6;
  const LossWeights w;
  double max_rel = 0.0;
  int checked = 0;

  for (int trial = 0; trial < 40; ++trial) {
    std::uniform_int_distribution<int> npick(2, 5);
    const int n_gts = npick(rng);
    const int n_preds = n_gts + npick(rng) % 2;
    const RandomScene s = random_scene(rng, n_preds, n_gts, 5);
    const PredictionSet preds =
        PredictionSet::from_logits(s.pred_elements, s.pred_logits);
    const GroundTruthSet gts{s.gt_elements};
    const MatchResult match = instance_matching(preds, gts, MatchWeights{});
    const LossBreakdown loss = total_loss(preds, gts, match, w);

    // Matched gt coordinate per prediction point, for the kink exclusion.
    std::vector<std::vector<Vec2>> matched_gt(n_preds);
    for (const MatchedPair& pair : match.pairs) {
      const MapElement& gt = gts.elements[pair.gt];
      const PermutationGroup group =
          enumerate_permutations(gt.kind.geometry, gt.n_points());
      const Permutation& gamma = group.perms[pair.gamma_index];
      matched_gt[pair.pred].resize(gt.n_points());
      for (int j = 0; j < gt.n_points(); ++j) {
        matched_gt[pair.pred][j] = gt.points[gamma[j]];
      }
    }

    auto eval_with_elements = [&](const std::vector<MapElement>& elements) {
      return total_loss(PredictionSet::from_logits(elements, s.pred_logits), gts,
                        match, w)
          .total;
    };
    for (int i = 0; i < n_preds; ++i) {
      for (int j = 0; j < 5; ++j) {
        for (int axis = 0; axis < 2; ++axis) {
          if (!matched_gt[i].empty()) {
            const double diff =
                axis == 0 ? s.pred_elements[i].points[j].x - matched_gt[i][j].x
                          : s.pred_elements[i].points[j].y - matched_gt[i][j].y;
            if (std::abs(diff) < 2.0 * h) continue;  // too close to the kink
          }
          std::vector<MapElement> up = s.pred_elements, down = s.pred_elements;
          (axis == 0 ? up[i].points[j].x : up[i].points[j].y) += h;
          (axis == 0 ? down[i].points[j].x : down[i].points[j].y) -= h;
          const double fd = (eval_with_elements(up) - eval_with_elements(down)) / (2 * h);
          const double analytic =
              axis == 0 ? loss.point_grads[i][j].x : loss.point_grads[i][j].y;
          const double rel = std::abs(analytic - fd) /
                             std::max({std::abs(analytic), std::abs(fd), 1e-8});
          max_rel = std::max(max_rel, rel);
          ++checked;
        }
      }
      for (int k = 0; k < kScoreSlots; ++k) {
        std::vector<ScoreVector> up = s.pred_logits, down = s.pred_logits;
        up[i][k] += h;
        down[i][k] -= h;
        const double fd =
            (total_loss(PredictionSet::from_logits(s.pred_elements, up), gts,
                        match, w)
                 .total -
             total_loss(PredictionSet::from_logits(s.pred_elements, down), gts,
                        match, w)
                 .total) /
            (2 * h);
        const double rel = std::abs(loss.logit_grads[i][k] - fd) /
                           std::max({std::abs(loss.logit_grads[i][k]),
                                     std::abs(fd), 1e-8});
        max_rel = std::max(max_rel, rel);
        ++checked;
      }
    }
  }
  CHECK(checked > 1000);
  CHECK(max_rel < 1e-5);
}

TEST_CASE("p2p is non-negative and zero only on exact permuted copies") {
  std::mt19937_64 rng(27);
  std::uniform_real_distribution<double> coord(0.0, 1.0);
  const PermutationGroup group =
      enumerate_permutations(GeometryKind::Polygon, 5);
  for (int trial = 0; trial < 30; ++trial) {
    MapElement gt;
    gt.kind = {GeometryKind::Polygon, ClassLabel::PedestrianCrossing};
    for (int j = 0; j < 5; ++j) gt.points.push_back({coord(rng), coord(rng)});
    for (const Permutation& gamma : group.perms) {
      const MapElement pred = apply_permutation(gt, gamma);
      CHECK(p2p_loss(pred, gt, gamma) == 0.0);
      MapElement nudged = pred;
      nudged.points[trial % 5].x += 1e-9;
      CHECK(p2p_loss(nudged, gt, gamma) > 0.0);
    }
  }
}

TEST_CASE("breakdown identity holds bit for bit") {
  std::mt19937_64 rng(26);
  const RandomScene s = random_scene(rng, 4, 2, 4);
  const PredictionSet preds =
      PredictionSet::from_logits(s.pred_elements, s.pred_logits);
  const GroundTruthSet gts{s.gt_elements};
  const MatchResult match = instance_matching(preds, gts, MatchWeights{});
  LossWeights w;
  w.lambda_c = 3.25;
  w.lambda_p = 1.5;
  w.lambda_d = 0.75;
  const LossBreakdown loss = total_loss(preds, gts, match, w);
  CHECK(loss.total ==
        w.lambda_c * loss.cls + w.lambda_p * loss.p2p + w.lambda_d * loss.dir);
  CHECK(loss.p2p >= 0.0);
  const int edges = 2 * 3;  // 2 matched gts, nv=4 -> at most 3+4 edges; bound below
  CHECK(loss.dir >= -(edges + 4));
  CHECK(loss.dir <= (edges + 4));
}
