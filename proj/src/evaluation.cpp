// SPDX-License-Identifier: Apache-2.0
#include "vecmap/evaluation.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <numeric>
#include <stdexcept>

#include "vecmap/geometry.hpp"

namespace vecmap {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

double directional_mean(const std::vector<Vec2>& from,
                        const std::vector<Vec2>& to) {
  double sum = 0.0;
  for (const Vec2& p : from) {
    double best = kInf;
    for (const Vec2& q : to) best = std::min(best, euclidean(p, q));
    sum += best;
  }
  return sum / static_cast<double>(from.size());
}

std::vector<Vec2> distinct_points(const std::vector<Vec2>& pts) {
  std::vector<Vec2> out;
  for (const Vec2& p : pts) {
    bool dup = false;
    for (const Vec2& q : out) {
      if (p == q) {
        dup = true;
        break;
      }
    }
    if (!dup) out.push_back(p);
  }
  return out;
}

std::string format_double(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.9f", v);
  return buf;
}

}  // namespace

void validate_eval_config(const EvalConfig& cfg) {
  if (cfg.thresholds.empty()) {
    throw std::invalid_argument("EvalConfig: at least one threshold required");
  }
  double prev = 0.0;
  for (double t : cfg.thresholds) {
    if (!(t > prev)) {
      throw std::invalid_argument(
          "EvalConfig: thresholds must be positive and strictly increasing");
    }
    prev = t;
  }
  if (cfg.chamfer_samples < 1) {
    throw std::invalid_argument("EvalConfig: chamfer_samples must be >= 1");
  }
}

std::vector<Vec2> densify_for_chamfer(const MapElement& element, int samples) {
  if (element.points.empty()) {
    throw std::invalid_argument("chamfer: empty element");
  }
  const bool closed = is_polygon(element.kind.geometry);
  const int min_for_kind = closed ? 3 : 2;
  if (samples >= min_for_kind &&
      arc_length(element.points, closed) > 0.0) {
    return resample_element(element.points, element.kind, samples).points;
  }
  return distinct_points(element.points);
}

double chamfer_distance(const MapElement& a, const MapElement& b, int samples) {
  if (a.points.empty() || b.points.empty()) {
    throw std::invalid_argument("chamfer_distance: empty element");
  }
  if (a.kind.class_label != b.kind.class_label) {
    throw std::invalid_argument(
        "chamfer_distance: elements must share a class");
  }
  const std::vector<Vec2> pa = densify_for_chamfer(a, samples);
  const std::vector<Vec2> pb = densify_for_chamfer(b, samples);
  return 0.5 * (directional_mean(pa, pb) + directional_mean(pb, pa));
}

std::vector<MatchRecord> match_at_threshold_matrix(const Mat& chamfer,
                                                   const std::vector<double>& scores,
                                                   double threshold) {
  const int num_pred = chamfer.rows;
  const int num_gt = chamfer.cols;
  if (static_cast<int>(scores.size()) != num_pred) {
    throw std::invalid_argument("match_at_threshold: score/matrix size mismatch");
  }

  // Rank by descending score; ties keep input order.
  std::vector<int> order(num_pred);
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(),
                   [&scores](int a, int b) { return scores[a] > scores[b]; });

  std::vector<char> gt_taken(num_gt, 0);
  std::vector<MatchRecord> records;
  records.reserve(num_pred);
  for (int p : order) {
    int best_gt = -1;
    double best_dist = kInf;
    for (int g = 0; g < num_gt; ++g) {
      if (gt_taken[g]) continue;
      if (chamfer.at(p, g) < best_dist) {
        best_dist = chamfer.at(p, g);
        best_gt = g;
      }
    }
    MatchRecord rec;
    rec.score = scores[p];
    rec.pred_index = p;
    rec.distance = best_dist;
    if (best_gt >= 0 && best_dist < threshold) {
      rec.true_positive = true;
      gt_taken[best_gt] = 1;
    }
    records.push_back(rec);
  }
  return records;
}

std::vector<MatchRecord> match_at_threshold(const std::vector<ScoredElement>& preds,
                                            const std::vector<MapElement>& gts,
                                            double threshold,
                                            int chamfer_samples) {
  Mat dist(static_cast<int>(preds.size()), static_cast<int>(gts.size()));
  std::vector<std::vector<Vec2>> gt_pts(gts.size());
  for (size_t g = 0; g < gts.size(); ++g) {
    gt_pts[g] = densify_for_chamfer(gts[g], chamfer_samples);
  }
  for (size_t p = 0; p < preds.size(); ++p) {
    const std::vector<Vec2> pp =
        densify_for_chamfer(preds[p].element, chamfer_samples);
    for (size_t g = 0; g < gts.size(); ++g) {
      dist.at(static_cast<int>(p), static_cast<int>(g)) =
          0.5 * (directional_mean(pp, gt_pts[g]) + directional_mean(gt_pts[g], pp));
    }
  }
  std::vector<double> scores(preds.size());
  for (size_t p = 0; p < preds.size(); ++p) scores[p] = preds[p].score;
  return match_at_threshold_matrix(dist, scores, threshold);
}

double average_precision(const std::vector<std::pair<double, bool>>& ranked,
                         int num_gt) {
  if (num_gt < 0) {
    throw std::invalid_argument("average_precision: num_gt must be >= 0");
  }
  int tp_total = 0;
  for (const auto& [score, tp] : ranked) {
    if (tp) ++tp_total;
  }
  if (tp_total > num_gt) {
    throw std::invalid_argument(
        "average_precision: more true positives than ground truths");
  }
  if (num_gt == 0) return ranked.empty() ? 1.0 : 0.0;
  if (ranked.empty()) return 0.0;

  const int k = static_cast<int>(ranked.size());
  std::vector<double> precision(k), recall(k);
  int tp = 0;
  for (int i = 0; i < k; ++i) {
    if (ranked[i].second) ++tp;
    precision[i] = static_cast<double>(tp) / (i + 1);
    recall[i] = static_cast<double>(tp) / num_gt;
  }
  // Monotone precision envelope from the right.
  std::vector<double> envelope(k);
  double running = 0.0;
  for (int i = k - 1; i >= 0; --i) {
    running = std::max(running, precision[i]);
    envelope[i] = running;
  }

  double sum = 0.0;
  int cursor = 0;
  for (int i = 0; i <= 100; ++i) {
    const double r = i / 100.0;
    while (cursor < k && recall[cursor] < r) ++cursor;
    if (cursor < k) sum += envelope[cursor];
  }
  return sum / 101.0;
}

const ApCell& EvalReport::cell(ClassLabel cls, int threshold_index) const {
  const int t = static_cast<int>(config.thresholds.size());
  return cells[static_cast<int>(cls) * t + threshold_index];
}

std::string EvalReport::to_text() const {
  std::string out = "map_eval_report v1\n";
  out += "scenes " + std::to_string(num_scenes) + "\n";
  out += "thresholds";
  for (double t : config.thresholds) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), " %g", t);
    out += buf;
  }
  out += "\n";
  for (int c = 0; c < kNumClasses; ++c) {
    for (size_t ti = 0; ti < config.thresholds.size(); ++ti) {
      const ApCell& cl = cell(static_cast<ClassLabel>(c), static_cast<int>(ti));
      char buf[160];
      std::snprintf(buf, sizeof(buf), "class %s threshold %g gt %d pred %d ap %s%s\n",
                    class_name(cl.cls), cl.threshold, cl.num_gt, cl.num_pred,
                    format_double(cl.ap).c_str(), cl.counted ? "" : " (skipped)");
      out += buf;
    }
  }
  for (int c = 0; c < kNumClasses; ++c) {
    char buf[120];
    if (class_counted[c]) {
      std::snprintf(buf, sizeof(buf), "class %s mean_ap %s\n",
                    class_name(static_cast<ClassLabel>(c)),
                    format_double(class_ap[c]).c_str());
    } else {
      std::snprintf(buf, sizeof(buf), "class %s mean_ap skipped\n",
                    class_name(static_cast<ClassLabel>(c)));
    }
    out += buf;
  }
  out += "map " + format_double(map) + "\n";
  return out;
}

EvalReport evaluate(const std::vector<Scene>& scenes, const EvalConfig& cfg) {
  validate_eval_config(cfg);
  if (!scenes.empty()) {
    const BevFrame& f0 = scenes.front().frame;
    for (const Scene& s : scenes) {
      const BevFrame& f = s.frame;
      if (f.front != f0.front || f.rear != f0.rear || f.left != f0.left ||
          f.right != f0.right || f.resolution != f0.resolution) {
        throw std::invalid_argument("evaluate: scenes must share the BEV frame");
      }
    }
  }

  const int nt = static_cast<int>(cfg.thresholds.size());
  EvalReport report;
  report.config = cfg;
  report.num_scenes = static_cast<int>(scenes.size());

  // pooled[class][threshold] -> ranked (score, tp) pairs pooled over scenes
  std::vector<std::vector<std::vector<std::pair<double, bool>>>> pooled(
      kNumClasses, std::vector<std::vector<std::pair<double, bool>>>(nt));
  std::array<int, kNumClasses> total_gt{};
  std::array<int, kNumClasses> total_pred{};

  for (const Scene& scene : scenes) {
    for (const SceneGroundTruth& gt : scene.ground_truth) {
      if (gt.label != gt.element.kind.class_label) {
        throw std::invalid_argument("evaluate: gt element class mismatch in scene '" +
                                    scene.id + "'");
      }
    }
    for (const ScenePrediction& pred : scene.predictions) {
      if (pred.label != pred.element.kind.class_label) {
        throw std::invalid_argument(
            "evaluate: prediction class mismatch in scene '" + scene.id + "'");
      }
    }
    for (int c = 0; c < kNumClasses; ++c) {
      const ClassLabel cls = static_cast<ClassLabel>(c);
      std::vector<const MapElement*> gts;
      for (const SceneGroundTruth& gt : scene.ground_truth) {
        if (gt.label == cls) gts.push_back(&gt.element);
      }
      std::vector<double> scores;
      std::vector<const MapElement*> preds;
      for (const ScenePrediction& pred : scene.predictions) {
        if (pred.label != cls) continue;
        if (!(pred.score >= 0.0 && pred.score <= 1.0)) {
          throw std::invalid_argument("evaluate: prediction score outside [0,1]");
        }
        scores.push_back(pred.score);
        preds.push_back(&pred.element);
      }
      total_gt[c] += static_cast<int>(gts.size());
      total_pred[c] += static_cast<int>(preds.size());
      if (preds.empty() && gts.empty()) continue;

      // Chamfer matrix once per (scene, class); entries are independent.
      std::vector<std::vector<Vec2>> gt_pts(gts.size());
      for (size_t g = 0; g < gts.size(); ++g) {
        gt_pts[g] = densify_for_chamfer(*gts[g], cfg.chamfer_samples);
      }
      std::vector<std::vector<Vec2>> pred_pts(preds.size());
      for (size_t p = 0; p < preds.size(); ++p) {
        pred_pts[p] = densify_for_chamfer(*preds[p], cfg.chamfer_samples);
      }
      Mat dist(static_cast<int>(preds.size()), static_cast<int>(gts.size()));
      const int np = dist.rows, ng = dist.cols;
#pragma omp parallel for collapse(2) schedule(static)
      for (int p = 0; p < np; ++p) {
        for (int g = 0; g < ng; ++g) {
          dist.at(p, g) = 0.5 * (directional_mean(pred_pts[p], gt_pts[g]) +
                                 directional_mean(gt_pts[g], pred_pts[p]));
        }
      }

      for (int ti = 0; ti < nt; ++ti) {
        const std::vector<MatchRecord> records =
            match_at_threshold_matrix(dist, scores, cfg.thresholds[ti]);
        for (const MatchRecord& rec : records) {
          pooled[c][ti].emplace_back(rec.score, rec.true_positive);
        }
        SceneClassDiagnostics diag;
        diag.scene_id = scene.id;
        diag.cls = cls;
        diag.threshold = cfg.thresholds[ti];
        diag.records = records;
        report.diagnostics.push_back(std::move(diag));
      }
    }
  }

  report.cells.reserve(kNumClasses * nt);
  for (int c = 0; c < kNumClasses; ++c) {
    for (int ti = 0; ti < nt; ++ti) {
      auto& ranked = pooled[c][ti];
      std::stable_sort(ranked.begin(), ranked.end(),
                       [](const auto& a, const auto& b) { return a.first > b.first; });
      ApCell cell;
      cell.cls = static_cast<ClassLabel>(c);
      cell.threshold = cfg.thresholds[ti];
      cell.num_gt = total_gt[c];
      cell.num_pred = total_pred[c];
      cell.counted = !(total_gt[c] == 0 && total_pred[c] == 0);
      cell.ap = average_precision(ranked, total_gt[c]);
      report.cells.push_back(cell);
    }
  }

  double class_sum = 0.0;
  int class_count = 0;
  for (int c = 0; c < kNumClasses; ++c) {
    report.class_counted[c] = report.cell(static_cast<ClassLabel>(c), 0).counted;
    if (!report.class_counted[c]) {
      report.class_ap[c] = 0.0;
      continue;
    }
    double sum = 0.0;
    for (int ti = 0; ti < nt; ++ti) {
      sum += report.cell(static_cast<ClassLabel>(c), ti).ap;
    }
    report.class_ap[c] = sum / nt;
    class_sum += report.class_ap[c];
    ++class_count;
  }
  report.map = class_count > 0 ? class_sum / class_count : 0.0;
  return report;
}

}  // namespace vecmap
