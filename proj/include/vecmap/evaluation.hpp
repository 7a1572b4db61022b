// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <array>
#include <string>
#include <vector>

#include "vecmap/mat.hpp"
#include "vecmap/types.hpp"

namespace vecmap {

struct EvalConfig {
  std::vector<double> thresholds{0.2, 0.5, 1.0};  // meters, strictly increasing
  int chamfer_samples = 100;  // densified points per element
};

void validate_eval_config(const EvalConfig& cfg);

// Symmetric chamfer distance in meters: half the sum of the two directional
// mean nearest-neighbor distances over densified samples.
double chamfer_distance(const MapElement& a, const MapElement& b,
                        int samples = 100);

// Element resampled to `samples` points for distance computation; degenerate
// (zero-length) geometry falls back to its distinct raw points.
std::vector<Vec2> densify_for_chamfer(const MapElement& element, int samples);

struct ScoredElement {
  double score = 0.0;
  MapElement element;
};

struct MatchRecord {
  double score = 0.0;
  bool true_positive = false;
  double distance = 0.0;  // chamfer to the decided gt; +inf for an FP with no candidate
  int pred_index = -1;    // index into the caller's prediction order
};

// Greedy score-ordered matching: each prediction takes the nearest unmatched
// gt with chamfer < threshold, otherwise counts as a false positive.
// Returns records in rank order.
std::vector<MatchRecord> match_at_threshold(const std::vector<ScoredElement>& preds,
                                            const std::vector<MapElement>& gts,
                                            double threshold,
                                            int chamfer_samples = 100);

// Same matching over a precomputed preds x gts chamfer matrix.
std::vector<MatchRecord> match_at_threshold_matrix(const Mat& chamfer,
                                                   const std::vector<double>& scores,
                                                   double threshold);

// 101-point interpolated AP over a ranked (score, is_tp) sequence.
// num_gt == 0 yields 1.0 when there are no predictions, else 0.0.
double average_precision(const std::vector<std::pair<double, bool>>& ranked,
                         int num_gt);

struct ApCell {
  ClassLabel cls = ClassLabel::PedestrianCrossing;
  double threshold = 0.0;
  double ap = 0.0;
  int num_gt = 0;
  int num_pred = 0;
  bool counted = true;  // false when the split has no gts and no preds
};

struct SceneClassDiagnostics {
  std::string scene_id;
  ClassLabel cls = ClassLabel::PedestrianCrossing;
  double threshold = 0.0;
  std::vector<MatchRecord> records;
};

struct EvalReport {
  EvalConfig config;
  int num_scenes = 0;
  std::vector<ApCell> cells;  // class-major, thresholds ascending
  std::array<double, kNumClasses> class_ap{};
  std::array<bool, kNumClasses> class_counted{};
  double map = 0.0;
  std::vector<SceneClassDiagnostics> diagnostics;

  const ApCell& cell(ClassLabel cls, int threshold_index) const;
  // Stable text serialization, one row per class x threshold plus summary.
  std::string to_text() const;
};

// Pools predictions per class across scenes, matches per scene at each
// threshold, and assembles the AP table. All scenes must share the BEV frame.
EvalReport evaluate(const std::vector<Scene>& scenes, const EvalConfig& cfg);

}  // namespace vecmap
