// SPDX-License-Identifier: Apache-2.0
//
// vecmap CLI: chamfer-AP evaluation, matching/loss reports, attention kernel
// benchmarks, and BEV plot rendering over vecmap.scene.v1 files.

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <random>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"

#include "vecmap/attention.hpp"
#include "vecmap/evaluation.hpp"
#include "vecmap/geometry.hpp"
#include "vecmap/losses.hpp"
#include "vecmap/matching.hpp"
#include "vecmap/raster.hpp"
#include "vecmap/scene_io.hpp"

namespace {

using json = nlohmann::ordered_json;
using namespace vecmap;

// Exit code classes, also documented in the README.
constexpr int kExitOk = 0;
constexpr int kExitUsage = 2;
constexpr int kExitParse = 3;
constexpr int kExitValidation = 4;

struct UsageError : std::runtime_error {
  using std::runtime_error::runtime_error;
};
struct ValidationError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

std::string fmt(double v) {
  char buf[48];
  std::snprintf(buf, sizeof(buf), "%.12g", v);
  return buf;
}

void write_text_file(const std::string& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot open " + path);
  out << text;
}

std::vector<double> parse_double_list(const std::string& csv, const char* flag) {
  std::vector<double> out;
  std::stringstream ss(csv);
  std::string item;
  while (std::getline(ss, item, ',')) {
    try {
      out.push_back(std::stod(item));
    } catch (const std::exception&) {
      throw UsageError(std::string(flag) + ": cannot parse '" + item + "'");
    }
  }
  if (out.empty()) throw UsageError(std::string(flag) + ": empty list");
  return out;
}

// ---------------------------------------------------------------------------
// eval

int cmd_eval(const std::vector<std::string>& files, const std::string& out_dir,
             const std::string& thresholds_csv, int samples, int n_points) {
  EvalConfig cfg;
  cfg.thresholds = parse_double_list(thresholds_csv, "--thresholds");
  cfg.chamfer_samples = samples;
  try {
    validate_eval_config(cfg);
  } catch (const std::invalid_argument& e) {
    throw UsageError(e.what());
  }

  ParseOptions opts;
  opts.n_points = n_points;
  std::vector<Scene> scenes;
  bool any_predictions = false;
  for (const std::string& file : files) {
    scenes.push_back(parse_scene(file, opts));
    any_predictions |= !scenes.back().predictions.empty();
  }
  if (!any_predictions) {
    throw ValidationError("no scene provides predictions; nothing to evaluate");
  }

  const EvalReport report = evaluate(scenes, cfg);
  const std::string text = report.to_text();
  std::fputs(text.c_str(), stdout);

  std::filesystem::create_directories(out_dir);
  write_text_file(out_dir + "/eval_report.txt", text);

  json j;
  j["report"] = "vecmap_eval";
  j["version"] = 1;
  j["scenes"] = report.num_scenes;
  j["thresholds"] = cfg.thresholds;
  j["cells"] = json::array();
  for (const ApCell& cell : report.cells) {
    j["cells"].push_back({{"class", class_name(cell.cls)},
                          {"threshold", cell.threshold},
                          {"gt", cell.num_gt},
                          {"pred", cell.num_pred},
                          {"ap", cell.ap},
                          {"counted", cell.counted}});
  }
  j["class_ap"] = json::object();
  for (int c = 0; c < kNumClasses; ++c) {
    const char* name = class_name(static_cast<ClassLabel>(c));
    if (report.class_counted[c]) {
      j["class_ap"][name] = report.class_ap[c];
    } else {
      j["class_ap"][name] = nullptr;
    }
  }
  j["map"] = report.map;
  j["diagnostics"] = json::array();
  for (const SceneClassDiagnostics& diag : report.diagnostics) {
    json records = json::array();
    for (const MatchRecord& rec : diag.records) {
      records.push_back({{"score", rec.score},
                         {"tp", rec.true_positive},
                         {"distance", std::isfinite(rec.distance)
                                          ? json(rec.distance)
                                          : json(nullptr)},
                         {"pred", rec.pred_index}});
    }
    j["diagnostics"].push_back({{"scene", diag.scene_id},
                                {"class", class_name(diag.cls)},
                                {"threshold", diag.threshold},
                                {"matches", records}});
  }
  write_text_file(out_dir + "/eval_report.json", j.dump(2) + "\n");
  return kExitOk;
}

// ---------------------------------------------------------------------------
// loss

PredictionSet prediction_set_from_scene(const Scene& scene, int query_budget) {
  if (scene.predictions.empty()) {
    throw ValidationError("scene '" + scene.id + "' has no predictions");
  }
  if (static_cast<int>(scene.predictions.size()) > query_budget) {
    throw ValidationError("scene '" + scene.id + "' carries " +
                          std::to_string(scene.predictions.size()) +
                          " predictions, above the query budget " +
                          std::to_string(query_budget));
  }
  std::vector<MapElement> elements;
  std::vector<ScoreVector> probabilities;
  for (const ScenePrediction& pred : scene.predictions) {
    elements.push_back(normalize_to_bev(pred.element, scene.frame));
    // Confidence convention: score mass on the declared class, remainder on
    // the empty class.
    ScoreVector p{};
    p[static_cast<int>(pred.label)] = pred.score;
    p[kNoObject] = 1.0 - pred.score;
    probabilities.push_back(p);
  }
  return PredictionSet::from_scores(std::move(elements), std::move(probabilities));
}

GroundTruthSet ground_truth_from_scene(const Scene& scene) {
  GroundTruthSet gts;
  for (const SceneGroundTruth& gt : scene.ground_truth) {
    gts.elements.push_back(normalize_to_bev(gt.element, scene.frame));
  }
  return gts;
}

// Central-difference check of total_loss gradients on synthetic instances.
double gradcheck_max_rel_error(int trials, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> coord(0.0, 1.0);
  std::uniform_real_distribution<double> logit(-2.0, 2.0);
  std::uniform_int_distribution<int> gt_count(1, 4);
  std::uniform_int_distribution<int> kind_pick(0, 2);
  const double h = 1e-6;
  const LossWeights w;
  const int nv = 5;
  double max_rel = 0.0;

  for (int trial = 0; trial < trials; ++trial) {
    const int m = gt_count(rng);
    const int n = m + gt_count(rng) % 2;
    std::vector<MapElement> pred_elements(n), gt_elements(m);
    std::vector<ScoreVector> logits(n);
    for (int i = 0; i < n; ++i) {
      pred_elements[i].kind = {GeometryKind::PolylineUndirected,
                               ClassLabel::LaneDivider};
      for (int j = 0; j < nv; ++j) {
        pred_elements[i].points.push_back({coord(rng), coord(rng)});
      }
      for (double& z : logits[i]) z = logit(rng);
    }
    for (int i = 0; i < m; ++i) {
      const GeometryKind g = static_cast<GeometryKind>(kind_pick(rng));
      gt_elements[i].kind.geometry = g;
      gt_elements[i].kind.class_label = is_polygon(g)
                                            ? ClassLabel::PedestrianCrossing
                                            : ClassLabel::LaneDivider;
      for (int j = 0; j < nv; ++j) {
        gt_elements[i].points.push_back({coord(rng), coord(rng)});
      }
    }
    const PredictionSet preds = PredictionSet::from_logits(pred_elements, logits);
    const GroundTruthSet gts{gt_elements};
    const MatchResult match = instance_matching(preds, gts, MatchWeights{});
    const LossBreakdown loss = total_loss(preds, gts, match, w);

    std::vector<std::vector<Vec2>> matched_gt(n);
    for (const MatchedPair& pair : match.pairs) {
      const MapElement& gt = gt_elements[pair.gt];
      const PermutationGroup group =
          enumerate_permutations(gt.kind.geometry, gt.n_points());
      const Permutation& gamma = group.perms[pair.gamma_index];
      matched_gt[pair.pred].resize(nv);
      for (int j = 0; j < nv; ++j) matched_gt[pair.pred][j] = gt.points[gamma[j]];
    }

    auto total_at = [&](const std::vector<MapElement>& elems,
                        const std::vector<ScoreVector>& zs) {
      return total_loss(PredictionSet::from_logits(elems, zs), gts, match, w).total;
    };
    for (int i = 0; i < n; ++i) {
      for (int j = 0; j < nv; ++j) {
        for (int axis = 0; axis < 2; ++axis) {
          if (!matched_gt[i].empty()) {
            const double diff =
                axis == 0 ? pred_elements[i].points[j].x - matched_gt[i][j].x
                          : pred_elements[i].points[j].y - matched_gt[i][j].y;
            if (std::abs(diff) < 2.0 * h) continue;  // Manhattan kink zone
          }
          std::vector<MapElement> up = pred_elements, down = pred_elements;
          (axis == 0 ? up[i].points[j].x : up[i].points[j].y) += h;
          (axis == 0 ? down[i].points[j].x : down[i].points[j].y) -= h;
          const double fd = (total_at(up, logits) - total_at(down, logits)) / (2 * h);
          const double analytic =
              axis == 0 ? loss.point_grads[i][j].x : loss.point_grads[i][j].y;
          max_rel = std::max(max_rel,
                             std::abs(analytic - fd) /
                                 std::max({std::abs(analytic), std::abs(fd), 1e-8}));
        }
      }
      for (int k = 0; k < kScoreSlots; ++k) {
        std::vector<ScoreVector> up = logits, down = logits;
        up[i][k] += h;
        down[i][k] -= h;
        const double fd =
            (total_at(pred_elements, up) - total_at(pred_elements, down)) / (2 * h);
        max_rel = std::max(max_rel,
                           std::abs(loss.logit_grads[i][k] - fd) /
                               std::max({std::abs(loss.logit_grads[i][k]),
                                         std::abs(fd), 1e-8}));
      }
    }
  }
  return max_rel;
}

int cmd_loss(const std::string& file, const std::string& out_dir,
             const LossWeights& weights, int n_points, int query_budget,
             bool gradcheck, int gradcheck_trials, std::uint64_t seed) {
  ParseOptions opts;
  opts.n_points = n_points;
  const Scene scene = parse_scene(file, opts);
  const PredictionSet preds = prediction_set_from_scene(scene, query_budget);
  const GroundTruthSet gts = ground_truth_from_scene(scene);
  if (gts.size() > preds.size()) {
    throw ValidationError("scene '" + scene.id + "' has more ground-truth (" +
                          std::to_string(gts.size()) + ") than predictions (" +
                          std::to_string(preds.size()) + ")");
  }

  const MatchWeights mw{weights.lambda_c, weights.lambda_p};
  const MatchResult match = instance_matching(preds, gts, mw);
  const LossBreakdown loss = total_loss(preds, gts, match, weights);

  std::string text;
  text += "scene " + scene.id + "\n";
  text += "pairs " + std::to_string(match.pairs.size()) + "\n";
  for (const MatchedPair& pair : match.pairs) {
    text += "pair gt " + std::to_string(pair.gt) + " pred " +
            std::to_string(pair.pred) + " gamma " +
            std::to_string(pair.gamma_index) + " point_cost " +
            fmt(pair.point_cost) + "\n";
  }
  text += "unmatched";
  for (int r : match.unmatched_preds) text += " " + std::to_string(r);
  text += "\n";
  text += "loss cls " + fmt(loss.cls) + " p2p " + fmt(loss.p2p) + " dir " +
          fmt(loss.dir) + " total " + fmt(loss.total) + "\n";

  double gradcheck_err = 0.0;
  if (gradcheck) {
    gradcheck_err = gradcheck_max_rel_error(gradcheck_trials, seed);
    text += "gradcheck trials " + std::to_string(gradcheck_trials) +
            " max_rel_error " + fmt(gradcheck_err) + "\n";
  }
  std::fputs(text.c_str(), stdout);

  std::filesystem::create_directories(out_dir);
  json j;
  j["report"] = "vecmap_loss";
  j["version"] = 1;
  j["scene"] = scene.id;
  j["weights"] = {{"lambda_c", weights.lambda_c},
                  {"lambda_p", weights.lambda_p},
                  {"lambda_d", weights.lambda_d},
                  {"focal_alpha", weights.focal_alpha},
                  {"focal_gamma", weights.focal_gamma}};
  j["pairs"] = json::array();
  for (const MatchedPair& pair : match.pairs) {
    j["pairs"].push_back({{"gt", pair.gt},
                          {"pred", pair.pred},
                          {"gamma", pair.gamma_index},
                          {"point_cost", pair.point_cost}});
  }
  j["unmatched"] = match.unmatched_preds;
  j["loss"] = {{"cls", loss.cls},
               {"p2p", loss.p2p},
               {"dir", loss.dir},
               {"total", loss.total}};
  if (gradcheck) {
    j["gradcheck"] = {{"trials", gradcheck_trials},
                      {"max_rel_error", gradcheck_err}};
  }
  write_text_file(out_dir + "/loss_report.json", j.dump(2) + "\n");
  return kExitOk;
}

// ---------------------------------------------------------------------------
// bench-attention

int cmd_bench_attention(const std::string& sizes_csv, int dim,
                        const std::string& kernels_csv,
                        const std::string& out_dir) {
  const std::vector<double> raw_sizes = parse_double_list(sizes_csv, "--sizes");
  if (raw_sizes.size() < 3) {
    throw UsageError("--sizes: need at least 3 square grid sizes");
  }
  std::vector<std::pair<int, int>> sizes;
  for (double s : raw_sizes) {
    const int n = static_cast<int>(s);
    if (n < 1 || n != s) throw UsageError("--sizes: entries must be positive integers");
    sizes.emplace_back(n, n);
  }
  if (dim < 1) throw UsageError("--dim must be >= 1");

  std::vector<AttentionKernel> kernels;
  {
    std::stringstream ss(kernels_csv);
    std::string item;
    while (std::getline(ss, item, ',')) {
      if (item == "vanilla") {
        kernels.push_back(AttentionKernel::Vanilla);
      } else if (item == "decoupled") {
        kernels.push_back(AttentionKernel::Decoupled);
      } else if (item == "criss_cross") {
        kernels.push_back(AttentionKernel::CrissCross);
      } else {
        throw UsageError("--kernels: unknown kernel '" + item + "'");
      }
    }
    if (kernels.empty()) throw UsageError("--kernels: empty list");
  }

  std::string table =
      "kernel            n    nv        L  interaction_macs  projection_macs  "
      "wall_ms\n";
  json j;
  j["report"] = "vecmap_bench_attention";
  j["version"] = 1;
  j["dim"] = dim;
  j["kernels"] = json::array();

  for (AttentionKernel kernel : kernels) {
    ScalingFit fit;
    try {
      fit = measure_scaling(kernel, sizes, dim);
    } catch (const std::invalid_argument& e) {
      throw UsageError(e.what());
    }
    json points = json::array();
    for (const ScalingPoint& pt : fit.points) {
      char line[160];
      std::snprintf(line, sizeof(line), "%-12s %6d %5d %8d %17llu %16llu %8.2f\n",
                    kernel_name(kernel), pt.n, pt.nv, pt.n * pt.nv,
                    static_cast<unsigned long long>(pt.interaction_macs),
                    static_cast<unsigned long long>(pt.projection_macs),
                    pt.wall_ms);
      table += line;
      points.push_back({{"n", pt.n},
                        {"nv", pt.nv},
                        {"interaction_macs", pt.interaction_macs},
                        {"projection_macs", pt.projection_macs}});
    }
    char line[96];
    std::snprintf(line, sizeof(line), "%-12s fitted_exponent %.4f\n",
                  kernel_name(kernel), fit.exponent);
    table += line;
    j["kernels"].push_back({{"kernel", kernel_name(kernel)},
                            {"points", points},
                            {"fitted_exponent", fit.exponent}});
  }
  std::fputs(table.c_str(), stdout);

  std::filesystem::create_directories(out_dir);
  // Wall times stay out of the report file so reruns are byte-identical.
  write_text_file(out_dir + "/bench_report.json", j.dump(2) + "\n");
  return kExitOk;
}

// ---------------------------------------------------------------------------
// render

int cmd_render(const std::string& file, const std::string& out_dir, int n_points) {
  ParseOptions opts;
  opts.n_points = n_points;
  const Scene scene = parse_scene(file, opts);
  std::filesystem::create_directories(out_dir);

  std::vector<MapElement> gt_elements;
  for (const SceneGroundTruth& gt : scene.ground_truth) {
    gt_elements.push_back(gt.element);
  }
  const std::string gt_path = out_dir + "/" + scene.id + "_gt.ppm";
  emit_plot(rasterize(gt_elements, scene.frame), gt_path);
  std::printf("wrote %s\n", gt_path.c_str());

  if (!scene.predictions.empty()) {
    std::vector<MapElement> pred_elements;
    for (const ScenePrediction& pred : scene.predictions) {
      pred_elements.push_back(pred.element);
    }
    const std::string pred_path = out_dir + "/" + scene.id + "_pred.ppm";
    emit_plot(rasterize(pred_elements, scene.frame), pred_path);
    std::printf("wrote %s\n", pred_path.c_str());
  }
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"vectorized HD-map toolkit: set-prediction losses, Hungarian "
               "matching, attention kernel benchmarks, chamfer-AP evaluation"};
  app.require_subcommand(1);
  app.fallthrough();  // global flags may follow the subcommand name
  std::uint64_t seed = 0;
  app.add_option("--seed", seed, "random seed for synthetic inputs");

  // eval
  auto* eval = app.add_subcommand("eval", "chamfer-distance AP over scene files");
  std::vector<std::string> eval_files;
  std::string eval_out = ".";
  std::string thresholds = "0.2,0.5,1.0";
  int samples = 100;
  int n_points = 20;
  eval->add_option("scenes", eval_files, "scene files")->required()->expected(-1);
  eval->add_option("--out-dir", eval_out, "report directory");
  eval->add_option("--thresholds", thresholds, "chamfer thresholds in meters");
  eval->add_option("--samples", samples, "chamfer densification samples");
  eval->add_option("--n-points", n_points, "points per resampled element");

  // loss
  auto* loss = app.add_subcommand("loss", "hierarchical matching and loss report");
  std::string loss_file;
  std::string loss_out = ".";
  LossWeights weights;
  int loss_n_points = 20;
  int query_budget = 50;
  bool gradcheck = false;
  int gradcheck_trials = 100;
  loss->add_option("scene", loss_file, "scene file with predictions")->required();
  loss->add_option("--out-dir", loss_out, "report directory");
  loss->add_option("--lambda-c", weights.lambda_c, "classification weight");
  loss->add_option("--lambda-p", weights.lambda_p, "point-to-point weight");
  loss->add_option("--lambda-d", weights.lambda_d, "edge direction weight");
  loss->add_option("--focal-alpha", weights.focal_alpha, "focal loss alpha");
  loss->add_option("--focal-gamma", weights.focal_gamma, "focal loss gamma");
  loss->add_option("--n-points", loss_n_points, "points per resampled element");
  loss->add_option("--queries", query_budget, "instance query budget");
  loss->add_flag("--gradcheck", gradcheck, "finite-difference gradient check");
  loss->add_option("--gradcheck-trials", gradcheck_trials,
                   "random instances for --gradcheck");

  // bench-attention
  auto* bench = app.add_subcommand("bench-attention",
                                   "MAC scaling of the attention kernels");
  std::string sizes = "10,20,40";
  int dim = 32;
  std::string kernels = "vanilla,decoupled,criss_cross";
  std::string bench_out = ".";
  bench->add_option("--sizes", sizes, "square grid sizes (n = nv), comma separated");
  bench->add_option("--dim", dim, "embedding width d");
  bench->add_option("--kernels", kernels, "subset of vanilla,decoupled,criss_cross");
  bench->add_option("--out-dir", bench_out, "report directory");

  // render
  auto* render = app.add_subcommand("render", "emit BEV plots for a scene");
  std::string render_file;
  std::string render_out = ".";
  int render_n_points = 20;
  render->add_option("scene", render_file, "scene file")->required();
  render->add_option("--out-dir", render_out, "output directory");
  render->add_option("--n-points", render_n_points, "points per resampled element");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    app.exit(e);  // prints the message
    return e.get_exit_code() == 0 ? kExitOk : kExitUsage;
  }

  try {
    if (eval->parsed()) {
      return cmd_eval(eval_files, eval_out, thresholds, samples, n_points);
    }
    if (loss->parsed()) {
      return cmd_loss(loss_file, loss_out, weights, loss_n_points, query_budget,
                      gradcheck, gradcheck_trials, seed);
    }
    if (bench->parsed()) {
      return cmd_bench_attention(sizes, dim, kernels, bench_out);
    }
    if (render->parsed()) {
      return cmd_render(render_file, render_out, render_n_points);
    }
  } catch (const UsageError& e) {
    std::fprintf(stderr, "usage error: %s\n", e.what());
    return kExitUsage;
  } catch (const SceneParseError& e) {
    std::fprintf(stderr, "parse error [%s]: %s\n",
                 scene_error_name(e.category()), e.what());
    return kExitParse;
  } catch (const ValidationError& e) {
    std::fprintf(stderr, "validation error: %s\n", e.what());
    return kExitValidation;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 1;
  }
  return kExitUsage;
}
