// SPDX-License-Identifier: Apache-2.0
#include "vecmap/scene_io.hpp"

#include <cctype>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

#include "vecmap/geometry.hpp"

namespace vecmap {

namespace {

constexpr const char* kSchemaTag = "vecmap.scene.v1";

std::vector<std::string> split_tokens(const std::string& line) {
  std::vector<std::string> tokens;
  std::istringstream in(line);
  std::string tok;
  while (in >> tok) tokens.push_back(tok);
  return tokens;
}

double parse_number(const std::string& tok, const std::string& where) {
  double value = 0.0;
  const char* begin = tok.data();
  const char* end = begin + tok.size();
  const auto [ptr, ec] = std::from_chars(begin, end, value);
  if (ec != std::errc() || ptr != end) {
    throw SceneParseError(SceneError::Syntax,
                          where + ": cannot parse number '" + tok + "'");
  }
  return value;
}

long parse_count(const std::string& tok, const std::string& where) {
  long value = 0;
  const char* begin = tok.data();
  const char* end = begin + tok.size();
  const auto [ptr, ec] = std::from_chars(begin, end, value);
  if (ec != std::errc() || ptr != end || value < 0) {
    throw SceneParseError(SceneError::Syntax,
                          where + ": cannot parse count '" + tok + "'");
  }
  return value;
}

ClassLabel parse_class(const std::string& tok, const std::string& where) {
  for (int c = 0; c < kNumClasses; ++c) {
    if (tok == class_name(static_cast<ClassLabel>(c))) {
      return static_cast<ClassLabel>(c);
    }
  }
  throw SceneParseError(SceneError::UnknownClass,
                        where + ": unknown class '" + tok + "'");
}

GeometryKind parse_geometry(const std::string& tok, const std::string& where) {
  for (int g = 0; g <= 2; ++g) {
    if (tok == geometry_name(static_cast<GeometryKind>(g))) {
      return static_cast<GeometryKind>(g);
    }
  }
  throw SceneParseError(SceneError::UnknownGeometry,
                        where + ": unknown geometry '" + tok + "'");
}

void check_kind_consistency(ClassLabel label, GeometryKind geometry,
                            const std::string& where) {
  const bool crossing = label == ClassLabel::PedestrianCrossing;
  if (crossing != is_polygon(geometry)) {
    throw SceneParseError(
        SceneError::KindMismatch,
        where + ": " + std::string(class_name(label)) + " cannot be a " +
            geometry_name(geometry));
  }
}

void validate_record(const ElementRecord& rec, bool is_prediction,
                     const std::string& where) {
  check_kind_consistency(rec.label, rec.geometry, where);
  const size_t min_points = is_polygon(rec.geometry) ? 3 : 2;
  if (rec.points.size() < min_points) {
    throw SceneParseError(SceneError::BadPointCount,
                          where + ": needs >= " + std::to_string(min_points) +
                              " points, got " + std::to_string(rec.points.size()));
  }
  for (size_t j = 0; j < rec.points.size(); ++j) {
    if (!std::isfinite(rec.points[j].x) || !std::isfinite(rec.points[j].y)) {
      throw SceneParseError(SceneError::NonFinite,
                            where + ": point " + std::to_string(j) +
                                " is not finite");
    }
  }
  if (is_prediction && !(rec.score >= 0.0 && rec.score <= 1.0)) {
    throw SceneParseError(SceneError::BadScore,
                          where + ": score must lie in [0,1]");
  }
  if (!(arc_length(rec.points, is_polygon(rec.geometry)) > 0.0)) {
    throw SceneParseError(SceneError::Degenerate,
                          where + ": all points coincide");
  }
}

std::string format_g17(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

}  // namespace

const char* scene_error_name(SceneError category) {
  switch (category) {
    case SceneError::Io: return "io";
    case SceneError::BadHeader: return "bad_header";
    case SceneError::Syntax: return "syntax";
    case SceneError::UnknownClass: return "unknown_class";
    case SceneError::UnknownGeometry: return "unknown_geometry";
    case SceneError::KindMismatch: return "kind_mismatch";
    case SceneError::BadPointCount: return "bad_point_count";
    case SceneError::NonFinite: return "non_finite";
    case SceneError::BadScore: return "bad_score";
    case SceneError::Degenerate: return "degenerate";
    case SceneError::MissingFrame: return "missing_frame";
  }
  return "unknown";
}

Scene build_scene(const std::string& id, const BevFrame& frame, int n_points,
                  const std::vector<ElementRecord>& ground_truth,
                  const std::vector<ElementRecord>& predictions) {
  if (id.empty()) {
    throw SceneParseError(SceneError::Syntax, "scene id must be non-empty");
  }
  for (char ch : id) {
    if (std::isspace(static_cast<unsigned char>(ch))) {
      throw SceneParseError(SceneError::Syntax,
                            "scene id must not contain whitespace");
    }
  }
  try {
    validate_frame(frame);
  } catch (const std::invalid_argument& e) {
    throw SceneParseError(SceneError::Syntax, e.what());
  }
  if (n_points < 2) {
    throw SceneParseError(SceneError::Syntax, "n_points must be >= 2");
  }
  auto has_polygon = [](const std::vector<ElementRecord>& recs) {
    for (const ElementRecord& r : recs) {
      if (is_polygon(r.geometry)) return true;
    }
    return false;
  };
  if (n_points < 3 && (has_polygon(ground_truth) || has_polygon(predictions))) {
    throw SceneParseError(SceneError::Syntax,
                          "n_points must be >= 3 when a scene contains polygons");
  }

  Scene scene;
  scene.id = id;
  scene.frame = frame;
  scene.n_points = n_points;

  auto ingest = [&](const ElementRecord& rec, bool is_prediction, size_t index) {
    const std::string where = std::string(is_prediction ? "pred" : "gt") +
                              " element " + std::to_string(index);
    validate_record(rec, is_prediction, where);
    const auto clipped = clip_to_frame(rec.points, rec.geometry, frame);
    if (!clipped.has_value()) return;  // fully outside: dropped
    const ElementKind kind{rec.geometry, rec.label};
    MapElement element;
    try {
      element = resample_element(*clipped, kind, n_points);
    } catch (const std::invalid_argument&) {
      return;  // clipping left nothing usable
    }
    if (is_prediction) {
      ScenePrediction out;
      out.label = rec.label;
      out.geometry = rec.geometry;
      out.score = rec.score;
      out.raw_points = rec.points;
      out.element = std::move(element);
      scene.predictions.push_back(std::move(out));
    } else {
      SceneGroundTruth out;
      out.label = rec.label;
      out.geometry = rec.geometry;
      out.raw_points = rec.points;
      out.element = std::move(element);
      scene.ground_truth.push_back(std::move(out));
    }
  };

  for (size_t i = 0; i < ground_truth.size(); ++i) ingest(ground_truth[i], false, i);
  for (size_t i = 0; i < predictions.size(); ++i) ingest(predictions[i], true, i);
  return scene;
}

Scene parse_scene_text(const std::string& text, const std::string& source_name,
                       const ParseOptions& opts) {
  std::istringstream in(text);
  std::string line;
  int line_no = 0;
  bool saw_schema = false;
  bool saw_scene = false;
  bool saw_frame = false;
  std::string id;
  BevFrame frame;
  std::vector<ElementRecord> gts, preds;

  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    const std::vector<std::string> tokens = split_tokens(line);
    if (tokens.empty() || tokens[0][0] == '#') continue;
    const std::string where =
        source_name + ":" + std::to_string(line_no) + " (" + tokens[0] + ")";

    if (!saw_schema) {
      if (tokens[0] != "schema" || tokens.size() != 2 || tokens[1] != kSchemaTag) {
        throw SceneParseError(SceneError::BadHeader,
                              source_name + ": first line must be 'schema " +
                                  kSchemaTag + "'");
      }
      saw_schema = true;
      continue;
    }

    if (tokens[0] == "scene") {
      if (tokens.size() != 2) {
        throw SceneParseError(SceneError::Syntax, where + ": expected 'scene <id>'");
      }
      if (saw_scene) {
        throw SceneParseError(SceneError::Syntax, where + ": duplicate scene line");
      }
      id = tokens[1];
      saw_scene = true;
    } else if (tokens[0] == "frame") {
      if (tokens.size() != 6) {
        throw SceneParseError(
            SceneError::Syntax,
            where + ": expected 'frame <front> <rear> <left> <right> <resolution>'");
      }
      if (saw_frame) {
        throw SceneParseError(SceneError::Syntax, where + ": duplicate frame line");
      }
      frame.front = parse_number(tokens[1], where);
      frame.rear = parse_number(tokens[2], where);
      frame.left = parse_number(tokens[3], where);
      frame.right = parse_number(tokens[4], where);
      frame.resolution = parse_number(tokens[5], where);
      saw_frame = true;
    } else if (tokens[0] == "gt" || tokens[0] == "pred") {
      const bool is_pred = tokens[0] == "pred";
      if (!saw_scene || !saw_frame) {
        throw SceneParseError(SceneError::MissingFrame,
                              where + ": scene and frame must precede elements");
      }
      const size_t fixed = is_pred ? 5 : 4;  // keyword class geom [score] n
      if (tokens.size() < fixed) {
        throw SceneParseError(SceneError::Syntax, where + ": too few fields");
      }
      ElementRecord rec;
      rec.label = parse_class(tokens[1], where);
      rec.geometry = parse_geometry(tokens[2], where);
      size_t cursor = 3;
      if (is_pred) rec.score = parse_number(tokens[cursor++], where);
      const long n = parse_count(tokens[cursor++], where);
      if (tokens.size() != cursor + 2 * static_cast<size_t>(n)) {
        throw SceneParseError(SceneError::Syntax,
                              where + ": expected " + std::to_string(2 * n) +
                                  " coordinates for " + std::to_string(n) +
                                  " points");
      }
      rec.points.reserve(n);
      for (long j = 0; j < n; ++j) {
        const double x = parse_number(tokens[cursor + 2 * j], where);
        const double y = parse_number(tokens[cursor + 2 * j + 1], where);
        rec.points.push_back({x, y});
      }
      (is_pred ? preds : gts).push_back(std::move(rec));
    } else {
      throw SceneParseError(SceneError::Syntax,
                            where + ": unknown directive '" + tokens[0] + "'");
    }
  }

  if (!saw_schema) {
    throw SceneParseError(SceneError::BadHeader,
                          source_name + ": empty file, missing schema line");
  }
  if (!saw_scene || !saw_frame) {
    throw SceneParseError(SceneError::MissingFrame,
                          source_name + ": scene or frame line missing");
  }
  return build_scene(id, frame, opts.n_points, gts, preds);
}

Scene parse_scene(const std::string& path, const ParseOptions& opts) {
  std::ifstream in(path, std::ios::binary);
  if (!in) {
    throw SceneParseError(SceneError::Io, "cannot open scene file: " + path);
  }
  std::ostringstream buffer;
  buffer << in.rdbuf();
  return parse_scene_text(buffer.str(), path, opts);
}

std::string scene_to_text(const Scene& scene) {
  std::string out;
  out += "schema ";
  out += kSchemaTag;
  out += "\n";
  out += "scene " + scene.id + "\n";
  out += "frame " + format_g17(scene.frame.front) + " " +
         format_g17(scene.frame.rear) + " " + format_g17(scene.frame.left) +
         " " + format_g17(scene.frame.right) + " " +
         format_g17(scene.frame.resolution) + "\n";
  auto emit_points = [&out](const std::vector<Vec2>& pts) {
    out += " " + std::to_string(pts.size());
    for (const Vec2& p : pts) {
      out += " " + format_g17(p.x) + " " + format_g17(p.y);
    }
    out += "\n";
  };
  for (const SceneGroundTruth& gt : scene.ground_truth) {
    out += std::string("gt ") + class_name(gt.label) + " " +
           geometry_name(gt.geometry);
    emit_points(gt.raw_points);
  }
  for (const ScenePrediction& pred : scene.predictions) {
    out += std::string("pred ") + class_name(pred.label) + " " +
           geometry_name(pred.geometry) + " " + format_g17(pred.score);
    emit_points(pred.raw_points);
  }
  return out;
}

void write_scene(const Scene& scene, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) {
    throw std::runtime_error("write_scene: cannot open " + path);
  }
  out << scene_to_text(scene);
  if (!out) {
    throw std::runtime_error("write_scene: write failed for " + path);
  }
}

}  // namespace vecmap
