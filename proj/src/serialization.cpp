#include "radvote/serialization.hpp"

#include "radvote/error.hpp"
#include "radvote/ply_io.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <sstream>

namespace radvote {

using nlohmann::json;

std::string format_real(double value) {
  char buf[64];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), value, std::chars_format::general, 9);
  if (ec != std::errc{}) return "nan";
  return std::string(buf, ptr);
}

json point_to_json(const Point3& p) { return json::array({p.x(), p.y(), p.z()}); }

Point3 point_from_json(const json& j) {
  if (!j.is_array() || j.size() != 3) throw Error(ErrorKind::Parse, "expected a 3-element array");
  return {j[0].get<double>(), j[1].get<double>(), j[2].get<double>()};
}

json pose_to_json(const RigidTransform& t) {
  json rot = json::array();
  for (int r = 0; r < 3; ++r) {
    for (int c = 0; c < 3; ++c) rot.push_back(t.rotation()(r, c));
  }
  return {{"rotation", rot}, {"translation", point_to_json(t.translation())}};
}

RigidTransform pose_from_json(const json& j) {
  try {
    const auto& rot = j.at("rotation");
    if (!rot.is_array() || rot.size() != 9) throw Error(ErrorKind::Parse, "rotation must have 9 entries");
    Eigen::Matrix3d r;
    for (int i = 0; i < 9; ++i) r(i / 3, i % 3) = rot[static_cast<std::size_t>(i)].get<double>();
    return {r, point_from_json(j.at("translation"))};
  } catch (const json::exception& e) {
    throw Error(ErrorKind::Parse, std::string("bad pose JSON: ") + e.what());
  }
}

json keypoints_to_json(const KeypointSet& set) {
  json pts = json::array();
  for (const auto& k : set.keypoints) pts.push_back(point_to_json(k));
  return {{"keypoints", pts}, {"diameter", set.diameter}};
}

KeypointSet keypoints_from_json(const json& j) {
  try {
    KeypointSet set;
    for (const auto& k : j.at("keypoints")) set.keypoints.push_back(point_from_json(k));
    set.diameter = j.at("diameter").get<double>();
    validate_keypoints(set);
    return set;
  } catch (const json::exception& e) {
    throw Error(ErrorKind::Parse, std::string("bad keypoint JSON: ") + e.what());
  }
}

json report_to_json(const PipelineReport& report) {
  json estimates = json::array();
  for (const auto& e : report.estimates) {
    estimates.push_back({{"keypoint", e.keypoint_index}, {"position", point_to_json(e.position)}, {"score", e.score}});
  }
  return {{"architecture", std::string(to_string(report.architecture))},
          {"scene_points", report.scene_points},
          {"predicted_foreground", report.predicted_foreground},
          {"false_positives", report.false_positives},
          {"voters", report.voters},
          {"vcs", report.vcs.score},
          {"vote_stats", {{"total", report.vcs.stats.total}, {"correct", report.vcs.stats.correct}, {"rho", report.vcs.stats.rho}}},
          {"miou", report.miou},
          {"estimates", estimates},
          {"keypoint_errors", report.keypoint_errors},
          {"votes_cast", report.votes_cast},
          {"add", report.add},
          {"add_s", report.add_s},
          {"add_score", report.add_score},
          {"success", report.success}};
}

json model_spec_to_json(const ModelSpec& spec) {
  return {{"shape", std::string(to_string(spec.shape))}, {"points", spec.points}, {"seed", spec.seed}};
}

ModelSpec model_spec_from_json(const json& j) {
  ModelSpec spec;
  spec.shape = parse_shape(j.value("shape", std::string(to_string(spec.shape))));
  spec.points = j.value("points", spec.points);
  spec.seed = j.value("seed", spec.seed);
  return spec;
}

json read_json_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorKind::Io, "cannot open " + path.string());
  try {
    return json::parse(in);
  } catch (const json::parse_error& e) {
    throw Error(ErrorKind::Parse, path.string() + ": " + e.what(), e.byte);
  }
}

void write_json_file(const std::filesystem::path& path, const json& j) {
  std::ofstream out(path);
  if (!out) throw Error(ErrorKind::Io, "cannot open " + path.string() + " for writing");
  out << j.dump(2) << '\n';
  if (!out) throw Error(ErrorKind::Io, "failed writing " + path.string());
}

void write_scene(const std::filesystem::path& stem, const SceneBundle& bundle) {
  const Scene& scene = bundle.scene;
  std::filesystem::path ply = stem;
  ply += ".ply";
  std::filesystem::path sidecar = stem;
  sidecar += ".json";
  write_ply(ply, scene.cloud);

  json kps = json::array();
  for (const auto& k : scene.scene_keypoints) kps.push_back(point_to_json(k));
  json j = {{"ply", ply.filename().string()},
            {"model_id", scene.model_id},
            {"symmetric", scene.symmetric},
            {"labels", scene.cloud.labels ? json(*scene.cloud.labels) : json::array()},
            {"gt_pose", pose_to_json(scene.gt_pose)},
            {"scene_keypoints", kps},
            {"normalization", {{"center", point_to_json(scene.normalization.center)}, {"scale", scene.normalization.scale}}},
            {"model", model_spec_to_json(bundle.model)},
            {"object_keypoints", keypoints_to_json(bundle.object_keypoints)}};
  write_json_file(sidecar, j);
}

SceneBundle read_scene(const std::filesystem::path& sidecar) {
  const json j = read_json_file(sidecar);
  try {
    SceneBundle bundle;
    Scene& scene = bundle.scene;
    scene.cloud = read_ply(sidecar.parent_path() / j.at("ply").get<std::string>());
    const auto labels = j.at("labels").get<LabelList>();
    if (labels.size() != scene.cloud.size()) throw Error(ErrorKind::Parse, "sidecar label count differs from PLY");
    scene.cloud.labels = labels;
    scene.model_id = j.value("model_id", std::string{});
    scene.symmetric = j.value("symmetric", false);
    scene.gt_pose = pose_from_json(j.at("gt_pose"));
    for (const auto& k : j.at("scene_keypoints")) scene.scene_keypoints.push_back(point_from_json(k));
    scene.normalization.center = point_from_json(j.at("normalization").at("center"));
    scene.normalization.scale = j.at("normalization").at("scale").get<double>();
    if (!(scene.normalization.scale > 0.0)) throw Error(ErrorKind::Parse, "normalization scale must be positive");
    bundle.model = model_spec_from_json(j.at("model"));
    bundle.object_keypoints = keypoints_from_json(j.at("object_keypoints"));
    return bundle;
  } catch (const json::exception& e) {
    throw Error(ErrorKind::Parse, sidecar.string() + ": " + e.what());
  }
}

std::string svg_line_plot(const std::string& title, const std::string& x_label, const std::string& y_label,
                          const std::vector<PlotSeries>& series) {
  constexpr double kW = 640, kH = 420, kLeft = 70, kRight = 150, kTop = 40, kBottom = 60;
  static const char* kColors[] = {"#1f77b4", "#d62728", "#2ca02c", "#ff7f0e", "#9467bd", "#8c564b"};

  double x0 = std::numeric_limits<double>::infinity(), x1 = -x0, y0 = x0, y1 = -x0;
  for (const auto& s : series) {
    for (double v : s.x) x0 = std::min(x0, v), x1 = std::max(x1, v);
    for (double v : s.y) {
      if (std::isfinite(v)) y0 = std::min(y0, v), y1 = std::max(y1, v);
    }
  }
  if (!(x1 > x0)) x0 -= 0.5, x1 += 0.5;
  if (!(y1 > y0)) y0 -= 0.5, y1 += 0.5;
  const double pw = kW - kLeft - kRight, ph = kH - kTop - kBottom;
  auto sx = [&](double v) { return kLeft + (v - x0) / (x1 - x0) * pw; };
  auto sy = [&](double v) { return kTop + (1.0 - (v - y0) / (y1 - y0)) * ph; };

  std::ostringstream svg;
  svg << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << kW << "\" height=\"" << kH << "\">\n";
  svg << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  svg << "<text x=\"" << kW / 2 << "\" y=\"22\" text-anchor=\"middle\" font-size=\"15\">" << title << "</text>\n";
  svg << "<line x1=\"" << kLeft << "\" y1=\"" << kTop + ph << "\" x2=\"" << kLeft + pw << "\" y2=\"" << kTop + ph
      << "\" stroke=\"black\"/>\n";
  svg << "<line x1=\"" << kLeft << "\" y1=\"" << kTop << "\" x2=\"" << kLeft << "\" y2=\"" << kTop + ph
      << "\" stroke=\"black\"/>\n";
  for (int t = 0; t <= 4; ++t) {
    const double xv = x0 + (x1 - x0) * t / 4.0, yv = y0 + (y1 - y0) * t / 4.0;
    svg << "<text x=\"" << sx(xv) << "\" y=\"" << kTop + ph + 18 << "\" text-anchor=\"middle\" font-size=\"11\">"
        << format_real(std::round(xv * 1000.0) / 1000.0) << "</text>\n";
    svg << "<text x=\"" << kLeft - 6 << "\" y=\"" << sy(yv) + 4 << "\" text-anchor=\"end\" font-size=\"11\">"
        << format_real(std::round(yv * 1000.0) / 1000.0) << "</text>\n";
  }
  svg << "<text x=\"" << kLeft + pw / 2 << "\" y=\"" << kH - 15 << "\" text-anchor=\"middle\" font-size=\"13\">"
      << x_label << "</text>\n";
  svg << "<text x=\"18\" y=\"" << kTop + ph / 2 << "\" text-anchor=\"middle\" font-size=\"13\" transform=\"rotate(-90 18 "
      << kTop + ph / 2 << ")\">" << y_label << "</text>\n";
  for (std::size_t s = 0; s < series.size(); ++s) {
    const char* color = kColors[s % std::size(kColors)];
    svg << "<polyline fill=\"none\" stroke=\"" << color << "\" stroke-width=\"2\" points=\"";
    for (std::size_t i = 0; i < series[s].x.size() && i < series[s].y.size(); ++i) {
      if (!std::isfinite(series[s].y[i])) continue;
      svg << format_real(sx(series[s].x[i])) << ',' << format_real(sy(series[s].y[i])) << ' ';
    }
    svg << "\"/>\n";
    for (std::size_t i = 0; i < series[s].x.size() && i < series[s].y.size(); ++i) {
      if (!std::isfinite(series[s].y[i]) || series[s].x.size() > 50) continue;
      svg << "<circle cx=\"" << format_real(sx(series[s].x[i])) << "\" cy=\"" << format_real(sy(series[s].y[i]))
          << "\" r=\"3\" fill=\"" << color << "\"/>\n";
    }
    svg << "<text x=\"" << kLeft + pw + 10 << "\" y=\"" << kTop + 16 + 18 * s << "\" font-size=\"12\" fill=\"" << color
        << "\">" << series[s].name << "</text>\n";
  }
  svg << "</svg>\n";
  return svg.str();
}

}  // namespace radvote
