#pragma once

#include "radvote/geometry.hpp"
#include "radvote/keypoints.hpp"
#include "radvote/simulator.hpp"

#include <nlohmann/json.hpp>

#include <filesystem>
#include <string>
#include <vector>

namespace radvote {

// Locale-independent, 9 significant digits, shortest form.
std::string format_real(double value);

nlohmann::json point_to_json(const Point3& p);
Point3 point_from_json(const nlohmann::json& j);

// {"rotation": [9 values, row-major], "translation": [x, y, z]}
nlohmann::json pose_to_json(const RigidTransform& t);
RigidTransform pose_from_json(const nlohmann::json& j);

nlohmann::json keypoints_to_json(const KeypointSet& set);
KeypointSet keypoints_from_json(const nlohmann::json& j);

nlohmann::json report_to_json(const PipelineReport& report);

struct ModelSpec {
  ModelShape shape = ModelShape::Blobby;
  std::size_t points = 2000;
  std::uint64_t seed = 7;
};

nlohmann::json model_spec_to_json(const ModelSpec& spec);
ModelSpec model_spec_from_json(const nlohmann::json& j);

// A scene on disk: <stem>.ply holds points and labels, <stem>.json the
// sidecar (labels, GT pose, keypoints, normalization, model recipe).
struct SceneBundle {
  Scene scene;
  ModelSpec model;
  KeypointSet object_keypoints;
};

void write_scene(const std::filesystem::path& stem, const SceneBundle& bundle);
SceneBundle read_scene(const std::filesystem::path& sidecar);

nlohmann::json read_json_file(const std::filesystem::path& path);
void write_json_file(const std::filesystem::path& path, const nlohmann::json& j);

struct PlotSeries {
  std::string name;
  std::vector<double> x;
  std::vector<double> y;
};

// Minimal SVG line chart; output depends only on the inputs.
std::string svg_line_plot(const std::string& title, const std::string& x_label, const std::string& y_label,
                          const std::vector<PlotSeries>& series);

}  // namespace radvote
