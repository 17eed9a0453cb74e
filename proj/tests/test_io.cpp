#include "radvote/error.hpp"
#include "radvote/ply_io.hpp"
#include "radvote/serialization.hpp"
#include "test_support.hpp"

#include <gtest/gtest.h>

#include <filesystem>
#include <sstream>

using namespace radvote;
using radvote::testing::random_points;
using radvote::testing::random_transform;

namespace {

Error parse_error_of(const std::string& text) {
  std::istringstream in(text);
  try {
    read_ply(in);
  } catch (const Error& e) {
    return e;
  }
  ADD_FAILURE() << "no error for:\n" << text;
  return Error(ErrorKind::Io, "none");
}

std::filesystem::path temp_dir(const std::string& name) {
  auto dir = std::filesystem::temp_directory_path() / ("radvote_test_" + name);
  std::filesystem::remove_all(dir);
  std::filesystem::create_directories(dir);
  return dir;
}

const char* kHeader5 =
    "ply\nformat ascii 1.0\nelement vertex 5\nproperty float x\nproperty float y\nproperty float z\nend_header\n";

}  // namespace

TEST(FormatReal, NineSignificantDigits) {
  EXPECT_EQ(format_real(0.1), "0.1");
  EXPECT_EQ(format_real(1.0 / 3.0), "0.333333333");
  EXPECT_EQ(format_real(-2.5e-12), "-2.5e-12");
  EXPECT_EQ(format_real(123456789012.0), "1.23456789e+11");
}

TEST(Ply, RoundTripWithinTolerance) {
  std::mt19937_64 rng(1);
  for (bool labelled : {false, true}) {
    PointCloud cloud(random_points(300, rng, -50, 50));
    if (labelled) {
      cloud.labels = LabelList(300);
      for (std::size_t i = 0; i < 300; ++i) (*cloud.labels)[i] = static_cast<int>(i % 2);
    }
    std::stringstream buf;
    write_ply(buf, cloud);
    const PointCloud back = read_ply(buf);
    ASSERT_EQ(back.size(), cloud.size());
    EXPECT_EQ(back.labels, cloud.labels);
    for (std::size_t i = 0; i < cloud.size(); ++i) {
      EXPECT_LE((back.points[i] - cloud.points[i]).cwiseAbs().maxCoeff(),
                1e-7 * std::max(1.0, cloud.points[i].cwiseAbs().maxCoeff()));
    }
  }
}

TEST(Ply, ZeroVerticesIsEmptyCloud) {
  const Error e = parse_error_of(
      "ply\nformat ascii 1.0\nelement vertex 0\nproperty float x\nproperty float y\nproperty float z\nend_header\n");
  EXPECT_EQ(e.kind(), ErrorKind::EmptyCloud);
}

TEST(Ply, ShortBodyReportsLine) {
  const std::string text = std::string(kHeader5) + "0 0 0\n1 0 0\n0 1 0\n0 0 1\n";
  const Error e = parse_error_of(text);
  EXPECT_EQ(e.kind(), ErrorKind::Parse);
  // Header is 7 lines, four vertices follow; the fifth is missing at line 12.
  EXPECT_EQ(e.location(), std::optional<std::size_t>(12));
}

TEST(Ply, MalformedInputs) {
  EXPECT_EQ(parse_error_of("plx\n").location(), std::optional<std::size_t>(1));
  const Error bad_number = parse_error_of(std::string(kHeader5) + "0 0 0\n1 0 zz\n");
  EXPECT_EQ(bad_number.kind(), ErrorKind::Parse);
  EXPECT_EQ(bad_number.location(), std::optional<std::size_t>(9));
  EXPECT_EQ(parse_error_of("ply\nformat binary_little_endian 1.0\n").location(), std::optional<std::size_t>(2));
  EXPECT_EQ(parse_error_of("ply\nformat ascii 1.0\nelement vertex 1\nproperty float x\nend_header\n1\n").kind(),
            ErrorKind::Parse);
  EXPECT_EQ(parse_error_of(std::string(kHeader5) + "0 0 0\n1 0 0\n0 1 0\n0 0 1\n1 1 1\n2 2 2\n").location(),
            std::optional<std::size_t>(13));
  EXPECT_EQ(parse_error_of("ply\nformat ascii 1.0\nelement vertex 2\n").kind(), ErrorKind::Parse);
}

TEST(Ply, ToleratesCommentsAndExtraProperties) {
  std::istringstream in(
      "ply\nformat ascii 1.0\ncomment made by hand\nelement vertex 2\nproperty float x\nproperty float y\n"
      "property float z\nproperty float intensity\nend_header\n1 2 3 0.5\n4 5 6 0.25\n");
  const PointCloud c = read_ply(in);
  ASSERT_EQ(c.size(), 2u);
  EXPECT_EQ(c.points[1], Point3(4, 5, 6));
  EXPECT_FALSE(c.has_labels());
}

TEST(Json, PoseAndKeypointsRoundTrip) {
  std::mt19937_64 rng(2);
  const RigidTransform t = random_transform(rng);
  const RigidTransform back = pose_from_json(nlohmann::json::parse(pose_to_json(t).dump()));
  EXPECT_EQ(back.rotation(), t.rotation());
  EXPECT_EQ(back.translation(), t.translation());
  KeypointSet set{random_points(3, rng), 2.5};
  const KeypointSet set_back = keypoints_from_json(keypoints_to_json(set));
  EXPECT_EQ(set_back.keypoints, set.keypoints);
  EXPECT_EQ(set_back.diameter, set.diameter);
  EXPECT_THROW(pose_from_json(nlohmann::json{{"rotation", {1, 0, 0}}}), Error);
}

TEST(SceneFiles, WriteThenRead) {
  const auto dir = temp_dir("scene");
  const PointCloud model = make_model(ModelShape::Torus, 400, 3);
  const KeypointSet kps = fps_keypoints(model, 3);
  SceneSpec spec;
  spec.clutter_fraction = 0.5;
  SceneBundle bundle{synth_scene(model, kps, spec, 11, "torus", true), {ModelShape::Torus, 400, 3}, kps};
  write_scene(dir / "s", bundle);
  ASSERT_TRUE(std::filesystem::exists(dir / "s.ply"));
  const SceneBundle back = read_scene(dir / "s.json");
  EXPECT_EQ(back.scene.cloud.labels, bundle.scene.cloud.labels);
  EXPECT_EQ(back.scene.gt_pose.rotation(), bundle.scene.gt_pose.rotation());
  EXPECT_EQ(back.scene.scene_keypoints, bundle.scene.scene_keypoints);
  EXPECT_EQ(back.scene.normalization.scale, bundle.scene.normalization.scale);
  EXPECT_TRUE(back.scene.symmetric);
  EXPECT_EQ(back.model.shape, ModelShape::Torus);
  EXPECT_EQ(back.object_keypoints.keypoints, kps.keypoints);
  for (std::size_t i = 0; i < back.scene.cloud.size(); ++i) {
    EXPECT_LT((back.scene.cloud.points[i] - bundle.scene.cloud.points[i]).norm(), 1e-7);
  }
}

TEST(Svg, DeterministicAndWellFormed) {
  const std::vector<PlotSeries> s{{"a", {1, 2, 3}, {0.1, 0.5, 0.4}}, {"b", {1, 2, 3}, {0.2, 0.3, 0.9}}};
  const std::string one = svg_line_plot("t", "x", "y", s);
  EXPECT_EQ(one, svg_line_plot("t", "x", "y", s));
  EXPECT_EQ(one.rfind("<svg", 0), 0u);
  EXPECT_NE(one.find("</svg>"), std::string::npos);
  EXPECT_EQ(std::count(one.begin(), one.end(), '<') - std::count(one.begin(), one.end(), '>'), 0);
}
