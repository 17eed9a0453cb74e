#include "radvote/ply_io.hpp"

#include "radvote/error.hpp"
#include "radvote/serialization.hpp"

#include <charconv>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

namespace radvote {

namespace {

std::vector<std::string> split_ws(const std::string& line) {
  std::istringstream ss(line);
  std::vector<std::string> out;
  for (std::string tok; ss >> tok;) out.push_back(tok);
  return out;
}

double parse_number(const std::string& tok, std::size_t line) {
  double v = 0.0;
  const char* first = tok.data();
  const char* last = tok.data() + tok.size();
  if (!tok.empty() && *first == '+') ++first;
  auto [ptr, ec] = std::from_chars(first, last, v);
  if (ec != std::errc{} || ptr != last) throw Error(ErrorKind::Parse, "bad number '" + tok + "'", line);
  return v;
}

}  // namespace

void write_ply(std::ostream& out, const PointCloud& cloud) {
  validate_cloud(cloud);
  out << "ply\nformat ascii 1.0\n";
  out << "element vertex " << cloud.size() << "\n";
  out << "property float x\nproperty float y\nproperty float z\n";
  if (cloud.labels) out << "property uchar label\n";
  out << "end_header\n";
  for (std::size_t i = 0; i < cloud.size(); ++i) {
    const Point3& p = cloud.points[i];
    out << format_real(p.x()) << ' ' << format_real(p.y()) << ' ' << format_real(p.z());
    if (cloud.labels) out << ' ' << (*cloud.labels)[i];
    out << '\n';
  }
}

void write_ply(const std::filesystem::path& path, const PointCloud& cloud) {
  std::ofstream out(path);
  if (!out) throw Error(ErrorKind::Io, "cannot open " + path.string() + " for writing");
  write_ply(out, cloud);
  if (!out) throw Error(ErrorKind::Io, "failed writing " + path.string());
}

PointCloud read_ply(std::istream& in) {
  std::string line;
  std::size_t line_no = 0;
  auto next_line = [&]() -> bool {
    if (!std::getline(in, line)) return false;
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    return true;
  };

  if (!next_line() || line != "ply") throw Error(ErrorKind::Parse, "missing 'ply' magic", line_no ? line_no : 1);

  bool format_seen = false;
  bool in_vertex = false;
  bool vertex_seen = false;
  std::size_t vertex_count = 0;
  std::size_t property_count = 0;
  int ix = -1, iy = -1, iz = -1, ilabel = -1;
  bool ended = false;
  while (next_line()) {
    const auto tok = split_ws(line);
    if (tok.empty()) continue;
    if (tok[0] == "comment" || tok[0] == "obj_info") continue;
    if (tok[0] == "format") {
      if (tok.size() != 3 || tok[1] != "ascii") throw Error(ErrorKind::Parse, "only ascii PLY is supported", line_no);
      format_seen = true;
    } else if (tok[0] == "element") {
      if (tok.size() != 3) throw Error(ErrorKind::Parse, "malformed element line", line_no);
      if (vertex_seen) throw Error(ErrorKind::Parse, "elements after 'vertex' are not supported", line_no);
      if (tok[1] != "vertex") throw Error(ErrorKind::Parse, "first element must be 'vertex'", line_no);
      const double count = parse_number(tok[2], line_no);
      if (count < 0 || count != static_cast<double>(static_cast<std::size_t>(count))) {
        throw Error(ErrorKind::Parse, "bad vertex count", line_no);
      }
      vertex_count = static_cast<std::size_t>(count);
      in_vertex = vertex_seen = true;
    } else if (tok[0] == "property") {
      if (!in_vertex) throw Error(ErrorKind::Parse, "property outside an element", line_no);
      if (tok.size() != 3) throw Error(ErrorKind::Parse, "list or malformed property not supported", line_no);
      const int idx = static_cast<int>(property_count++);
      if (tok[2] == "x") ix = idx;
      else if (tok[2] == "y") iy = idx;
      else if (tok[2] == "z") iz = idx;
      else if (tok[2] == "label") ilabel = idx;
    } else if (tok[0] == "end_header") {
      ended = true;
      break;
    } else {
      throw Error(ErrorKind::Parse, "unknown header keyword '" + tok[0] + "'", line_no);
    }
  }
  if (!ended) throw Error(ErrorKind::Parse, "header has no end_header", line_no + 1);
  if (!format_seen || !vertex_seen) throw Error(ErrorKind::Parse, "header lacks format or vertex element", line_no);
  if (ix < 0 || iy < 0 || iz < 0) throw Error(ErrorKind::Parse, "vertex element lacks x, y or z", line_no);
  if (vertex_count == 0) throw Error(ErrorKind::EmptyCloud, "PLY declares zero vertices");

  PointCloud cloud;
  cloud.points.reserve(vertex_count);
  if (ilabel >= 0) cloud.labels = LabelList{};
  while (cloud.points.size() < vertex_count) {
    if (!next_line()) {
      throw Error(ErrorKind::Parse,
                  "expected " + std::to_string(vertex_count) + " vertices, found " + std::to_string(cloud.size()),
                  line_no + 1);
    }
    const auto tok = split_ws(line);
    if (tok.size() != property_count) throw Error(ErrorKind::Parse, "vertex line has wrong field count", line_no);
    cloud.points.emplace_back(parse_number(tok[static_cast<std::size_t>(ix)], line_no),
                              parse_number(tok[static_cast<std::size_t>(iy)], line_no),
                              parse_number(tok[static_cast<std::size_t>(iz)], line_no));
    if (!cloud.points.back().allFinite()) throw Error(ErrorKind::Parse, "non-finite coordinate", line_no);
    if (ilabel >= 0) cloud.labels->push_back(static_cast<int>(parse_number(tok[static_cast<std::size_t>(ilabel)], line_no)));
  }
  while (next_line()) {
    if (!split_ws(line).empty()) throw Error(ErrorKind::Parse, "more vertex lines than declared", line_no);
  }
  return cloud;
}

PointCloud read_ply(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorKind::Io, "cannot open " + path.string());
  return read_ply(in);
}

}  // namespace radvote
