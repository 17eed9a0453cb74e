#pragma once

#include "radvote/geometry.hpp"

#include <filesystem>
#include <iosfwd>

namespace radvote {

// ASCII PLY with float x, y, z and, when the cloud has labels, a uchar label.
// Coordinates are written with 9 significant digits.
void write_ply(std::ostream& out, const PointCloud& cloud);
void write_ply(const std::filesystem::path& path, const PointCloud& cloud);

// Accepts any scalar property types and ignores properties other than
// x, y, z and label. Throws Parse (with the offending line number) for a
// malformed header or body, EmptyCloud for zero vertices.
PointCloud read_ply(std::istream& in);
PointCloud read_ply(const std::filesystem::path& path);

}  // namespace radvote
