#pragma once

#include "radvote/geometry.hpp"
#include "radvote/keypoints.hpp"

#include <array>
#include <cstdint>
#include <iosfwd>
#include <optional>
#include <span>
#include <vector>

namespace radvote {

using VoxelIndex = std::array<int, 3>;

// Dense vote grid. Voxel (ix, iy, iz) spans origin + [i, i+1) * rho on each
// axis; counts are stored with x fastest and z slowest.
class Accumulator3D {
 public:
  using Count = std::uint32_t;
  static constexpr std::size_t kDefaultVoxelCap = std::size_t{512} * 512 * 512;

  // Covers [lower, upper] with dims = ceil(extent / rho) (at least 1 per axis).
  // Throws Argument for bad bounds or rho, Resource when the grid would exceed
  // voxel_cap voxels.
  Accumulator3D(const Point3& lower, const Point3& upper, double rho,
                std::size_t voxel_cap = kDefaultVoxelCap);
  // Restores a grid from raw parts (used by the binary reader).
  Accumulator3D(const Point3& origin, const VoxelIndex& dims, double rho, std::vector<Count> counts);

  const Point3& origin() const { return origin_; }
  const VoxelIndex& dims() const { return dims_; }
  double rho() const { return rho_; }
  std::size_t voxel_count() const { return counts_.size(); }
  std::span<const Count> counts() const { return counts_; }

  std::size_t linear_index(int ix, int iy, int iz) const {
    return (static_cast<std::size_t>(iz) * static_cast<std::size_t>(dims_[1]) + static_cast<std::size_t>(iy)) *
               static_cast<std::size_t>(dims_[0]) +
           static_cast<std::size_t>(ix);
  }
  VoxelIndex voxel_from_linear(std::size_t linear) const;
  Count at(int ix, int iy, int iz) const { return counts_[linear_index(ix, iy, iz)]; }
  Point3 voxel_center(int ix, int iy, int iz) const;
  // Voxel containing p, or nullopt when p is outside the grid.
  std::optional<VoxelIndex> voxel_of(const Point3& p) const;

  void increment(int ix, int iy, int iz) { ++counts_[linear_index(ix, iy, iz)]; }
  void clear();
  std::uint64_t total() const;
  bool same_shape(const Accumulator3D& other) const;

  friend bool operator==(const Accumulator3D&, const Accumulator3D&) = default;

 private:
  friend Accumulator3D merge(const Accumulator3D& a, const Accumulator3D& b);

  Point3 origin_;
  VoxelIndex dims_{1, 1, 1};
  double rho_ = 1.0;
  std::vector<Count> counts_;
};

struct KeypointEstimate {
  Point3 position = Point3::Zero();
  Accumulator3D::Count score = 0;
  std::size_t keypoint_index = 0;
};

struct VotingBounds {
  Point3 lower;
  Point3 upper;
};

// Increments every voxel whose center c satisfies | |c - voter| - radius | <= rho/2.
// Returns the number of voxels incremented; voxels outside the grid are skipped.
std::size_t cast_radial_vote(Accumulator3D& acc, const Point3& voter, double radius);

// Increments the voxel containing voter + offset. Returns false when that
// point lies outside the grid.
bool cast_offset_vote(Accumulator3D& acc, const Point3& voter, const Eigen::Vector3d& offset);

// Global max (ties -> lowest linear index), refined to the count-weighted
// centroid of its 3x3x3 neighbourhood. Throws EmptyAccumulator on an all-zero grid.
KeypointEstimate extract_peak(const Accumulator3D& acc);

// Elementwise sum; throws Argument unless origin, dims and rho all match.
Accumulator3D merge(const Accumulator3D& a, const Accumulator3D& b);

// One accumulator per radii column; returns K estimates in column order.
std::vector<KeypointEstimate> estimate_keypoints(const PointCloud& points, const RadiiMatrix& radii,
                                                 double rho, const VotingBounds& bounds);

// Little-endian dump: "RVACC001", 3 x u32 dims, 3 x f64 origin, f64 rho,
// then u32 counts in linear order.
void write_accumulator(std::ostream& out, const Accumulator3D& acc);
Accumulator3D read_accumulator(std::istream& in);

}  // namespace radvote
