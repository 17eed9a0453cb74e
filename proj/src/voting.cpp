#include "radvote/voting.hpp"

#include "radvote/error.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstring>
#include <istream>
#include <numeric>
#include <ostream>

namespace radvote {

namespace {

// Tolerance for extents that are an exact multiple of rho up to rounding.
constexpr double kDimSlack = 1e-9;

int clamp_index(double v, int n) {
  if (v < 0.0) return 0;
  if (v > static_cast<double>(n - 1)) return n - 1;
  return static_cast<int>(v);
}

// Saturating conversion into [-2, n + 1]; values beyond are equivalent for
// range scans and must not overflow int.
int to_index(double v, int n) {
  return static_cast<int>(std::clamp(v, -2.0, static_cast<double>(n) + 1.0));
}

}  // namespace

Accumulator3D::Accumulator3D(const Point3& lower, const Point3& upper, double rho, std::size_t voxel_cap)
    : origin_(lower), rho_(rho) {
  if (!(rho > 0.0) || !std::isfinite(rho)) throw Error(ErrorKind::Argument, "voxel edge length must be positive");
  if (!lower.allFinite() || !upper.allFinite() || !((upper - lower).minCoeff() > 0.0)) {
    throw Error(ErrorKind::Argument, "accumulator upper bound must exceed lower bound on every axis");
  }
  double total = 1.0;
  for (int a = 0; a < 3; ++a) {
    const double cells = std::max(1.0, std::ceil((upper[a] - lower[a]) / rho - kDimSlack));
    total *= cells;
    if (total > static_cast<double>(voxel_cap)) {
      throw Error(ErrorKind::Resource, "accumulator would exceed the voxel cap");
    }
    dims_[a] = static_cast<int>(cells);
  }
  counts_.assign(static_cast<std::size_t>(total), 0);
}

Accumulator3D::Accumulator3D(const Point3& origin, const VoxelIndex& dims, double rho, std::vector<Count> counts)
    : origin_(origin), dims_(dims), rho_(rho), counts_(std::move(counts)) {
  if (!(rho > 0.0) || dims[0] < 1 || dims[1] < 1 || dims[2] < 1 ||
      counts_.size() != static_cast<std::size_t>(dims[0]) * dims[1] * dims[2]) {
    throw Error(ErrorKind::Argument, "inconsistent accumulator parts");
  }
}

VoxelIndex Accumulator3D::voxel_from_linear(std::size_t linear) const {
  const auto nx = static_cast<std::size_t>(dims_[0]);
  const auto ny = static_cast<std::size_t>(dims_[1]);
  return {static_cast<int>(linear % nx), static_cast<int>((linear / nx) % ny), static_cast<int>(linear / (nx * ny))};
}

Point3 Accumulator3D::voxel_center(int ix, int iy, int iz) const {
  return origin_ + rho_ * Point3(ix + 0.5, iy + 0.5, iz + 0.5);
}

std::optional<VoxelIndex> Accumulator3D::voxel_of(const Point3& p) const {
  VoxelIndex idx{};
  for (int a = 0; a < 3; ++a) {
    const double f = std::floor((p[a] - origin_[a]) / rho_);
    if (!(f >= 0.0) || f >= static_cast<double>(dims_[a])) return std::nullopt;
    idx[a] = static_cast<int>(f);
  }
  return idx;
}

void Accumulator3D::clear() { std::fill(counts_.begin(), counts_.end(), Count{0}); }

std::uint64_t Accumulator3D::total() const {
  return std::accumulate(counts_.begin(), counts_.end(), std::uint64_t{0});
}

bool Accumulator3D::same_shape(const Accumulator3D& other) const {
  return origin_ == other.origin_ && dims_ == other.dims_ && rho_ == other.rho_;
}

std::size_t cast_radial_vote(Accumulator3D& acc, const Point3& voter, double radius) {
  if (!(radius >= 0.0) || !std::isfinite(radius) || !voter.allFinite()) return 0;
  const double rho = acc.rho();
  const double half = 0.5 * rho;
  const double outer = radius + half;
  const double outer2 = outer * outer;
  const double inner = radius - half;
  const double inner2 = inner > 0.0 ? inner * inner : -1.0;
  const Point3& o = acc.origin();
  const VoxelIndex& n = acc.dims();

  // Voxel-space coordinate of the voter (voxel centers sit at integer + 0.5).
  auto lo_index = [&](int a, double reach) { return clamp_index(std::floor((voter[a] - reach - o[a]) / rho - 0.5), n[a]); };
  auto hi_index = [&](int a, double reach) { return clamp_index(std::ceil((voter[a] + reach - o[a]) / rho - 0.5), n[a]); };

  // Reject spheres whose bounding cube misses the grid entirely.
  for (int a = 0; a < 3; ++a) {
    if (voter[a] + outer < o[a] || voter[a] - outer > o[a] + rho * n[a]) return 0;
  }

  auto member = [&](double d2) { return std::abs(std::sqrt(d2) - radius) <= half; };

  std::size_t cast = 0;
  auto scan_x = [&](int iy, int iz, int x0, int x1, double dyz2) {
    for (int ix = x0; ix <= x1; ++ix) {
      const double dx = o[0] + (ix + 0.5) * rho - voter[0];
      if (member(dx * dx + dyz2)) {
        acc.increment(ix, iy, iz);
        ++cast;
      }
    }
  };

  const int z0 = lo_index(2, outer), z1 = hi_index(2, outer);
  const int y0 = lo_index(1, outer), y1 = hi_index(1, outer);
  for (int iz = z0; iz <= z1; ++iz) {
    const double dz = o[2] + (iz + 0.5) * rho - voter[2];
    const double dz2 = dz * dz;
    if (dz2 > outer2 * (1.0 + 1e-12)) continue;
    for (int iy = y0; iy <= y1; ++iy) {
      const double dy = o[1] + (iy + 0.5) * rho - voter[1];
      const double dyz2 = dz2 + dy * dy;
      if (dyz2 > outer2 * (1.0 + 1e-12)) continue;
      // Along x the shell is one or two intervals; candidates are padded by a
      // voxel and re-checked with the exact membership test.
      const double x_out = std::sqrt(std::max(0.0, outer2 - dyz2));
      const double x_in = inner2 > dyz2 ? std::sqrt(inner2 - dyz2) : 0.0;
      const int a0 = lo_index(0, x_out) - 1;
      const int b1 = hi_index(0, x_out) + 1;
      if (x_in <= rho) {
        scan_x(iy, iz, std::max(a0, 0), std::min(b1, n[0] - 1), dyz2);
        continue;
      }
      const double cx = (voter[0] - o[0]) / rho - 0.5;  // voter in voxel-center units
      const int a1 = to_index(std::ceil(cx - x_in / rho) + 1.0, n[0]);
      const int b0 = to_index(std::floor(cx + x_in / rho) - 1.0, n[0]);
      if (a1 >= b0) {
        scan_x(iy, iz, std::max(a0, 0), std::min(b1, n[0] - 1), dyz2);
      } else {
        scan_x(iy, iz, std::max(a0, 0), std::min(a1, n[0] - 1), dyz2);
        scan_x(iy, iz, std::max(b0, 0), std::min(b1, n[0] - 1), dyz2);
      }
    }
  }
  // A zero radius is a point; its own voxel always takes the vote.
  if (radius == 0.0) {
    if (const auto voxel = acc.voxel_of(voter)) {
      const auto& [ix, iy, iz] = *voxel;
      const Point3 c = o + (Point3(ix, iy, iz).array() + 0.5).matrix() * rho;
      if (!member((c - voter).squaredNorm())) {
        acc.increment(ix, iy, iz);
        ++cast;
      }
    }
  }
  return cast;
}

bool cast_offset_vote(Accumulator3D& acc, const Point3& voter, const Eigen::Vector3d& offset) {
  const auto voxel = acc.voxel_of(voter + offset);
  if (!voxel) return false;
  acc.increment((*voxel)[0], (*voxel)[1], (*voxel)[2]);
  return true;
}

KeypointEstimate extract_peak(const Accumulator3D& acc) {
  const auto counts = acc.counts();
  // max_element returns the first maximum, i.e. the lowest linear index.
  const auto it = std::max_element(counts.begin(), counts.end());
  if (it == counts.end() || *it == 0) throw Error(ErrorKind::EmptyAccumulator, "accumulator holds no votes");
  const auto peak = acc.voxel_from_linear(static_cast<std::size_t>(it - counts.begin()));
  const auto& n = acc.dims();

  Point3 weighted = Point3::Zero();
  double weight = 0.0;
  for (int dz = -1; dz <= 1; ++dz) {
    for (int dy = -1; dy <= 1; ++dy) {
      for (int dx = -1; dx <= 1; ++dx) {
        const int ix = peak[0] + dx, iy = peak[1] + dy, iz = peak[2] + dz;
        if (ix < 0 || iy < 0 || iz < 0 || ix >= n[0] || iy >= n[1] || iz >= n[2]) continue;
        const double c = acc.at(ix, iy, iz);
        if (c == 0.0) continue;
        weighted += c * acc.voxel_center(ix, iy, iz);
        weight += c;
      }
    }
  }
  return {weighted / weight, *it, 0};
}

Accumulator3D merge(const Accumulator3D& a, const Accumulator3D& b) {
  if (!a.same_shape(b)) throw Error(ErrorKind::Argument, "cannot merge accumulators of different shape");
  Accumulator3D out = a;
  for (std::size_t i = 0; i < out.counts_.size(); ++i) out.counts_[i] += b.counts_[i];
  return out;
}

std::vector<KeypointEstimate> estimate_keypoints(const PointCloud& points, const RadiiMatrix& radii,
                                                 double rho, const VotingBounds& bounds) {
  validate_cloud(points);
  if (static_cast<std::size_t>(radii.rows()) != points.size()) {
    throw Error(ErrorKind::Argument, "radii row count must equal the number of voters");
  }
  std::vector<KeypointEstimate> estimates;
  estimates.reserve(static_cast<std::size_t>(radii.cols()));
  Accumulator3D acc(bounds.lower, bounds.upper, rho);
  for (Eigen::Index k = 0; k < radii.cols(); ++k) {
    if (k > 0) acc.clear();
    for (std::size_t m = 0; m < points.size(); ++m) {
      cast_radial_vote(acc, points.points[m], radii(static_cast<Eigen::Index>(m), k));
    }
    KeypointEstimate est = extract_peak(acc);
    est.keypoint_index = static_cast<std::size_t>(k);
    estimates.push_back(est);
  }
  return estimates;
}

namespace {

template <typename T>
void put_le(std::ostream& out, T value) {
  static_assert(std::is_trivially_copyable_v<T>);
  unsigned char bytes[sizeof(T)];
  std::memcpy(bytes, &value, sizeof(T));
  if constexpr (std::endian::native == std::endian::big) std::reverse(std::begin(bytes), std::end(bytes));
  out.write(reinterpret_cast<const char*>(bytes), sizeof(T));
}

template <typename T>
T get_le(std::istream& in) {
  unsigned char bytes[sizeof(T)];
  if (!in.read(reinterpret_cast<char*>(bytes), sizeof(T))) {
    throw Error(ErrorKind::Parse, "truncated accumulator dump");
  }
  if constexpr (std::endian::native == std::endian::big) std::reverse(std::begin(bytes), std::end(bytes));
  T value;
  std::memcpy(&value, bytes, sizeof(T));
  return value;
}

constexpr char kMagic[8] = {'R', 'V', 'A', 'C', 'C', '0', '0', '1'};

}  // namespace

void write_accumulator(std::ostream& out, const Accumulator3D& acc) {
  out.write(kMagic, sizeof(kMagic));
  for (int a = 0; a < 3; ++a) put_le<std::uint32_t>(out, static_cast<std::uint32_t>(acc.dims()[a]));
  for (int a = 0; a < 3; ++a) put_le<double>(out, acc.origin()[a]);
  put_le<double>(out, acc.rho());
  for (auto c : acc.counts()) put_le<std::uint32_t>(out, c);
  if (!out) throw Error(ErrorKind::Io, "failed to write accumulator dump");
}

Accumulator3D read_accumulator(std::istream& in) {
  char magic[8];
  if (!in.read(magic, sizeof(magic)) || !std::equal(std::begin(magic), std::end(magic), std::begin(kMagic))) {
    throw Error(ErrorKind::Parse, "not an accumulator dump");
  }
  VoxelIndex dims{};
  for (int a = 0; a < 3; ++a) dims[a] = static_cast<int>(get_le<std::uint32_t>(in));
  Point3 origin;
  for (int a = 0; a < 3; ++a) origin[a] = get_le<double>(in);
  const double rho = get_le<double>(in);
  if (dims[0] < 1 || dims[1] < 1 || dims[2] < 1) throw Error(ErrorKind::Parse, "bad accumulator dims");
  const std::size_t n = static_cast<std::size_t>(dims[0]) * dims[1] * dims[2];
  std::vector<Accumulator3D::Count> counts(n);
  for (auto& c : counts) c = get_le<std::uint32_t>(in);
  return {origin, dims, rho, std::move(counts)};
}

}  // namespace radvote
