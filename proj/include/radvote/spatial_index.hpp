#pragma once

#include "radvote/geometry.hpp"

#include <cstddef>
#include <span>
#include <vector>

namespace radvote {

// Static 3-d tree over a point set, exact nearest-neighbour queries.
class KdTree {
 public:
  struct Neighbor {
    std::size_t index;
    double squared_distance;
  };

  explicit KdTree(std::span<const Point3> points);

  std::size_t size() const { return points_.size(); }
  // Ties resolve to the lowest point index. Requires a non-empty tree.
  Neighbor nearest(const Point3& query) const;

 private:
  struct Node {
    std::size_t begin, end;  // range in order_
    int axis = -1;           // -1 for leaves
    double split = 0.0;
    std::size_t left = 0, right = 0;
  };

  std::size_t build(std::size_t begin, std::size_t end);
  void search(std::size_t node, const Point3& q, Neighbor& best) const;

  std::vector<Point3> points_;
  std::vector<std::size_t> order_;
  std::vector<Node> nodes_;
};

}  // namespace radvote
