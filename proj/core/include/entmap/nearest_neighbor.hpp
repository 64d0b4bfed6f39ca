#pragma once

#include <memory>
#include <vector>

#include "entmap/measures.hpp"

namespace entmap {

enum class NeighborSearch {
  kBruteForce,
  kKdTree,
  /// kd-tree for d <= 8, where it beats the scan; linear scan otherwise.
  kAuto,
};

/// Exact nearest-neighbor lookup. Ties in distance go to the lowest index,
/// and both backends compute distances with the same arithmetic so they
/// return identical answers.
class NearestNeighborIndex {
 public:
  static constexpr Index kMaxKdTreeDim = 16;
  static constexpr Index kAutoKdTreeDim = 8;

  explicit NearestNeighborIndex(PointCloud points, NeighborSearch mode = NeighborSearch::kAuto);
  ~NearestNeighborIndex();
  NearestNeighborIndex(NearestNeighborIndex&&) noexcept;
  NearestNeighborIndex& operator=(NearestNeighborIndex&&) noexcept;

  Index nearest(PointView x) const;
  /// Linear scan regardless of backend.
  Index nearest_brute_force(PointView x) const;

  bool uses_kd_tree() const { return tree_ != nullptr; }
  const PointCloud& points() const { return points_; }

 private:
  struct KdTree;
  PointCloud points_;
  std::unique_ptr<KdTree> tree_;
};

}  // namespace entmap
