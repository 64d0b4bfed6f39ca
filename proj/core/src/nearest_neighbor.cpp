#include "entmap/nearest_neighbor.hpp"

#include <algorithm>
#include <limits>
#include <numeric>
#include <stdexcept>
#include <string>

namespace entmap {

namespace {

double squared_distance(const double* a, const double* b, Index d) {
  double s = 0.0;
  for (Index c = 0; c < d; ++c) {
    const double t = a[c] - b[c];
    s += t * t;
  }
  return s;
}

constexpr Index kLeafSize = 8;

}  // namespace

struct NearestNeighborIndex::KdTree {
  struct Node {
    Index begin = 0;
    Index end = 0;
    Index split_dim = -1;  // -1 marks a leaf
    double split_value = 0.0;
    Index left = -1;
    Index right = -1;
  };

  const Matrix* pts = nullptr;
  std::vector<Index> order;
  std::vector<Node> nodes;

  explicit KdTree(const Matrix& points) : pts(&points), order(static_cast<std::size_t>(points.rows())) {
    std::iota(order.begin(), order.end(), Index{0});
    build(0, points.rows());
  }

  Index build(Index begin, Index end) {
    const Index id = static_cast<Index>(nodes.size());
    nodes.push_back(Node{begin, end});
    if (end - begin <= kLeafSize) return id;

    const Index d = pts->cols();
    Index best_dim = 0;
    double best_spread = -1.0;
    for (Index c = 0; c < d; ++c) {
      double lo = std::numeric_limits<double>::infinity();
      double hi = -lo;
      for (Index k = begin; k < end; ++k) {
        const double v = (*pts)(order[static_cast<std::size_t>(k)], c);
        lo = std::min(lo, v);
        hi = std::max(hi, v);
      }
      if (hi - lo > best_spread) {
        best_spread = hi - lo;
        best_dim = c;
      }
    }
    if (best_spread <= 0.0) return id;  // all points identical

    const Index mid = begin + (end - begin) / 2;
    auto first = order.begin() + begin;
    std::nth_element(first, order.begin() + mid, order.begin() + end, [&](Index a, Index b) {
      return (*pts)(a, best_dim) < (*pts)(b, best_dim);
    });
    const double split = (*pts)(order[static_cast<std::size_t>(mid)], best_dim);
    const Index left = build(begin, mid);
    const Index right = build(mid, end);
    Node& node = nodes[static_cast<std::size_t>(id)];
    node.split_dim = best_dim;
    node.split_value = split;
    node.left = left;
    node.right = right;
    return id;
  }

  // Points in [begin, mid) have coordinate <= split, points in [mid, end) >= split.
  void search(Index id, const double* x, double& best_d, Index& best_i) const {
    const Node& node = nodes[static_cast<std::size_t>(id)];
    const Index d = pts->cols();
    if (node.split_dim < 0) {
      for (Index k = node.begin; k < node.end; ++k) {
        const Index i = order[static_cast<std::size_t>(k)];
        const double dist = squared_distance(pts->row(i).data(), x, d);
        if (dist < best_d || (dist == best_d && i < best_i)) {
          best_d = dist;
          best_i = i;
        }
      }
      return;
    }
    const double diff = x[node.split_dim] - node.split_value;
    const Index near = diff <= 0.0 ? node.left : node.right;
    const Index far = diff <= 0.0 ? node.right : node.left;
    search(near, x, best_d, best_i);
    // Ties must also be explored so the lowest index wins.
    if (diff * diff <= best_d) search(far, x, best_d, best_i);
  }
};

NearestNeighborIndex::NearestNeighborIndex(PointCloud points, NeighborSearch mode) : points_(std::move(points)) {
  if (mode == NeighborSearch::kKdTree && points_.dim() > kMaxKdTreeDim) {
    throw std::invalid_argument("kd-tree search supports d <= " + std::to_string(kMaxKdTreeDim));
  }
  const bool tree = mode == NeighborSearch::kKdTree ||
                    (mode == NeighborSearch::kAuto && points_.dim() <= kAutoKdTreeDim && points_.size() > kLeafSize);
  if (tree) tree_ = std::make_unique<KdTree>(points_.points());
}

NearestNeighborIndex::~NearestNeighborIndex() = default;
NearestNeighborIndex::NearestNeighborIndex(NearestNeighborIndex&& other) noexcept
    : points_(std::move(other.points_)), tree_(std::move(other.tree_)) {
  if (tree_) tree_->pts = &points_.points();
}
NearestNeighborIndex& NearestNeighborIndex::operator=(NearestNeighborIndex&& other) noexcept {
  points_ = std::move(other.points_);
  tree_ = std::move(other.tree_);
  if (tree_) tree_->pts = &points_.points();
  return *this;
}

Index NearestNeighborIndex::nearest_brute_force(PointView x) const {
  if (x.size() != points_.dim()) throw std::invalid_argument("nearest neighbor: query dimension mismatch");
  const Matrix& pts = points_.points();
  const Index d = points_.dim();
  Index best = 0;
  double best_d = std::numeric_limits<double>::infinity();
  for (Index i = 0; i < pts.rows(); ++i) {
    const double dist = squared_distance(pts.row(i).data(), x.data(), d);
    if (dist < best_d) {
      best_d = dist;
      best = i;
    }
  }
  return best;
}

Index NearestNeighborIndex::nearest(PointView x) const {
  if (!tree_) return nearest_brute_force(x);
  if (x.size() != points_.dim()) throw std::invalid_argument("nearest neighbor: query dimension mismatch");
  double best_d = std::numeric_limits<double>::infinity();
  Index best_i = std::numeric_limits<Index>::max();
  tree_->search(0, x.data(), best_d, best_i);
  return best_i;
}

}  // namespace entmap
