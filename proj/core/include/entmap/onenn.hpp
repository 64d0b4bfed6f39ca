#pragma once

#include "entmap/assignment.hpp"
#include "entmap/nearest_neighbor.hpp"

namespace entmap {

/// 1-nearest-neighbor transport map estimator: the optimal matching
/// X_i -> Y_{perm(i)} between the samples, extended to all of R^d by
/// returning the match of the nearest X_i (Voronoi cells of the sources).
class OneNNModel {
 public:
  OneNNModel(PointCloud sources, Matrix matched_targets, AssignmentPlan plan,
             NeighborSearch mode = NeighborSearch::kAuto);

  const PointCloud& sources() const { return index_.points(); }
  const Matrix& matched_targets() const { return matched_; }
  const AssignmentPlan& plan() const { return plan_; }
  const NearestNeighborIndex& index() const { return index_; }
  Index size() const { return matched_.rows(); }

 private:
  NearestNeighborIndex index_;
  Matrix matched_;
  AssignmentPlan plan_;
};

OneNNModel fit_onenn(const PointCloud& x, const PointCloud& y, NeighborSearch mode = NeighborSearch::kAuto);

Point onenn_eval(const OneNNModel& model, PointView x);
Matrix onenn_eval_batch(const OneNNModel& model, const Matrix& xs);

}  // namespace entmap
