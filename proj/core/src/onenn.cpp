#include "entmap/onenn.hpp"

#include <stdexcept>

namespace entmap {

OneNNModel::OneNNModel(PointCloud sources, Matrix matched_targets, AssignmentPlan plan, NeighborSearch mode)
    : index_(std::move(sources), mode), matched_(std::move(matched_targets)), plan_(std::move(plan)) {
  if (matched_.rows() != index_.points().size()) throw std::invalid_argument("1NN model: length mismatch");
}

OneNNModel fit_onenn(const PointCloud& x, const PointCloud& y, NeighborSearch mode) {
  AssignmentPlan plan = solve_assignment(x, y);
  Matrix matched(x.size(), y.dim());
  for (Index i = 0; i < x.size(); ++i) matched.row(i) = y.point(plan.permutation[static_cast<std::size_t>(i)]);
  return OneNNModel(x, std::move(matched), std::move(plan), mode);
}

Point onenn_eval(const OneNNModel& model, PointView x) { return model.matched_targets().row(model.index().nearest(x)); }

Matrix onenn_eval_batch(const OneNNModel& model, const Matrix& xs) {
  Matrix out(xs.rows(), model.matched_targets().cols());
  for (Index i = 0; i < xs.rows(); ++i) out.row(i) = model.matched_targets().row(model.index().nearest(xs.row(i)));
  return out;
}

}  // namespace entmap
