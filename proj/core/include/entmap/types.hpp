#pragma once

#include <Eigen/Core>

namespace entmap {

using Index = Eigen::Index;

/// Row-major so that each point is a contiguous row.
using Matrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using Vector = Eigen::VectorXd;
using Point = Eigen::RowVectorXd;
using PointView = Eigen::Ref<const Point>;

}  // namespace entmap
