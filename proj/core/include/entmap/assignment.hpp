#pragma once

#include <vector>

#include "entmap/measures.hpp"

namespace entmap {

/// Row i is assigned to column permutation[i].
struct AssignmentPlan {
  std::vector<Index> permutation;
  double objective = 0.0;
};

/// Exact minimum-cost assignment for a dense square cost matrix.
///
/// Jonker-Volgenant: column reduction, reduction transfer, two rounds of
/// augmenting row reduction, then Dijkstra-style shortest augmenting paths
/// for the rows left free. O(n^3) worst case.
AssignmentPlan solve_assignment(const Matrix& cost);

/// Optimal matching of equal-size samples under |x - y|^2 / 2.
AssignmentPlan solve_assignment(const PointCloud& x, const PointCloud& y);

/// Checks that `permutation` is a bijection on [0, n).
bool is_permutation(const std::vector<Index>& permutation);

}  // namespace entmap
