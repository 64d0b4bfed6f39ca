#include "entmap/assignment.hpp"

#include <limits>
#include <stdexcept>

#include "entmap/numerics.hpp"
#include "entmap/sinkhorn.hpp"

namespace entmap {

namespace {

constexpr Index kFree = -1;

}  // namespace

AssignmentPlan solve_assignment(const Matrix& cost) {
  if (cost.rows() != cost.cols()) throw std::invalid_argument("assignment: cost matrix must be square");
  if (cost.rows() < 1) throw std::invalid_argument("assignment: empty cost matrix");
  if (!cost.allFinite()) throw std::invalid_argument("assignment: non-finite cost");
  const Index n = cost.rows();
  constexpr double kInf = std::numeric_limits<double>::infinity();

  std::vector<Index> row_sol(static_cast<std::size_t>(n), kFree);
  std::vector<Index> col_sol(static_cast<std::size_t>(n), kFree);
  std::vector<double> v(static_cast<std::size_t>(n));
  std::vector<Index> matches(static_cast<std::size_t>(n), 0);
  std::vector<Index> free_rows(static_cast<std::size_t>(n));

  auto rs = [&](Index i) -> Index& { return row_sol[static_cast<std::size_t>(i)]; };
  auto cs = [&](Index j) -> Index& { return col_sol[static_cast<std::size_t>(j)]; };
  auto V = [&](Index j) -> double& { return v[static_cast<std::size_t>(j)]; };

  // Column reduction, scanned in reverse.
  for (Index j = n - 1; j >= 0; --j) {
    Index imin = 0;
    double best = cost(0, j);
    for (Index i = 1; i < n; ++i) {
      if (cost(i, j) < best) {
        best = cost(i, j);
        imin = i;
      }
    }
    V(j) = best;
    if (++matches[static_cast<std::size_t>(imin)] == 1) {
      rs(imin) = j;
      cs(j) = imin;
    } else if (V(j) < V(rs(imin))) {
      const Index j1 = rs(imin);
      rs(imin) = j;
      cs(j) = imin;
      cs(j1) = kFree;
    } else {
      cs(j) = kFree;
    }
  }

  // Reduction transfer.
  Index num_free = 0;
  for (Index i = 0; i < n; ++i) {
    if (matches[static_cast<std::size_t>(i)] == 0) {
      free_rows[static_cast<std::size_t>(num_free++)] = i;
    } else if (matches[static_cast<std::size_t>(i)] == 1) {
      const Index j1 = rs(i);
      double m = kInf;
      for (Index j = 0; j < n; ++j) {
        if (j != j1) m = std::min(m, cost(i, j) - V(j));
      }
      if (m < kInf) V(j1) -= m;
    }
  }

  // Augmenting row reduction, two passes. The step budget guards against
  // cycling on floating-point ties; rows left over go to the augmentation.
  for (int pass = 0; pass < 2; ++pass) {
    Index k = 0;
    const Index prev_free = num_free;
    num_free = 0;
    Index budget = 4 * n + 16;
    while (k < prev_free) {
      const Index i = free_rows[static_cast<std::size_t>(k++)];
      if (budget-- <= 0) {
        free_rows[static_cast<std::size_t>(num_free++)] = i;
        continue;
      }
      double umin = cost(i, 0) - V(0);
      Index j1 = 0;
      Index j2 = 0;
      double usub = kInf;
      for (Index j = 1; j < n; ++j) {
        const double h = cost(i, j) - V(j);
        if (h < usub) {
          if (h >= umin) {
            usub = h;
            j2 = j;
          } else {
            usub = umin;
            umin = h;
            j2 = j1;
            j1 = j;
          }
        }
      }
      Index i0 = cs(j1);
      if (umin < usub) {
        V(j1) -= usub - umin;
      } else if (i0 != kFree) {
        j1 = j2;
        i0 = cs(j2);
      }
      rs(i) = j1;
      cs(j1) = i;
      if (i0 != kFree) {
        rs(i0) = kFree;
        if (umin < usub) {
          free_rows[static_cast<std::size_t>(--k)] = i0;
        } else {
          free_rows[static_cast<std::size_t>(num_free++)] = i0;
        }
      }
    }
  }

  // Shortest augmenting paths.
  std::vector<double> dist(static_cast<std::size_t>(n));
  std::vector<Index> pred(static_cast<std::size_t>(n));
  std::vector<Index> col_list(static_cast<std::size_t>(n));
  auto D = [&](Index j) -> double& { return dist[static_cast<std::size_t>(j)]; };
  auto CL = [&](Index k) -> Index& { return col_list[static_cast<std::size_t>(k)]; };

  for (Index f = 0; f < num_free; ++f) {
    const Index free_row = free_rows[static_cast<std::size_t>(f)];
    for (Index j = 0; j < n; ++j) {
      D(j) = cost(free_row, j) - V(j);
      pred[static_cast<std::size_t>(j)] = free_row;
      CL(j) = j;
    }
    Index low = 0;
    Index up = 0;
    Index last = 0;
    Index end_of_path = kFree;
    double dmin = 0.0;
    bool found = false;
    while (!found) {
      if (up == low) {
        last = low - 1;
        dmin = D(CL(up++));
        for (Index k = up; k < n; ++k) {
          const Index j = CL(k);
          const double h = D(j);
          if (h <= dmin) {
            if (h < dmin) {
              up = low;
              dmin = h;
            }
            CL(k) = CL(up);
            CL(up++) = j;
          }
        }
        for (Index k = low; k < up; ++k) {
          if (cs(CL(k)) == kFree) {
            end_of_path = CL(k);
            found = true;
            break;
          }
        }
      }
      if (!found) {
        const Index j1 = CL(low++);
        const Index i = cs(j1);
        const double h = cost(i, j1) - V(j1) - dmin;
        for (Index k = up; k < n; ++k) {
          const Index j = CL(k);
          const double v2 = cost(i, j) - V(j) - h;
          if (v2 < D(j)) {
            pred[static_cast<std::size_t>(j)] = i;
            if (v2 == dmin) {
              if (cs(j) == kFree) {
                end_of_path = j;
                found = true;
                break;
              }
              CL(k) = CL(up);
              CL(up++) = j;
            }
            D(j) = v2;
          }
        }
      }
    }
    for (Index k = 0; k <= last; ++k) {
      const Index j1 = CL(k);
      V(j1) += D(j1) - dmin;
    }
    Index i = kFree;
    do {
      i = pred[static_cast<std::size_t>(end_of_path)];
      cs(end_of_path) = i;
      const Index j1 = end_of_path;
      end_of_path = rs(i);
      rs(i) = j1;
    } while (i != free_row);
  }

  AssignmentPlan plan;
  plan.permutation = std::move(row_sol);
  CompensatedSum total;
  for (Index i = 0; i < n; ++i) total += cost(i, plan.permutation[static_cast<std::size_t>(i)]);
  plan.objective = total.value();
  if (!is_permutation(plan.permutation)) throw std::logic_error("assignment: solver produced an invalid matching");
  return plan;
}

AssignmentPlan solve_assignment(const PointCloud& x, const PointCloud& y) {
  if (x.size() != y.size()) throw std::invalid_argument("assignment: samples must have equal size");
  return solve_assignment(half_sqdist_cost(x, y));
}

bool is_permutation(const std::vector<Index>& permutation) {
  std::vector<bool> seen(permutation.size(), false);
  for (Index p : permutation) {
    if (p < 0 || static_cast<std::size_t>(p) >= permutation.size() || seen[static_cast<std::size_t>(p)]) return false;
    seen[static_cast<std::size_t>(p)] = true;
  }
  return true;
}

}  // namespace entmap
