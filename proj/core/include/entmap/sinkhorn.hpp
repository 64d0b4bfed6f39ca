#pragma once

#include <iosfwd>
#include <stdexcept>
#include <vector>

#include "entmap/measures.hpp"

namespace entmap {

/// Cost convention carried by a set of dual potentials. Only the half
/// squared Euclidean cost c(x, y) = |x - y|^2 / 2 is used.
enum class CostConvention { kHalfSquaredDistance };

/// Entropic dual pair in cost convention: the optimal plan is
///   pi_ij = mu_i nu_j exp((f_i + g_j - c(x_i, y_j)) / epsilon).
struct DualPotentials {
  Vector f;
  Vector g;
  double epsilon = 0.0;
  CostConvention convention = CostConvention::kHalfSquaredDistance;
};

struct SinkhornReport {
  int iterations = 0;
  /// L1 distance between the plan's column sums and nu.
  double residual = 0.0;
  double entropic_cost = 0.0;
  bool converged = false;
  /// Residual after every iteration, when requested.
  std::vector<double> trace;
};

struct SinkhornOptions {
  double epsilon = 1.0;
  double tol = 1e-9;
  int max_iter = 100000;
  bool record_trace = false;
};

struct SinkhornResult {
  DualPotentials potentials;
  SinkhornReport report;
};

class SinkhornNotConverged : public std::runtime_error {
 public:
  SinkhornNotConverged(const std::string& what, SinkhornReport report)
      : std::runtime_error(what), report_(std::move(report)) {}
  const SinkhornReport& report() const { return report_; }

 private:
  SinkhornReport report_;
};

/// Phi_ij = |x_i - y_j|^2 / 2.
Matrix half_sqdist_cost(const PointCloud& x, const PointCloud& y);

/// Inner-product potentials phi(x) = |x|^2/2 - f, psi(y) = |y|^2/2 - g.
struct InnerProductPotentials {
  Vector phi;
  Vector psi;
};

namespace sinkhorn {

/// Log-domain Sinkhorn. Each iteration refits f exactly to mu, measures the
/// L1 residual of the column sums against nu and stops when it is <= tol,
/// otherwise refits g. The returned potentials satisfy sum_j nu_j g_j = 0.
///
/// Zero-weight atoms are removed before iterating. Their potentials are then
/// filled in from the softmin identities, so every returned entry is finite
/// and the corresponding plan rows/columns are zero.
///
/// Exceeding max_iter is reported through `report.converged`, not thrown.
SinkhornResult solve(const DiscreteMeasure& mu, const DiscreteMeasure& nu, const SinkhornOptions& options);

double plan_entry(const DualPotentials& pot, const DiscreteMeasure& mu, const DiscreteMeasure& nu, Index i, Index j);
Matrix plan(const DualPotentials& pot, const DiscreteMeasure& mu, const DiscreteMeasure& nu);

/// OT_eps = M2(mu)/2 + M2(nu)/2 - int phi dmu - int psi dnu.
double entropic_cost(const DualPotentials& pot, const DiscreteMeasure& mu, const DiscreteMeasure& nu);

InnerProductPotentials to_inner_product_potentials(const DualPotentials& pot, const DiscreteMeasure& mu,
                                                   const DiscreteMeasure& nu);

/// Plan entry computed from inner-product potentials:
///   mu_i nu_j exp((<x_i, y_j> - phi_i - psi_j) / epsilon).
double plan_entry_inner(const InnerProductPotentials& pot, double epsilon, const DiscreteMeasure& mu,
                        const DiscreteMeasure& nu, Index i, Index j);

/// `iter,residual` rows.
void write_trace_csv(const SinkhornReport& report, std::ostream& out);

}  // namespace sinkhorn
}  // namespace entmap
