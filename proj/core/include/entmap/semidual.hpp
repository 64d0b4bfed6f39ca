#pragma once

#include <stdexcept>

#include "entmap/measures.hpp"
#include "entmap/sinkhorn.hpp"

namespace entmap {

/// Target-side potential on J atoms, inner-product convention. When
/// `shifted` is set the entries are psi_j - epsilon * log(nu_j), the form the
/// counting-measure transform and the semi-dual functional act on.
struct PotentialVector {
  Vector values;
  bool shifted = true;
};

/// Semi-dual problem: a source measure (empirical sample or quadrature grid
/// approximating a density) against a discrete target.
class SemiDualProblem {
 public:
  SemiDualProblem(DiscreteMeasure source, PointCloud targets, Vector target_weights, double epsilon);

  const DiscreteMeasure& source() const { return source_; }
  const PointCloud& targets() const { return targets_; }
  const Vector& target_weights() const { return target_weights_; }
  double epsilon() const { return epsilon_; }
  Index num_targets() const { return targets_.size(); }

 private:
  DiscreteMeasure source_;
  PointCloud targets_;
  Vector target_weights_;
  double epsilon_;
};

class SemiDualNotConverged : public std::runtime_error {
 public:
  SemiDualNotConverged(const std::string& what, double gradient_norm)
      : std::runtime_error(what), gradient_norm_(gradient_norm) {}
  double gradient_norm() const { return gradient_norm_; }

 private:
  double gradient_norm_;
};

/// Composite midpoint rule on [lo, hi] as a probability measure.
DiscreteMeasure midpoint_grid_1d(double lo, double hi, Index nodes);
/// Tensor midpoint rule on [lo, hi]^2.
DiscreteMeasure midpoint_grid_2d(double lo, double hi, Index nodes_per_axis);

namespace semidual {

PotentialVector shift(const Vector& psi, const Vector& nu, double epsilon);
Vector unshift(const PotentialVector& psi, const Vector& nu, double epsilon);

/// The one place where the two dual conventions meet: converts Sinkhorn's
/// half-sqdist target potential g into a shifted inner-product potential,
///   psi~_j = |y_j|^2 / 2 - g_j - epsilon * log(nu_j).
PotentialVector from_sinkhorn(const DualPotentials& pot, const DiscreteMeasure& nu);

/// epsilon * log sum_j exp((<x, y_j> - psi_j) / epsilon).
double phi_transform(const PotentialVector& psi, const PointCloud& targets, PointView x, double epsilon);

/// Softmax over j of (<x, y_j> - psi_j) / epsilon.
Vector conditional_weights(const PotentialVector& psi, const PointCloud& targets, PointView x, double epsilon);

/// F(psi) = int Phi_eps(psi) dmu + <psi, nu>.
double semidual_value(const SemiDualProblem& prob, const PotentialVector& psi);
/// grad F(psi) = nu - int pi^x[psi] dmu(x).
Vector semidual_gradient(const SemiDualProblem& prob, const PotentialVector& psi);
/// Value and gradient in one pass over the source.
double semidual_value_and_gradient(const SemiDualProblem& prob, const PotentialVector& psi, Vector& gradient);

/// int pi^x[psi] dmu(x).
Vector pushforward_weights(const SemiDualProblem& prob, const PotentialVector& psi);

struct SolveStats {
  int iterations = 0;
  double gradient_norm = 0.0;
};

/// Damped Newton with Armijo backtracking (step halving) from psi~ = 0,
/// until |grad F|_inf <= tol. The result is shifted and gauge-fixed to
/// sum_j nu_j psi~_j = 0. Throws SemiDualNotConverged after max_iter.
PotentialVector solve_population(const SemiDualProblem& prob, double tol = 1e-8, int max_iter = 10000,
                                 SolveStats* stats = nullptr);

}  // namespace semidual
}  // namespace entmap
