#include "entmap/semidual.hpp"

#include <algorithm>
#include <cmath>
#include <string>
#include <vector>

#include <Eigen/Cholesky>

#include "entmap/numerics.hpp"

namespace entmap {

SemiDualProblem::SemiDualProblem(DiscreteMeasure source, PointCloud targets, Vector target_weights, double epsilon)
    : source_(std::move(source)),
      targets_(std::move(targets)),
      target_weights_(std::move(target_weights)),
      epsilon_(epsilon) {
  if (!(epsilon_ > 0.0)) throw std::invalid_argument("semidual: epsilon must be positive");
  if (targets_.dim() != source_.dim()) throw std::invalid_argument("semidual: dimension mismatch");
  if (target_weights_.size() != targets_.size()) throw std::invalid_argument("semidual: weight count mismatch");
  if (!(target_weights_.minCoeff() > 0.0)) throw std::invalid_argument("semidual: target weights must be positive");
  if (std::abs(target_weights_.sum() - 1.0) > 1e-10) throw std::invalid_argument("semidual: target weights must sum to 1");
}

DiscreteMeasure midpoint_grid_1d(double lo, double hi, Index nodes) {
  if (!(lo < hi) || nodes < 1) throw std::invalid_argument("midpoint grid needs lo < hi and nodes >= 1");
  Matrix x(nodes, 1);
  const double h = (hi - lo) / static_cast<double>(nodes);
  for (Index k = 0; k < nodes; ++k) x(k, 0) = lo + (static_cast<double>(k) + 0.5) * h;
  return DiscreteMeasure(PointCloud(std::move(x)), Vector::Constant(nodes, 1.0 / static_cast<double>(nodes)));
}

DiscreteMeasure midpoint_grid_2d(double lo, double hi, Index nodes_per_axis) {
  if (!(lo < hi) || nodes_per_axis < 1) throw std::invalid_argument("midpoint grid needs lo < hi and nodes >= 1");
  const Index n = nodes_per_axis * nodes_per_axis;
  Matrix x(n, 2);
  const double h = (hi - lo) / static_cast<double>(nodes_per_axis);
  for (Index a = 0; a < nodes_per_axis; ++a) {
    for (Index b = 0; b < nodes_per_axis; ++b) {
      x(a * nodes_per_axis + b, 0) = lo + (static_cast<double>(a) + 0.5) * h;
      x(a * nodes_per_axis + b, 1) = lo + (static_cast<double>(b) + 0.5) * h;
    }
  }
  return DiscreteMeasure(PointCloud(std::move(x)), Vector::Constant(n, 1.0 / static_cast<double>(n)));
}

namespace semidual {

namespace {

void require_shifted(const PotentialVector& psi) {
  if (!psi.shifted) throw std::invalid_argument("semidual: expected a shifted potential");
}

// Fills `logits` with (<x, y_j> - psi_j) / eps.
void fill_logits(const PotentialVector& psi, const PointCloud& targets, PointView x, double eps,
                 std::vector<double>& logits) {
  if (psi.values.size() != targets.size()) throw std::invalid_argument("semidual: potential length mismatch");
  logits.resize(static_cast<std::size_t>(targets.size()));
  for (Index j = 0; j < targets.size(); ++j) {
    logits[static_cast<std::size_t>(j)] = (targets.point(j).dot(x) - psi.values(j)) / eps;
  }
}

}  // namespace

PotentialVector shift(const Vector& psi, const Vector& nu, double epsilon) {
  return {psi - epsilon * nu.array().log().matrix(), true};
}

Vector unshift(const PotentialVector& psi, const Vector& nu, double epsilon) {
  require_shifted(psi);
  return psi.values + epsilon * nu.array().log().matrix();
}

PotentialVector from_sinkhorn(const DualPotentials& pot, const DiscreteMeasure& nu) {
  const Vector psi = 0.5 * nu.atoms().points().rowwise().squaredNorm() - pot.g;
  return shift(psi, nu.weights(), pot.epsilon);
}

double phi_transform(const PotentialVector& psi, const PointCloud& targets, PointView x, double epsilon) {
  require_shifted(psi);
  std::vector<double> logits;
  fill_logits(psi, targets, x, epsilon, logits);
  return epsilon * log_sum_exp(logits);
}

Vector conditional_weights(const PotentialVector& psi, const PointCloud& targets, PointView x, double epsilon) {
  require_shifted(psi);
  std::vector<double> logits;
  fill_logits(psi, targets, x, epsilon, logits);
  softmax_inplace(logits);
  return Eigen::Map<Vector>(logits.data(), static_cast<Index>(logits.size()));
}

double semidual_value_and_gradient(const SemiDualProblem& prob, const PotentialVector& psi, Vector& gradient) {
  require_shifted(psi);
  const double eps = prob.epsilon();
  const auto& src = prob.source();
  const Index J = prob.num_targets();
  std::vector<double> logits;
  std::vector<CompensatedSum> push(static_cast<std::size_t>(J));
  CompensatedSum value;
  for (Index k = 0; k < src.size(); ++k) {
    fill_logits(psi, prob.targets(), src.atoms().point(k), eps, logits);
    const double lse = softmax_inplace(logits);
    value += src.weight(k) * eps * lse;
    for (Index j = 0; j < J; ++j) push[static_cast<std::size_t>(j)] += src.weight(k) * logits[static_cast<std::size_t>(j)];
  }
  gradient.resize(J);
  for (Index j = 0; j < J; ++j) {
    gradient(j) = prob.target_weights()(j) - push[static_cast<std::size_t>(j)].value();
    value += psi.values(j) * prob.target_weights()(j);
  }
  return value.value();
}

double semidual_value(const SemiDualProblem& prob, const PotentialVector& psi) {
  Vector g;
  return semidual_value_and_gradient(prob, psi, g);
}

Vector semidual_gradient(const SemiDualProblem& prob, const PotentialVector& psi) {
  Vector g;
  semidual_value_and_gradient(prob, psi, g);
  return g;
}

Vector pushforward_weights(const SemiDualProblem& prob, const PotentialVector& psi) {
  return prob.target_weights() - semidual_gradient(prob, psi);
}

namespace {

// Hessian of F: (1/eps) int (diag(pi^x) - pi^x pi^x^T) dmu(x).
Matrix semidual_hessian(const SemiDualProblem& prob, const PotentialVector& psi) {
  const Index J = prob.num_targets();
  const auto& src = prob.source();
  Matrix h = Matrix::Zero(J, J);
  std::vector<double> logits;
  for (Index k = 0; k < src.size(); ++k) {
    fill_logits(psi, prob.targets(), src.atoms().point(k), prob.epsilon(), logits);
    softmax_inplace(logits);
    const Eigen::Map<const Vector> p(logits.data(), J);
    h.noalias() -= src.weight(k) * p * p.transpose();
    h.diagonal() += src.weight(k) * p;
  }
  return h / prob.epsilon();
}

}  // namespace

PotentialVector solve_population(const SemiDualProblem& prob, double tol, int max_iter, SolveStats* stats) {
  const Index J = prob.num_targets();
  const Vector& nu = prob.target_weights();
  PotentialVector psi{Vector::Zero(J), true};
  Vector grad;
  double value = semidual_value_and_gradient(prob, psi, grad);
  constexpr double kArmijo = 1e-4;

  int it = 0;
  for (; it < max_iter; ++it) {
    const double gnorm = grad.lpNorm<Eigen::Infinity>();
    if (gnorm <= tol) break;

    // Constant shifts leave F unchanged, so H is singular along the ones
    // vector; adding a multiple of 1 1^T removes that null direction
    // without changing the step on the gradient's subspace.
    Matrix h = semidual_hessian(prob, psi);
    const double scale = std::max(h.trace() / static_cast<double>(J), 1e-300);
    h.array() += scale / static_cast<double>(J);
    h.diagonal().array() += 1e-12 * scale;
    Vector direction = h.ldlt().solve(-grad);
    double slope = grad.dot(direction);
    if (!direction.allFinite() || !(slope < 0.0)) {
      direction = -prob.epsilon() * grad;
      slope = grad.dot(direction);
    }

    PotentialVector trial{Vector(J), true};
    Vector trial_grad;
    bool accepted = false;
    double step = 1.0;
    for (int halvings = 0; halvings < 60; ++halvings) {
      trial.values = psi.values + step * direction;
      const double trial_value = semidual_value_and_gradient(prob, trial, trial_grad);
      if (trial_value <= value + kArmijo * step * slope) {
        value = trial_value;
        accepted = true;
        break;
      }
      // Near the optimum the sufficient decrease drops below the rounding
      // level of F; fall back to requiring a smaller gradient.
      const double noise = 1e-13 * (1.0 + std::abs(value));
      if (std::abs(trial_value - value) <= noise && trial_grad.lpNorm<Eigen::Infinity>() < gnorm) {
        value = trial_value;
        accepted = true;
        break;
      }
      step *= 0.5;
    }
    if (!accepted) {
      throw SemiDualNotConverged("semidual: line search failed, |grad|_inf = " + std::to_string(gnorm), gnorm);
    }
    psi = trial;
    grad = trial_grad;
  }

  const double gnorm = grad.lpNorm<Eigen::Infinity>();
  if (stats) {
    stats->iterations = it;
    stats->gradient_norm = gnorm;
  }
  if (gnorm > tol) {
    throw SemiDualNotConverged("semidual: max_iter reached, |grad|_inf = " + std::to_string(gnorm), gnorm);
  }
  psi.values.array() -= nu.dot(psi.values);
  return psi;
}

}  // namespace semidual
}  // namespace entmap
