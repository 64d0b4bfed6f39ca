#include "entmap/maps.hpp"

#include <cmath>
#include <limits>
#include <vector>

#include "entmap/numerics.hpp"
#include "entmap/semidual.hpp"

namespace entmap {

SemiDiscreteMap::SemiDiscreteMap(PointCloud atoms, Vector psi0) : atoms_(std::move(atoms)), psi0_(std::move(psi0)) {
  if (psi0_.size() != atoms_.size()) throw std::invalid_argument("semi-discrete map: psi0 length mismatch");
  if (!psi0_.allFinite()) throw std::invalid_argument("semi-discrete map: psi0 must be finite");
}

Index SemiDiscreteMap::cell(PointView x) const {
  Index best = 0;
  double best_score = -std::numeric_limits<double>::infinity();
  for (Index j = 0; j < atoms_.size(); ++j) {
    const double score = atoms_.point(j).dot(x) - psi0_(j);
    if (score > best_score) {
      best_score = score;
      best = j;
    }
  }
  return best;
}

double SemiDiscreteMap::potential(PointView x) const {
  double best = -std::numeric_limits<double>::infinity();
  for (Index j = 0; j < atoms_.size(); ++j) best = std::max(best, atoms_.point(j).dot(x) - psi0_(j));
  return best;
}

BrenierValue brenier_eval(const SemiDiscreteMap& map, PointView x) {
  const Index j = map.cell(x);
  return {map.atoms().point(j), j};
}

Matrix brenier_eval_batch(const SemiDiscreteMap& map, const Matrix& xs) {
  Matrix out(xs.rows(), map.dim());
  for (Index i = 0; i < xs.rows(); ++i) out.row(i) = map.atoms().point(map.cell(xs.row(i)));
  return out;
}

double slack(const SemiDiscreteMap& map, PointView x, Index j) {
  return 2.0 * (map.potential(x) - (map.atoms().point(j).dot(x) - map.psi0()(j)));
}

EntropicMapModel::EntropicMapModel(PointCloud atoms, Vector weights, Vector psi, double epsilon,
                                   std::optional<PointCloud> rounding_support)
    : atoms_(std::move(atoms)),
      weights_(std::move(weights)),
      psi_(std::move(psi)),
      epsilon_(epsilon),
      rounding_support_(std::move(rounding_support)) {
  if (!(epsilon_ > 0.0)) throw std::invalid_argument("entropic model: epsilon must be positive");
  if (weights_.size() != atoms_.size() || psi_.size() != atoms_.size()) {
    throw std::invalid_argument("entropic model: length mismatch");
  }
  if (!(weights_.minCoeff() > 0.0) || std::abs(weights_.sum() - 1.0) > DiscreteMeasure::kMassTolerance) {
    throw std::invalid_argument("entropic model: weights must be positive and sum to 1");
  }
  if (!psi_.allFinite()) throw std::invalid_argument("entropic model: psi must be finite");
  if (rounding_support_ && rounding_support_->dim() != atoms_.dim()) {
    throw std::invalid_argument("entropic model: rounding support dimension mismatch");
  }
  log_prior_ = weights_.array().log() - psi_.array() / epsilon_;
}

void EntropicMapModel::set_rounding_support(PointCloud support) {
  if (support.dim() != atoms_.dim()) throw std::invalid_argument("rounding support dimension mismatch");
  rounding_support_ = std::move(support);
}

EntropicMapModel fit_entropic(const DiscreteMeasure& mu, const DiscreteMeasure& nu, double epsilon, double tol,
                              int max_iter) {
  SinkhornOptions opts;
  opts.epsilon = epsilon;
  opts.tol = tol;
  opts.max_iter = max_iter;
  auto result = sinkhorn::solve(mu, nu, opts);
  if (!result.report.converged) {
    throw SinkhornNotConverged("fit_entropic: Sinkhorn did not converge, residual " +
                                   std::to_string(result.report.residual),
                               result.report);
  }
  // Zero-weight target atoms carry no mass in the map; drop them.
  std::vector<Index> kept;
  const DiscreteMeasure target = drop_zero_weights(nu, &kept);
  const auto ip = sinkhorn::to_inner_product_potentials(result.potentials, mu, nu);
  Vector psi(static_cast<Index>(kept.size()));
  for (std::size_t r = 0; r < kept.size(); ++r) psi(static_cast<Index>(r)) = ip.psi(kept[r]);
  return EntropicMapModel(target.atoms(), target.weights(), std::move(psi), epsilon, target.atoms());
}

void entropic_weights_into(const EntropicMapModel& model, PointView x, Vector& out) {
  const Index J = model.num_atoms();
  out.resize(J);
  const double inv_eps = 1.0 / model.epsilon_;
  for (Index j = 0; j < J; ++j) out(j) = model.log_prior_(j) + model.atoms_.point(j).dot(x) * inv_eps;
  softmax_inplace(std::span<double>(out.data(), static_cast<std::size_t>(J)));
}

Vector entropic_weights(const EntropicMapModel& model, PointView x) {
  Vector w;
  entropic_weights_into(model, x, w);
  return w;
}

Point entropic_eval(const EntropicMapModel& model, PointView x) {
  const Vector w = entropic_weights(model, x);
  return w.transpose() * model.atoms().points();
}

Index nearest_atom(const PointCloud& support, PointView x) {
  Index best = 0;
  double best_d = std::numeric_limits<double>::infinity();
  for (Index j = 0; j < support.size(); ++j) {
    const double d = (support.point(j) - x).squaredNorm();
    if (d < best_d) {
      best_d = d;
      best = j;
    }
  }
  return best;
}

Point rounded_eval(const EntropicMapModel& model, PointView x) {
  if (!model.rounding_support()) throw std::invalid_argument("rounded_eval: model has no rounding support");
  const auto& support = *model.rounding_support();
  return support.point(nearest_atom(support, entropic_eval(model, x)));
}

MapEvaluation evaluate(const EntropicMapModel& model, const Matrix& xs, bool keep_weights) {
  constexpr Index kBlock = 1024;
  const Index n = xs.rows();
  const Index J = model.num_atoms();
  MapEvaluation ev;
  ev.outputs.resize(n, model.dim());
  if (keep_weights) ev.weights = Matrix(n, J);
  Matrix block_w;
  Vector w;
  for (Index start = 0; start < n; start += kBlock) {
    const Index len = std::min(kBlock, n - start);
    block_w.resize(len, J);
    for (Index r = 0; r < len; ++r) {
      entropic_weights_into(model, xs.row(start + r), w);
      block_w.row(r) = w.transpose();
    }
    ev.outputs.middleRows(start, len).noalias() = block_w * model.atoms().points();
    if (keep_weights) ev.weights->middleRows(start, len) = block_w;
  }
  return ev;
}

Matrix entropic_eval_batch(const EntropicMapModel& model, const Matrix& xs) { return evaluate(model, xs).outputs; }

Matrix rounded_eval_batch(const EntropicMapModel& model, const Matrix& xs) {
  if (!model.rounding_support()) throw std::invalid_argument("rounded_eval: model has no rounding support");
  const auto& support = *model.rounding_support();
  Matrix out = entropic_eval_batch(model, xs);
  for (Index i = 0; i < out.rows(); ++i) out.row(i) = support.point(nearest_atom(support, out.row(i)));
  return out;
}

}  // namespace entmap
