#pragma once

#include <optional>
#include <string>

#include "entmap/measures.hpp"
#include "entmap/sinkhorn.hpp"

namespace entmap {

/// Exact semi-discrete Brenier map x -> y_{j*}, j* = argmax_j <x, y_j> - psi0_j.
/// Ties go to the lowest index. The preimages of the atoms are the Laguerre
/// cells.
class SemiDiscreteMap {
 public:
  SemiDiscreteMap(PointCloud atoms, Vector psi0);

  const PointCloud& atoms() const { return atoms_; }
  const Vector& psi0() const { return psi0_; }
  Index num_atoms() const { return atoms_.size(); }
  Index dim() const { return atoms_.dim(); }

  Index cell(PointView x) const;
  /// phi0(x) = max_j <x, y_j> - psi0_j.
  double potential(PointView x) const;

 private:
  PointCloud atoms_;
  Vector psi0_;
};

struct BrenierValue {
  Point point;
  Index cell;
};

BrenierValue brenier_eval(const SemiDiscreteMap& map, PointView x);
Matrix brenier_eval_batch(const SemiDiscreteMap& map, const Matrix& xs);

/// Delta_j(x) = 2 (phi0(x) - <x, y_j> + psi0_j) >= 0, zero iff j attains the max.
double slack(const SemiDiscreteMap& map, PointView x, Index j);

/// Fitted entropic map T(x) = sum_j w_j(x) y_j with
///   w_j(x) proportional to q_j exp((<x, y_j> - psi_j) / epsilon),
/// psi in inner-product convention. Evaluation only uses target-side data.
class EntropicMapModel {
 public:
  EntropicMapModel(PointCloud atoms, Vector weights, Vector psi, double epsilon,
                   std::optional<PointCloud> rounding_support = std::nullopt);

  const PointCloud& atoms() const { return atoms_; }
  const Vector& weights() const { return weights_; }
  const Vector& psi() const { return psi_; }
  double epsilon() const { return epsilon_; }
  Index num_atoms() const { return atoms_.size(); }
  Index dim() const { return atoms_.dim(); }

  const std::optional<PointCloud>& rounding_support() const { return rounding_support_; }
  /// Replace the rounding support, e.g. by the true support when known.
  void set_rounding_support(PointCloud support);

 private:
  PointCloud atoms_;
  Vector weights_;
  Vector psi_;
  double epsilon_;
  std::optional<PointCloud> rounding_support_;
  // log q_j - psi_j / epsilon, cached for evaluation.
  Vector log_prior_;

  friend void entropic_weights_into(const EntropicMapModel&, PointView, Vector&);
};

/// Runs Sinkhorn from mu to nu and keeps the target side. The rounding
/// support defaults to nu's atoms. Throws SinkhornNotConverged.
EntropicMapModel fit_entropic(const DiscreteMeasure& mu, const DiscreteMeasure& nu, double epsilon,
                              double tol = 1e-9, int max_iter = 100000);

/// Conditional weights pi^x over the target atoms.
Vector entropic_weights(const EntropicMapModel& model, PointView x);
void entropic_weights_into(const EntropicMapModel& model, PointView x, Vector& out);

Point entropic_eval(const EntropicMapModel& model, PointView x);
/// Nearest rounding-support atom to entropic_eval(x), lowest index on ties.
Point rounded_eval(const EntropicMapModel& model, PointView x);

struct MapEvaluation {
  Matrix outputs;
  /// n x J conditional weights, filled when requested.
  std::optional<Matrix> weights;
};

/// Block evaluation over the rows of xs.
MapEvaluation evaluate(const EntropicMapModel& model, const Matrix& xs, bool keep_weights = false);
Matrix entropic_eval_batch(const EntropicMapModel& model, const Matrix& xs);
Matrix rounded_eval_batch(const EntropicMapModel& model, const Matrix& xs);

/// Index of the nearest row of `support` to x, lowest index on ties.
Index nearest_atom(const PointCloud& support, PointView x);

/// JSON object {epsilon, atoms, weights, psi, convention}.
std::string to_json(const EntropicMapModel& model);
EntropicMapModel entropic_model_from_json(const std::string& text);

}  // namespace entmap
