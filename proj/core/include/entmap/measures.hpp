#pragma once

#include <optional>
#include <stdexcept>
#include <vector>

#include "entmap/random.hpp"
#include "entmap/types.hpp"

namespace entmap {

/// n x d matrix of finite coordinates, one point per row.
class PointCloud {
 public:
  explicit PointCloud(Matrix points);
  /// Additionally checks that every point lies in the closed ball B(0; radius).
  PointCloud(Matrix points, double radius);

  Index size() const { return points_.rows(); }
  Index dim() const { return points_.cols(); }
  const Matrix& points() const { return points_; }
  auto point(Index i) const { return points_.row(i); }
  std::optional<double> radius() const { return radius_; }

  /// Largest Euclidean norm over the points.
  double max_norm() const;

 private:
  Matrix points_;
  std::optional<double> radius_;
};

/// Weighted atoms. Weights are nonnegative and sum to one within 1e-12.
class DiscreteMeasure {
 public:
  static constexpr double kMassTolerance = 1e-12;

  DiscreteMeasure(PointCloud atoms, Vector weights);

  Index size() const { return atoms_.size(); }
  Index dim() const { return atoms_.dim(); }
  const PointCloud& atoms() const { return atoms_; }
  const Vector& weights() const { return weights_; }
  double weight(Index j) const { return weights_(j); }
  double min_weight() const { return weights_.minCoeff(); }

  /// Throws std::invalid_argument unless every weight is >= q_min > 0.
  void require_min_weight(double q_min) const;
  bool strictly_positive() const { return min_weight() > 0.0; }

  /// Sum_j w_j y_j.
  Point barycenter() const;

 private:
  PointCloud atoms_;
  Vector weights_;
};

/// Raised when a divergence needs absolute continuity that does not hold.
class DivergenceUndefined : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

PointCloud sample_uniform_box(double lo, double hi, Index n, Index d, RandomSource& rng);

/// Uniform weights 1/n; duplicates stay separate atoms.
DiscreteMeasure empirical(const PointCloud& points);

/// Merges atoms within Euclidean distance `tol` of an earlier representative.
/// The representative is the first occurrence and weights are summed. With
/// tol == 0 only exactly equal coordinates are merged.
DiscreteMeasure consolidate(const DiscreteMeasure& m, double tol);

/// Removes zero-weight atoms. `kept` receives the original indices.
DiscreteMeasure drop_zero_weights(const DiscreteMeasure& m, std::vector<Index>* kept = nullptr);

/// Weights of p and q on the union of their atoms, matched by exact
/// coordinate equality.
struct AlignedWeights {
  Vector p;
  Vector q;
};
AlignedWeights align(const DiscreteMeasure& p, const DiscreteMeasure& q);

/// sum_j (p_j - q_j)^2 / q_j.
double chi2(const DiscreteMeasure& p, const DiscreteMeasure& q);
/// sum_j p_j log(p_j / q_j).
double kl(const DiscreteMeasure& p, const DiscreteMeasure& q);
/// sum_j (sqrt(p_j) - sqrt(q_j))^2, in [0, 2].
double hellinger_sq(const DiscreteMeasure& p, const DiscreteMeasure& q);
/// (1/2) sum_j |p_j - q_j|.
double tv(const DiscreteMeasure& p, const DiscreteMeasure& q);

// Same divergences on already aligned weight vectors.
double chi2(const Vector& p, const Vector& q);
double kl(const Vector& p, const Vector& q);
double hellinger_sq(const Vector& p, const Vector& q);
double tv(const Vector& p, const Vector& q);

/// Variance of `values` under the weights of `m`.
double var_weighted(const Vector& values, const DiscreteMeasure& m);
double var_weighted(const Vector& values, const Vector& weights);
/// L-infinity variance ((max - min) / 2)^2.
double var_inf(const Vector& values);

}  // namespace entmap
