#include "entmap/measures.hpp"

#include <cmath>
#include <cstring>
#include <string>
#include <unordered_map>

#include "entmap/numerics.hpp"

namespace entmap {

namespace {

void check_finite(const Matrix& points) {
  if (points.rows() < 1 || points.cols() < 1) {
    throw std::invalid_argument("point cloud needs n >= 1 and d >= 1");
  }
  if (!points.allFinite()) {
    throw std::invalid_argument("point cloud has non-finite coordinates");
  }
}

// Exact-coordinate hashing; -0.0 and +0.0 hash alike since they compare equal.
struct RowKey {
  const double* data;
  Index dim;
};

struct RowKeyHash {
  std::size_t operator()(const RowKey& k) const {
    std::uint64_t h = 0x84222325cbf29ce4ULL;
    for (Index c = 0; c < k.dim; ++c) {
      double v = k.data[c] == 0.0 ? 0.0 : k.data[c];
      std::uint64_t bits;
      std::memcpy(&bits, &v, sizeof bits);
      h = splitmix64(h ^ bits);
    }
    return static_cast<std::size_t>(h);
  }
};

struct RowKeyEq {
  bool operator()(const RowKey& a, const RowKey& b) const {
    for (Index c = 0; c < a.dim; ++c) {
      if (a.data[c] != b.data[c]) return false;
    }
    return true;
  }
};

using RowIndex = std::unordered_map<RowKey, Index, RowKeyHash, RowKeyEq>;

}  // namespace

PointCloud::PointCloud(Matrix points) : points_(std::move(points)) { check_finite(points_); }

PointCloud::PointCloud(Matrix points, double radius) : points_(std::move(points)), radius_(radius) {
  check_finite(points_);
  if (!(radius > 0.0)) {
    throw std::invalid_argument("declared radius must be positive");
  }
  if (max_norm() > radius) {
    throw std::invalid_argument("point outside declared ball of radius " + std::to_string(radius));
  }
}

double PointCloud::max_norm() const { return points_.rowwise().norm().maxCoeff(); }

DiscreteMeasure::DiscreteMeasure(PointCloud atoms, Vector weights)
    : atoms_(std::move(atoms)), weights_(std::move(weights)) {
  if (weights_.size() != atoms_.size()) {
    throw std::invalid_argument("weight count does not match atom count");
  }
  if (!weights_.allFinite() || weights_.minCoeff() < 0.0) {
    throw std::invalid_argument("weights must be finite and nonnegative");
  }
  CompensatedSum total;
  for (double w : weights_) total += w;
  if (std::abs(total.value() - 1.0) > kMassTolerance) {
    throw std::invalid_argument("weights sum to " + std::to_string(total.value()) + ", expected 1");
  }
}

void DiscreteMeasure::require_min_weight(double q_min) const {
  if (!(q_min > 0.0)) {
    throw std::invalid_argument("q_min must be positive");
  }
  if (min_weight() < q_min) {
    throw std::invalid_argument("measure has a weight below q_min");
  }
}

Point DiscreteMeasure::barycenter() const {
  Point b = Point::Zero(dim());
  for (Index c = 0; c < dim(); ++c) {
    CompensatedSum s;
    for (Index j = 0; j < size(); ++j) s += weights_(j) * atoms_.points()(j, c);
    b(c) = s.value();
  }
  return b;
}

PointCloud sample_uniform_box(double lo, double hi, Index n, Index d, RandomSource& rng) {
  if (!(lo < hi) || !std::isfinite(lo) || !std::isfinite(hi)) {
    throw std::invalid_argument("sample_uniform_box needs finite lo < hi");
  }
  if (n < 1 || d < 1) {
    throw std::invalid_argument("sample_uniform_box needs n >= 1 and d >= 1");
  }
  Matrix pts(n, d);
  for (Index i = 0; i < n; ++i) {
    for (Index c = 0; c < d; ++c) pts(i, c) = rng.uniform(lo, hi);
  }
  return PointCloud(std::move(pts));
}

DiscreteMeasure empirical(const PointCloud& points) {
  return DiscreteMeasure(points, Vector::Constant(points.size(), 1.0 / static_cast<double>(points.size())));
}

DiscreteMeasure consolidate(const DiscreteMeasure& m, double tol) {
  if (!(tol >= 0.0)) {
    throw std::invalid_argument("consolidate tolerance must be >= 0");
  }
  const Matrix& pts = m.atoms().points();
  const Index d = m.dim();
  std::vector<Index> reps;
  std::vector<double> mass;

  if (tol == 0.0) {
    RowIndex index;
    for (Index i = 0; i < m.size(); ++i) {
      auto [it, inserted] = index.try_emplace(RowKey{pts.row(i).data(), d}, static_cast<Index>(reps.size()));
      if (inserted) {
        reps.push_back(i);
        mass.push_back(m.weight(i));
      } else {
        mass[it->second] += m.weight(i);
      }
    }
  } else {
    const double tol2 = tol * tol;
    for (Index i = 0; i < m.size(); ++i) {
      bool merged = false;
      for (std::size_t r = 0; r < reps.size(); ++r) {
        if ((pts.row(i) - pts.row(reps[r])).squaredNorm() <= tol2) {
          mass[r] += m.weight(i);
          merged = true;
          break;
        }
      }
      if (!merged) {
        reps.push_back(i);
        mass.push_back(m.weight(i));
      }
    }
  }

  Matrix out(static_cast<Index>(reps.size()), d);
  Vector w(static_cast<Index>(reps.size()));
  for (std::size_t r = 0; r < reps.size(); ++r) {
    out.row(static_cast<Index>(r)) = pts.row(reps[r]);
    w(static_cast<Index>(r)) = mass[r];
  }
  return DiscreteMeasure(PointCloud(std::move(out)), std::move(w));
}

DiscreteMeasure drop_zero_weights(const DiscreteMeasure& m, std::vector<Index>* kept) {
  std::vector<Index> idx;
  for (Index j = 0; j < m.size(); ++j) {
    if (m.weight(j) > 0.0) idx.push_back(j);
  }
  if (idx.empty()) {
    throw std::invalid_argument("measure has no positive-weight atom");
  }
  Matrix pts(static_cast<Index>(idx.size()), m.dim());
  Vector w(static_cast<Index>(idx.size()));
  for (std::size_t r = 0; r < idx.size(); ++r) {
    pts.row(static_cast<Index>(r)) = m.atoms().point(idx[r]);
    w(static_cast<Index>(r)) = m.weight(idx[r]);
  }
  if (kept) *kept = idx;
  return DiscreteMeasure(PointCloud(std::move(pts)), std::move(w));
}

AlignedWeights align(const DiscreteMeasure& p, const DiscreteMeasure& q) {
  if (p.dim() != q.dim()) {
    throw std::invalid_argument("cannot align measures of different dimension");
  }
  const Index d = p.dim();
  RowIndex index;
  std::vector<double> wp;
  std::vector<double> wq;
  auto add = [&](const DiscreteMeasure& m, std::vector<double>& mine) {
    for (Index i = 0; i < m.size(); ++i) {
      auto [it, inserted] = index.try_emplace(RowKey{m.atoms().points().row(i).data(), d},
                                              static_cast<Index>(wp.size()));
      if (inserted) {
        wp.push_back(0.0);
        wq.push_back(0.0);
      }
      mine[static_cast<std::size_t>(it->second)] += m.weight(i);
    }
  };
  add(p, wp);
  add(q, wq);
  return {Eigen::Map<Vector>(wp.data(), static_cast<Index>(wp.size())),
          Eigen::Map<Vector>(wq.data(), static_cast<Index>(wq.size()))};
}

double chi2(const Vector& p, const Vector& q) {
  CompensatedSum s;
  for (Index j = 0; j < p.size(); ++j) {
    if (q(j) == 0.0) {
      if (p(j) > 0.0) throw DivergenceUndefined("chi2: p has mass where q has none");
      continue;
    }
    const double diff = p(j) - q(j);
    s += diff * diff / q(j);
  }
  return std::max(0.0, s.value());
}

double kl(const Vector& p, const Vector& q) {
  CompensatedSum s;
  for (Index j = 0; j < p.size(); ++j) {
    if (p(j) == 0.0) continue;
    if (q(j) == 0.0) throw DivergenceUndefined("kl: p has mass where q has none");
    s += p(j) * std::log(p(j) / q(j));
  }
  return std::max(0.0, s.value());
}

double hellinger_sq(const Vector& p, const Vector& q) {
  CompensatedSum s;
  for (Index j = 0; j < p.size(); ++j) {
    const double diff = std::sqrt(p(j)) - std::sqrt(q(j));
    s += diff * diff;
  }
  return s.value();
}

double tv(const Vector& p, const Vector& q) {
  CompensatedSum s;
  for (Index j = 0; j < p.size(); ++j) s += std::abs(p(j) - q(j));
  return 0.5 * s.value();
}

double chi2(const DiscreteMeasure& p, const DiscreteMeasure& q) {
  auto a = align(p, q);
  return chi2(a.p, a.q);
}
double kl(const DiscreteMeasure& p, const DiscreteMeasure& q) {
  auto a = align(p, q);
  return kl(a.p, a.q);
}
double hellinger_sq(const DiscreteMeasure& p, const DiscreteMeasure& q) {
  auto a = align(p, q);
  return hellinger_sq(a.p, a.q);
}
double tv(const DiscreteMeasure& p, const DiscreteMeasure& q) {
  auto a = align(p, q);
  return tv(a.p, a.q);
}

double var_weighted(const Vector& values, const Vector& weights) {
  if (values.size() != weights.size()) {
    throw std::invalid_argument("var_weighted: length mismatch");
  }
  CompensatedSum mean;
  for (Index j = 0; j < values.size(); ++j) mean += weights(j) * values(j);
  const double m = mean.value();
  CompensatedSum s;
  for (Index j = 0; j < values.size(); ++j) {
    const double c = values(j) - m;
    s += weights(j) * c * c;
  }
  return s.value();
}

double var_weighted(const Vector& values, const DiscreteMeasure& m) { return var_weighted(values, m.weights()); }

double var_inf(const Vector& values) {
  if (values.size() == 0) return 0.0;
  const double half = 0.5 * (values.maxCoeff() - values.minCoeff());
  return half * half;
}

}  // namespace entmap
