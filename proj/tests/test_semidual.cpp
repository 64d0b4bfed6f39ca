#include <gtest/gtest.h>

#include <cmath>

#include "entmap/semidual.hpp"
#include "entmap/testing/oracles.hpp"

namespace entmap {
namespace {

PointCloud two_atoms() {
  Matrix y(2, 1);
  y << -1.0, 1.0;
  return PointCloud(y);
}

SemiDualProblem random_problem(RandomSource& rng, Index n = 40, Index J = 4, Index d = 1) {
  Vector nu(J);
  for (Index j = 0; j < J; ++j) nu(j) = rng.uniform(0.2, 1.0);
  nu /= nu.sum();
  return SemiDualProblem(empirical(sample_uniform_box(-1.0, 1.0, n, d, rng)), sample_uniform_box(-1.0, 1.0, J, d, rng),
                         nu, rng.uniform(0.1, 1.0));
}

Vector random_vector(Index n, RandomSource& rng, double scale = 0.5) {
  Vector v(n);
  for (Index i = 0; i < n; ++i) v(i) = rng.uniform(-scale, scale);
  return v;
}

TEST(MidpointGrid, WeightsAndNodes) {
  const DiscreteMeasure g = midpoint_grid_1d(-1.0, 1.0, 4);
  ASSERT_EQ(g.size(), 4);
  EXPECT_DOUBLE_EQ(g.atoms().points()(0, 0), -0.75);
  EXPECT_DOUBLE_EQ(g.atoms().points()(3, 0), 0.75);
  EXPECT_NEAR(g.weights().sum(), 1.0, 1e-15);
  const DiscreteMeasure g2 = midpoint_grid_2d(0.0, 1.0, 8);
  EXPECT_EQ(g2.size(), 64);
  EXPECT_EQ(g2.dim(), 2);
}

TEST(PhiTransform, SingleAtomIsAffine) {
  Matrix y(1, 2);
  y << 0.3, -0.4;
  const Point x{{1.5, 2.0}};
  const PotentialVector psi{Vector::Constant(1, 0.7), true};
  EXPECT_NEAR(semidual::phi_transform(psi, PointCloud(y), x, 0.2), 0.45 - 0.8 - 0.7, 1e-15);
}

TEST(PhiTransform, SmallEpsilonApproachesMax) {
  RandomSource rng(1);
  const PointCloud y = sample_uniform_box(-1.0, 1.0, 5, 2, rng);
  const PotentialVector zero{Vector::Zero(5), true};
  for (int k = 0; k < 20; ++k) {
    const Point x = sample_uniform_box(-1.0, 1.0, 1, 2, rng).point(0);
    const double max_ip = (y.points() * x.transpose()).maxCoeff();
    EXPECT_NEAR(semidual::phi_transform(zero, y, x, 1e-6), max_ip, 1e-5);
  }
}

TEST(PhiTransform, ShiftIdentity) {
  RandomSource rng(2);
  const PointCloud y = sample_uniform_box(-1.0, 1.0, 4, 3, rng);
  const PotentialVector psi{random_vector(4, rng), true};
  PotentialVector moved = psi;
  moved.values.array() += 3.7;
  const Point x{{0.1, -0.2, 0.3}};
  EXPECT_NEAR(semidual::phi_transform(moved, y, x, 0.3), semidual::phi_transform(psi, y, x, 0.3) - 3.7, 1e-12);
}

TEST(PhiTransform, RequiresShiftedPotential) {
  const PotentialVector raw{Vector::Zero(2), false};
  EXPECT_THROW(semidual::phi_transform(raw, two_atoms(), Point::Zero(1), 0.1), std::invalid_argument);
  EXPECT_THROW(semidual::conditional_weights(raw, two_atoms(), Point::Zero(1), 0.1), std::invalid_argument);
}

TEST(ConditionalWeights, TwoAtomValues) {
  const PotentialVector eq{Vector::Zero(2), true};
  const Vector at0 = semidual::conditional_weights(eq, two_atoms(), Point::Zero(1), 0.1);
  EXPECT_DOUBLE_EQ(at0(0), 0.5);
  EXPECT_DOUBLE_EQ(at0(1), 0.5);
  const Vector w = semidual::conditional_weights(eq, two_atoms(), Point::Constant(1, 0.3), 0.1);
  const double logistic = 1.0 / (1.0 + std::exp(-2.0 * 0.3 / 0.1));
  EXPECT_NEAR(w(1), logistic, 1e-15);
  PotentialVector moved = eq;
  moved.values.array() += 12.0;
  const Vector w2 = semidual::conditional_weights(moved, two_atoms(), Point::Constant(1, 0.3), 0.1);
  EXPECT_NEAR((w2 - w).cwiseAbs().maxCoeff(), 0.0, 1e-15);
}

TEST(ShiftConversions, RoundTrip) {
  Vector nu(3);
  nu << 0.2, 0.3, 0.5;
  Vector psi(3);
  psi << 0.1, -0.4, 2.0;
  const PotentialVector s = semidual::shift(psi, nu, 0.25);
  EXPECT_TRUE(s.shifted);
  EXPECT_NEAR((semidual::unshift(s, nu, 0.25) - psi).cwiseAbs().maxCoeff(), 0.0, 1e-15);
}

TEST(SemiDualValue, ShiftInvarianceAndSingleAtomDegeneracy) {
  RandomSource rng(3);
  const SemiDualProblem prob = random_problem(rng);
  const PotentialVector psi{random_vector(4, rng), true};
  PotentialVector moved = psi;
  moved.values.array() += 1.9;
  EXPECT_NEAR(semidual::semidual_value(prob, moved), semidual::semidual_value(prob, psi), 1e-12);

  const DiscreteMeasure src = empirical(sample_uniform_box(-1.0, 1.0, 30, 2, rng));
  Matrix y(1, 2);
  y << 0.5, -0.25;
  const SemiDualProblem one(src, PointCloud(y), Vector::Ones(1), 0.3);
  const double mean_ip = (src.atoms().points() * y.transpose()).mean();
  for (double v : {-2.0, 0.0, 5.0}) {
    EXPECT_NEAR(semidual::semidual_value(one, {Vector::Constant(1, v), true}), mean_ip, 1e-12);
  }
}

TEST(SemiDualGradient, SumsToZero) {
  RandomSource rng(4);
  for (int k = 0; k < 20; ++k) {
    const SemiDualProblem prob = random_problem(rng);
    const Vector g = semidual::semidual_gradient(prob, {random_vector(4, rng, 2.0), true});
    EXPECT_NEAR(g.sum(), 0.0, 1e-12);
  }
}

TEST(SemiDualGradient, MatchesCentralDifferences) {
  RandomSource rng(5);
  for (int k = 0; k < 20; ++k) {
    const SemiDualProblem prob = random_problem(rng, 30, 3);
    const Vector psi = random_vector(3, rng);
    const Vector g = semidual::semidual_gradient(prob, {psi, true});
    const Vector fd = testing::central_difference_gradient(
        [&](const Vector& p) { return semidual::semidual_value(prob, {p, true}); }, psi, 1e-5);
    EXPECT_LE((g - fd).lpNorm<Eigen::Infinity>(), 1e-6 * std::max(g.lpNorm<Eigen::Infinity>(), 1e-3));
  }
}

TEST(SemiDualProperty, ConvexAlongRandomSegments) {
  RandomSource rng(6);
  for (int k = 0; k < 20; ++k) {
    const SemiDualProblem prob = random_problem(rng);
    const Vector psi = random_vector(4, rng);
    const Vector dir = random_vector(4, rng, 1.0);
    const double h = 0.05;
    for (int t = -10; t <= 10; ++t) {
      auto f = [&](double s) { return semidual::semidual_value(prob, {Vector(psi + s * dir), true}); };
      const double s = t * h;
      EXPECT_GE(f(s + h) - 2.0 * f(s) + f(s - h), -1e-10);
    }
  }
}

TEST(SolvePopulation, OptimalityAndMarginals) {
  RandomSource rng(7);
  for (int k = 0; k < 10; ++k) {
    const SemiDualProblem prob = random_problem(rng, 60, 4, 2);
    semidual::SolveStats stats;
    const PotentialVector psi = semidual::solve_population(prob, 1e-10, 10000, &stats);
    EXPECT_LE(stats.gradient_norm, 1e-10);
    EXPECT_LE(semidual::semidual_gradient(prob, psi).lpNorm<Eigen::Infinity>(), 1e-8);
    EXPECT_NEAR(prob.target_weights().dot(psi.values), 0.0, 1e-12);
    // Pushing the conditional weights through the source reproduces nu.
    const Vector push = semidual::pushforward_weights(prob, psi);
    EXPECT_LE((push - prob.target_weights()).lpNorm<Eigen::Infinity>(), 1e-7);
    const double best = semidual::semidual_value(prob, psi);
    for (int t = 0; t < 100; ++t) {
      const Vector delta = random_vector(4, rng, 0.05);
      EXPECT_LE(best, semidual::semidual_value(prob, {Vector(psi.values + delta), true}) + 1e-14);
    }
  }
}

TEST(SolvePopulation, DesintegrationOnQuadrature) {
  Matrix y(3, 1);
  y << -0.8, 0.1, 0.9;
  Vector nu(3);
  nu << 0.2, 0.5, 0.3;
  const SemiDualProblem prob(midpoint_grid_1d(-1.0, 1.0, 4096), PointCloud(y), nu, 0.05);
  const PotentialVector psi = semidual::solve_population(prob, 1e-10);
  const DiscreteMeasure& grid = prob.source();
  Vector push = Vector::Zero(3);
  for (Index k = 0; k < grid.size(); ++k) {
    push += grid.weight(k) * semidual::conditional_weights(psi, prob.targets(), grid.atoms().point(k), 0.05);
  }
  EXPECT_LE((push - nu).lpNorm<Eigen::Infinity>(), 1e-7);
}

TEST(SolvePopulation, TwoAtomSymmetry) {
  for (double eps : {0.02, 0.3, 2.0}) {
    const SemiDualProblem prob(midpoint_grid_1d(-1.0, 1.0, 4096), two_atoms(), Vector::Constant(2, 0.5), eps);
    const PotentialVector psi = semidual::solve_population(prob);
    EXPECT_NEAR(psi.values(0), psi.values(1), 1e-12);
  }
}

TEST(SolvePopulation, AgreesWithSinkhornOnEmpiricalSource) {
  RandomSource rng(8);
  const DiscreteMeasure src = empirical(sample_uniform_box(-1.0, 1.0, 50, 2, rng));
  Vector w(3);
  w << 0.2, 0.5, 0.3;
  const DiscreteMeasure target(sample_uniform_box(-1.0, 1.0, 3, 2, rng), w);
  const SemiDualProblem prob(src, target.atoms(), w, 0.1);
  const PotentialVector semi = semidual::solve_population(prob, 1e-11);
  SinkhornOptions o;
  o.epsilon = 0.1;
  o.tol = 1e-12;
  PotentialVector sk = semidual::from_sinkhorn(sinkhorn::solve(src, target, o).potentials, target);
  sk.values.array() -= w.dot(sk.values);
  EXPECT_LE((semi.values - sk.values).lpNorm<Eigen::Infinity>(), 1e-6);
}

TEST(SolvePopulation, ReportsNonConvergence) {
  RandomSource rng(9);
  const SemiDualProblem prob = random_problem(rng);
  EXPECT_THROW(semidual::solve_population(prob, 1e-12, 1), SemiDualNotConverged);
}

TEST(SemiDualProblem, ValidatesInputs) {
  const DiscreteMeasure src = midpoint_grid_1d(-1.0, 1.0, 8);
  EXPECT_THROW(SemiDualProblem(src, two_atoms(), Vector::Constant(2, 0.5), 0.0), std::invalid_argument);
  EXPECT_THROW(SemiDualProblem(src, two_atoms(), Vector::Constant(2, 0.4), 0.1), std::invalid_argument);
  EXPECT_THROW(SemiDualProblem(src, two_atoms(), Vector::Constant(3, 1.0 / 3), 0.1), std::invalid_argument);
  Vector zero(2);
  zero << 1.0, 0.0;
  EXPECT_THROW(SemiDualProblem(src, two_atoms(), zero, 0.1), std::invalid_argument);
  EXPECT_THROW(SemiDualProblem(src, PointCloud(Matrix::Zero(2, 2)), Vector::Constant(2, 0.5), 0.1),
               std::invalid_argument);
}

}  // namespace
}  // namespace entmap
