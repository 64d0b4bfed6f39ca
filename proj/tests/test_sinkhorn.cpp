#include <gtest/gtest.h>

#include <cmath>

#include "entmap/sinkhorn.hpp"
#include "entmap/testing/oracles.hpp"

namespace entmap {
namespace {

Matrix column(std::initializer_list<double> v) {
  Matrix m(static_cast<Index>(v.size()), 1);
  Index i = 0;
  for (double x : v) m(i++, 0) = x;
  return m;
}

DiscreteMeasure two_by_two_mu() {
  Vector w(2);
  w << 0.3, 0.7;
  return DiscreteMeasure(PointCloud(column({0.0, 1.0})), w);
}

DiscreteMeasure two_by_two_nu() {
  Vector w(2);
  w << 0.6, 0.4;
  return DiscreteMeasure(PointCloud(column({0.0, 1.0})), w);
}

DiscreteMeasure random_measure(Index n, Index d, RandomSource& rng) {
  Vector w(n);
  for (Index i = 0; i < n; ++i) w(i) = rng.uniform(0.1, 1.0);
  return DiscreteMeasure(sample_uniform_box(-1.0, 1.0, n, d, rng), w / w.sum());
}

SinkhornOptions with_eps(double eps, double tol = 1e-12) {
  SinkhornOptions o;
  o.epsilon = eps;
  o.tol = tol;
  return o;
}

TEST(Sinkhorn, SingleAtomPair) {
  Matrix a(1, 2);
  a << 0.0, 1.0;
  Matrix b(1, 2);
  b << 2.0, -1.0;
  const DiscreteMeasure mu(PointCloud(a), Vector::Ones(1));
  const DiscreteMeasure nu(PointCloud(b), Vector::Ones(1));
  const auto r = sinkhorn::solve(mu, nu, with_eps(0.3));
  EXPECT_TRUE(r.report.converged);
  EXPECT_NEAR(sinkhorn::plan_entry(r.potentials, mu, nu, 0, 0), 1.0, 1e-15);
  EXPECT_NEAR(r.report.entropic_cost, 0.5 * (a - b).squaredNorm(), 1e-14);
  EXPECT_NEAR(sinkhorn::entropic_cost(r.potentials, mu, nu), 4.0, 1e-14);
}

TEST(Sinkhorn, SymmetricTwoAtomHasEqualTargetPotentials) {
  const DiscreteMeasure m(PointCloud(column({-1.0, 1.0})), Vector::Constant(2, 0.5));
  for (double eps : {0.01, 0.3, 5.0}) {
    const auto r = sinkhorn::solve(m, m, with_eps(eps));
    EXPECT_NEAR(r.potentials.g(0), r.potentials.g(1), 1e-12);
    const auto inner = sinkhorn::to_inner_product_potentials(r.potentials, m, m);
    EXPECT_NEAR(inner.psi(0), inner.psi(1), 1e-12);
  }
}

TEST(Sinkhorn, MatchesPlainDomainOracleOnTwoByTwo) {
  const auto mu = two_by_two_mu();
  const auto nu = two_by_two_nu();
  const auto r = sinkhorn::solve(mu, nu, with_eps(0.5, 1e-14));
  const Matrix ours = sinkhorn::plan(r.potentials, mu, nu);
  const Matrix ref = testing::naive_sinkhorn_plan(mu, nu, 0.5, 1e-14);
  EXPECT_LE((ours - ref).cwiseAbs().maxCoeff(), 1e-10);
  EXPECT_LE((ours.rowwise().sum() - mu.weights()).cwiseAbs().maxCoeff(), 1e-8);
  EXPECT_LE((ours.colwise().sum().transpose() - nu.weights()).cwiseAbs().maxCoeff(), 1e-8);
}

TEST(Sinkhorn, LargeEpsilonApproachesIndependentCoupling) {
  const auto mu = two_by_two_mu();
  const auto nu = two_by_two_nu();
  const Matrix indep = mu.weights() * nu.weights().transpose();
  // The deviation from independence is first order in max(C) / eps.
  for (double eps : {1e4, 1e5, 1e6}) {
    const auto r = sinkhorn::solve(mu, nu, with_eps(eps, 1e-14));
    const Matrix p = sinkhorn::plan(r.potentials, mu, nu);
    EXPECT_LE((p - indep).cwiseAbs().maxCoeff(), 0.5 / eps) << "eps " << eps;
  }
  const auto r = sinkhorn::solve(mu, nu, with_eps(1e5, 1e-14));
  EXPECT_LE((sinkhorn::plan(r.potentials, mu, nu) - indep).cwiseAbs().maxCoeff(), 1e-6);
}

TEST(Sinkhorn, InnerProductConversion) {
  Matrix atoms(2, 2);
  atoms << 1.0, 0.0, 0.0, -1.0;
  const DiscreteMeasure m(PointCloud(atoms), Vector::Constant(2, 0.5));
  DualPotentials zero{Vector::Zero(2), Vector::Zero(2), 1.0};
  const auto inner = sinkhorn::to_inner_product_potentials(zero, m, m);
  EXPECT_EQ(inner.phi, Vector::Constant(2, 0.5));
  EXPECT_EQ(inner.psi, Vector::Constant(2, 0.5));
}

TEST(Sinkhorn, PlanFromEitherConventionAgrees) {
  RandomSource rng(2);
  const auto mu = random_measure(6, 2, rng);
  const auto nu = random_measure(4, 2, rng);
  const auto r = sinkhorn::solve(mu, nu, with_eps(0.2));
  const auto inner = sinkhorn::to_inner_product_potentials(r.potentials, mu, nu);
  for (Index i = 0; i < mu.size(); ++i) {
    for (Index j = 0; j < nu.size(); ++j) {
      const double a = sinkhorn::plan_entry(r.potentials, mu, nu, i, j);
      const double b = sinkhorn::plan_entry_inner(inner, 0.2, mu, nu, i, j);
      EXPECT_NEAR(a, b, 1e-15);
    }
  }
}

TEST(SinkhornProperty, MarginalFeasibility) {
  RandomSource rng(4);
  for (int k = 0; k < 30; ++k) {
    const auto mu = random_measure(3 + k % 5, 2, rng);
    const auto nu = random_measure(2 + k % 4, 2, rng);
    const double tol = 1e-9;
    const auto r = sinkhorn::solve(mu, nu, with_eps(rng.uniform(0.05, 1.0), tol));
    ASSERT_TRUE(r.report.converged);
    const Matrix p = sinkhorn::plan(r.potentials, mu, nu);
    EXPECT_LE((p.rowwise().sum() - mu.weights()).lpNorm<1>(), tol);
    EXPECT_LE((p.colwise().sum().transpose() - nu.weights()).lpNorm<1>(), tol);
    EXPECT_NEAR(nu.weights().dot(r.potentials.g), 0.0, 1e-12);
  }
}

TEST(SinkhornProperty, GaugeInvariance) {
  RandomSource rng(6);
  const auto mu = random_measure(5, 3, rng);
  const auto nu = random_measure(4, 3, rng);
  const auto r = sinkhorn::solve(mu, nu, with_eps(0.1));
  DualPotentials shifted = r.potentials;
  shifted.f.array() += 2.5;
  shifted.g.array() -= 2.5;
  for (Index i = 0; i < mu.size(); ++i) {
    for (Index j = 0; j < nu.size(); ++j) {
      EXPECT_NEAR(sinkhorn::plan_entry(shifted, mu, nu, i, j), sinkhorn::plan_entry(r.potentials, mu, nu, i, j),
                  1e-15);
    }
  }
}

TEST(SinkhornProperty, ResidualIsNonincreasing) {
  RandomSource rng(8);
  for (int k = 0; k < 10; ++k) {
    const auto mu = random_measure(20, 2, rng);
    const auto nu = random_measure(5, 2, rng);
    SinkhornOptions o = with_eps(0.02, 1e-12);
    o.record_trace = true;
    const auto r = sinkhorn::solve(mu, nu, o);
    ASSERT_GE(r.report.trace.size(), 2u);
    for (std::size_t t = 1; t < r.report.trace.size(); ++t) {
      ASSERT_LE(r.report.trace[t], r.report.trace[t - 1] * (1.0 + 1e-12) + 1e-16) << "iteration " << t;
    }
  }
}

TEST(SinkhornProperty, Deterministic) {
  RandomSource rng(10);
  const auto mu = random_measure(12, 2, rng);
  const auto nu = random_measure(7, 2, rng);
  const auto a = sinkhorn::solve(mu, nu, with_eps(0.1));
  const auto b = sinkhorn::solve(mu, nu, with_eps(0.1));
  EXPECT_EQ(a.potentials.f, b.potentials.f);
  EXPECT_EQ(a.potentials.g, b.potentials.g);
  EXPECT_EQ(a.report.iterations, b.report.iterations);
}

TEST(SinkhornProperty, EntropicCostSanityBand) {
  RandomSource rng(12);
  for (int k = 0; k < 50; ++k) {
    const Index n = 1 + static_cast<Index>(rng.uniform() * 5);
    const PointCloud x = sample_uniform_box(-1.0, 1.0, n, 2, rng);
    const PointCloud y = sample_uniform_box(-1.0, 1.0, n, 2, rng);
    const DiscreteMeasure mu = empirical(x);
    const DiscreteMeasure nu = empirical(y);
    const double eps = rng.uniform(0.01, 1.0);
    const auto r = sinkhorn::solve(mu, nu, with_eps(eps));
    const double exact = testing::brute_force_uniform_ot(x, y);
    EXPECT_GE(r.report.entropic_cost, exact - eps * std::log(static_cast<double>(n * n)) - 1e-9);
    // The independent coupling is feasible with zero entropy penalty.
    const Matrix c = half_sqdist_cost(x, y);
    EXPECT_LE(r.report.entropic_cost, c.mean() + 1e-9);
  }
}

TEST(Sinkhorn, NonConvergenceIsReported) {
  const auto mu = two_by_two_mu();
  const auto nu = two_by_two_nu();
  SinkhornOptions o = with_eps(0.05, 1e-14);
  o.max_iter = 1;
  const auto r = sinkhorn::solve(mu, nu, o);
  EXPECT_FALSE(r.report.converged);
  EXPECT_EQ(r.report.iterations, 1);
  EXPECT_GT(r.report.residual, 1e-14);
}

TEST(Sinkhorn, ZeroWeightAtomsGetFinitePotentialsAndEmptyPlanRows) {
  Vector wm(3);
  wm << 0.5, 0.0, 0.5;
  Vector wn(3);
  wn << 0.4, 0.6, 0.0;
  const DiscreteMeasure mu(PointCloud(column({0.0, 0.5, 1.0})), wm);
  const DiscreteMeasure nu(PointCloud(column({0.0, 1.0, 2.0})), wn);
  const auto r = sinkhorn::solve(mu, nu, with_eps(0.1));
  EXPECT_TRUE(r.potentials.f.allFinite());
  EXPECT_TRUE(r.potentials.g.allFinite());
  const Matrix p = sinkhorn::plan(r.potentials, mu, nu);
  EXPECT_EQ(p.row(1).sum(), 0.0);
  EXPECT_EQ(p.col(2).sum(), 0.0);
  EXPECT_NEAR(p.sum(), 1.0, 1e-9);
}

TEST(Sinkhorn, RejectsBadArguments) {
  const auto mu = two_by_two_mu();
  Matrix y2(1, 2);
  y2 << 0.0, 0.0;
  const DiscreteMeasure nu2(PointCloud(y2), Vector::Ones(1));
  EXPECT_THROW(sinkhorn::solve(mu, nu2, with_eps(0.1)), std::invalid_argument);
  EXPECT_THROW(sinkhorn::solve(mu, mu, with_eps(0.0)), std::invalid_argument);
  EXPECT_THROW(sinkhorn::solve(mu, mu, with_eps(0.1, -1.0)), std::invalid_argument);
}

TEST(Sinkhorn, SmallEpsilonStaysFinite) {
  RandomSource rng(14);
  const auto mu = empirical(sample_uniform_box(0.0, 1.0, 200, 2, rng));
  const auto nu = random_measure(5, 2, rng);
  const auto r = sinkhorn::solve(mu, nu, with_eps(1e-3, 1e-9));
  EXPECT_TRUE(r.report.converged);
  EXPECT_TRUE(r.potentials.f.allFinite());
  EXPECT_TRUE(r.potentials.g.allFinite());
}

}  // namespace
}  // namespace entmap
