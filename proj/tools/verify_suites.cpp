#include "verify_suites.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <map>
#include <ostream>
#include <sstream>
#include <stdexcept>

#include "entmap/assignment.hpp"
#include "entmap/experiments.hpp"
#include "entmap/maps.hpp"
#include "entmap/measure_io.hpp"
#include "entmap/semidual.hpp"
#include "entmap/sinkhorn.hpp"
#include "entmap/testing/oracles.hpp"

namespace entmap::verify {

namespace {

std::string fmt(double v) { return format_double(v); }

DiscreteMeasure random_measure(Index n, Index d, double radius, RandomSource& rng) {
  Matrix pts(n, d);
  for (Index i = 0; i < n; ++i) {
    for (Index c = 0; c < d; ++c) pts(i, c) = rng.uniform(-1.0, 1.0);
    const double norm = pts.row(i).norm();
    if (norm > radius) pts.row(i) *= radius / norm;
  }
  Vector w(n);
  for (Index i = 0; i < n; ++i) w(i) = rng.uniform(0.1, 1.0);
  w /= w.sum();
  return DiscreteMeasure(PointCloud(std::move(pts)), std::move(w));
}

DiscreteMeasure reweight(const DiscreteMeasure& m, RandomSource& rng) {
  Vector w(m.size());
  for (Index i = 0; i < m.size(); ++i) w(i) = rng.uniform(0.1, 1.0);
  w /= w.sum();
  return DiscreteMeasure(m.atoms(), std::move(w));
}

// E[chi2(Q_n, Q)] = (J - 1) / n by Monte Carlo.
std::vector<CheckResult> suite_chi2(const VerifyOptions& opt) {
  std::vector<CheckResult> out;
  constexpr int kReplicates = 10000;
  const std::vector<std::pair<Index, Index>> cases{{2, 50}, {5, 200}, {10, 1000}};
  RandomSource base(opt.seed, 1);
  for (const auto& [J, n] : cases) {
    RandomSource rng = base.split(static_cast<std::uint64_t>(J * 100000 + n));
    Matrix atoms(J, 1);
    for (Index j = 0; j < J; ++j) atoms(j, 0) = static_cast<double>(j);
    const DiscreteMeasure q(PointCloud(atoms), Vector::Constant(J, 1.0 / static_cast<double>(J)));
    double sum = 0.0;
    double sum_sq = 0.0;
    Matrix sample(n, 1);
    for (int rep = 0; rep < kReplicates; ++rep) {
      for (Index i = 0; i < n; ++i) {
        const auto j = static_cast<Index>(rng.uniform() * static_cast<double>(J));
        sample(i, 0) = static_cast<double>(std::min(j, J - 1));
      }
      const double v = chi2(consolidate(empirical(PointCloud(sample)), 0.0), q);
      sum += v;
      sum_sq += v * v;
    }
    const double mean = sum / kReplicates;
    const double sd = std::sqrt(std::max(0.0, (sum_sq - kReplicates * mean * mean) / (kReplicates - 1)));
    const double se = sd / std::sqrt(static_cast<double>(kReplicates));
    const double expected = static_cast<double>(J - 1) / static_cast<double>(n);
    const bool ok = std::abs(mean - expected) <= 3.0 * se * opt.tolerance_scale;
    out.push_back({"chi2", "J=" + std::to_string(J) + ",n=" + std::to_string(n), ok,
                   "mean " + fmt(mean) + " expected " + fmt(expected) + " se " + fmt(se)});
  }
  return out;
}

// eps/(8R^2) |T - T'|^2_{L2(mu)} <= int (phi' - phi) dmu + int (psi' - psi) dnu + eps KL(nu || nu').
std::vector<CheckResult> suite_stability(const VerifyOptions& opt) {
  std::vector<CheckResult> out;
  RandomSource rng(opt.seed, 2);
  constexpr int kPerEps = 20;
  const double slack = 1e-8 * opt.tolerance_scale;
  for (double eps : {0.05, 0.2, 1.0}) {
    int failures = 0;
    double worst_margin = std::numeric_limits<double>::infinity();
    for (int k = 0; k < kPerEps; ++k) {
      const Index n = 3 + static_cast<Index>(rng.uniform() * 6);
      const Index m = 2 + static_cast<Index>(rng.uniform() * 5);
      const DiscreteMeasure mu = random_measure(n, 2, 1.0, rng);
      const DiscreteMeasure nu = random_measure(m, 2, 1.0, rng);
      const DiscreteMeasure mu2 = reweight(mu, rng);
      const DiscreteMeasure nu2 = reweight(nu, rng);
      SinkhornOptions so;
      so.epsilon = eps;
      so.tol = 1e-13;
      so.max_iter = 1000000;
      const auto a = sinkhorn::solve(mu, nu, so);
      const auto b = sinkhorn::solve(mu2, nu2, so);
      const auto pa = sinkhorn::to_inner_product_potentials(a.potentials, mu, nu);
      const auto pb = sinkhorn::to_inner_product_potentials(b.potentials, mu2, nu2);
      const Matrix plan_a = sinkhorn::plan(a.potentials, mu, nu);
      const Matrix plan_b = sinkhorn::plan(b.potentials, mu2, nu2);
      const double R = std::max(mu.atoms().max_norm(), nu.atoms().max_norm());
      double lhs = 0.0;
      for (Index i = 0; i < n; ++i) {
        const Point ta = (plan_a.row(i) / plan_a.row(i).sum()) * nu.atoms().points();
        const Point tb = (plan_b.row(i) / plan_b.row(i).sum()) * nu.atoms().points();
        lhs += mu.weight(i) * (ta - tb).squaredNorm();
      }
      lhs *= eps / (8.0 * R * R);
      const double rhs = mu.weights().dot(pb.phi - pa.phi) + nu.weights().dot(pb.psi - pa.psi) +
                         eps * kl(nu.weights(), nu2.weights());
      const double margin = rhs + slack - lhs;
      worst_margin = std::min(worst_margin, margin);
      if (!(a.report.converged && b.report.converged) || margin < 0.0) ++failures;
    }
    out.push_back({"stability", "eps=" + fmt(eps), failures == 0,
                   std::to_string(kPerEps) + " instances, worst margin " + fmt(worst_margin)});
  }
  return out;
}

std::vector<CheckResult> suite_gradient(const VerifyOptions& opt) {
  RandomSource rng(opt.seed, 3);
  double worst = 0.0;
  constexpr int kInstances = 20;
  for (int k = 0; k < kInstances; ++k) {
    const DiscreteMeasure src = empirical(sample_uniform_box(-1.0, 1.0, 30, 1, rng));
    const Index J = 3;
    Vector nu(J);
    for (Index j = 0; j < J; ++j) nu(j) = rng.uniform(0.2, 1.0);
    nu /= nu.sum();
    const double eps = rng.uniform(0.1, 1.0);
    const SemiDualProblem prob(src, sample_uniform_box(-1.0, 1.0, J, 1, rng), nu, eps);
    Vector psi(J);
    for (Index j = 0; j < J; ++j) psi(j) = rng.uniform(-0.5, 0.5);
    const Vector g = semidual::semidual_gradient(prob, {psi, true});
    const Vector fd = testing::central_difference_gradient(
        [&](const Vector& p) { return semidual::semidual_value(prob, {p, true}); }, psi, 1e-5);
    worst = std::max(worst, (g - fd).lpNorm<Eigen::Infinity>() / std::max(g.lpNorm<Eigen::Infinity>(), 1e-3));
  }
  return {{"gradient", "central-differences", worst <= 1e-6 * opt.tolerance_scale,
           std::to_string(kInstances) + " instances, worst relative error " + fmt(worst)}};
}

struct TwoAtomFit {
  EntropicMapModel model;
};

EntropicMapModel two_atom_population_model(double eps, Index nodes) {
  Matrix y(2, 1);
  y << -1.0, 1.0;
  const Vector nu = Vector::Constant(2, 0.5);
  const SemiDualProblem prob(midpoint_grid_1d(-1.0, 1.0, nodes), PointCloud(y), nu, eps);
  const PotentialVector psi = semidual::solve_population(prob, 1e-10);
  return EntropicMapModel(PointCloud(y), nu, semidual::unshift(psi, nu, eps), eps);
}

std::vector<CheckResult> suite_tanh(const VerifyOptions& opt) {
  std::vector<CheckResult> out;
  for (double eps : {0.5, 0.1, 0.05}) {
    const EntropicMapModel model = two_atom_population_model(eps, 4096);
    double worst_softmax = 0.0;
    double worst_tanh = 0.0;
    double worst_odd = 0.0;
    bool monotone = true;
    double prev = -std::numeric_limits<double>::infinity();
    for (int k = 0; k < 100; ++k) {
      const double x = -1.0 + 2.0 * (k + 0.5) / 100.0;
      const double t = entropic_eval(model, Point::Constant(1, x))(0);
      const double t_neg = entropic_eval(model, Point::Constant(1, -x))(0);
      worst_softmax = std::max(worst_softmax, std::abs(t - testing::two_atom_softmax_map(x, eps)));
      worst_tanh = std::max(worst_tanh, std::abs(t - std::tanh(testing::kTwoAtomKappa * x / eps)));
      worst_odd = std::max(worst_odd, std::abs(t + t_neg));
      if (t < prev) monotone = false;
      prev = t;
    }
    const double tol = 1e-12 * opt.tolerance_scale;
    out.push_back({"tanh", "eps=" + fmt(eps),
                   worst_softmax <= tol && worst_tanh <= tol && worst_odd <= tol && monotone,
                   "softmax err " + fmt(worst_softmax) + ", tanh err " + fmt(worst_tanh) + ", odd err " +
                       fmt(worst_odd) + (monotone ? ", monotone" : ", NOT monotone")});
  }
  return out;
}

std::vector<CheckResult> suite_approx_law(const VerifyOptions& opt) {
  const double expected = testing::two_atom_approximation_constant(0.5, testing::kTwoAtomKappa);
  constexpr Index kNodes = 1 << 17;
  std::ostringstream detail;
  double rel_at_smallest = 0.0;
  for (double eps : {1e-1, 1e-2, 1e-3}) {
    const EntropicMapModel model = two_atom_population_model(eps, kNodes);
    const DiscreteMeasure grid = midpoint_grid_1d(-1.0, 1.0, kNodes);
    const Matrix t = entropic_eval_batch(model, grid.atoms().points());
    double sum = 0.0;
    for (Index k = 0; k < kNodes; ++k) {
      const double x = grid.atoms().points()(k, 0);
      const double err = t(k, 0) - (x > 0.0 ? 1.0 : -1.0);
      sum += grid.weight(k) * err * err;
    }
    const double ratio = sum / eps;
    rel_at_smallest = std::abs(ratio - expected) / expected;
    detail << "eps=" << fmt(eps) << " ratio=" << fmt(ratio) << "; ";
  }
  detail << "expected " << fmt(expected);
  return {{"approx-law", "two-atom", rel_at_smallest <= 0.03 * opt.tolerance_scale, detail.str()}};
}

std::vector<CheckResult> suite_sinkhorn_oracle(const VerifyOptions& opt) {
  Matrix pts(2, 1);
  pts << 0.0, 1.0;
  Vector wm(2);
  wm << 0.3, 0.7;
  Vector wn(2);
  wn << 0.6, 0.4;
  const DiscreteMeasure mu(PointCloud(pts), wm);
  const DiscreteMeasure nu(PointCloud(pts), wn);
  SinkhornOptions so;
  so.epsilon = 0.5;
  so.tol = 1e-14;
  const auto result = sinkhorn::solve(mu, nu, so);
  const Matrix ours = sinkhorn::plan(result.potentials, mu, nu);
  const Matrix ref = testing::naive_sinkhorn_plan(mu, nu, 0.5, 1e-14);
  const double err = (ours - ref).cwiseAbs().maxCoeff();
  return {{"sinkhorn-oracle", "2x2", result.report.converged && err <= 1e-10 * opt.tolerance_scale,
           "max entry error " + fmt(err)}};
}

std::vector<CheckResult> suite_assignment(const VerifyOptions& opt) {
  RandomSource rng(opt.seed, 4);
  int mismatches = 0;
  double worst = 0.0;
  constexpr int kInstances = 100;
  for (int k = 0; k < kInstances; ++k) {
    const Index n = 1 + static_cast<Index>(rng.uniform() * 8);
    const Index d = 1 + static_cast<Index>(rng.uniform() * 3);
    const PointCloud x = sample_uniform_box(0.0, 1.0, n, d, rng);
    const PointCloud y = sample_uniform_box(0.0, 1.0, n, d, rng);
    const auto plan = solve_assignment(x, y);
    const auto ref = testing::brute_force_assignment(half_sqdist_cost(x, y));
    const double gap = std::abs(plan.objective - ref.objective);
    worst = std::max(worst, gap);
    if (gap > 1e-9 * opt.tolerance_scale || !is_permutation(plan.permutation)) ++mismatches;
  }
  return {{"assignment", "exhaustive-n<=8", mismatches == 0,
           std::to_string(kInstances) + " instances, worst objective gap " + fmt(worst)}};
}

std::vector<CheckResult> suite_cross_solver(const VerifyOptions& opt) {
  RandomSource rng(opt.seed, 5);
  std::vector<CheckResult> out;
  for (Index d : {1, 2}) {
    const DiscreteMeasure src = empirical(sample_uniform_box(-1.0, 1.0, 50, d, rng));
    const Index J = 3;
    Vector w(J);
    for (Index j = 0; j < J; ++j) w(j) = rng.uniform(0.2, 1.0);
    w /= w.sum();
    const DiscreteMeasure target(sample_uniform_box(-1.0, 1.0, J, d, rng), w);
    const double eps = 0.2;
    const SemiDualProblem prob(src, target.atoms(), w, eps);
    const PotentialVector semi = semidual::solve_population(prob, 1e-11);
    SinkhornOptions so;
    so.epsilon = eps;
    so.tol = 1e-12;
    const auto sk = sinkhorn::solve(src, target, so);
    PotentialVector from_sk = semidual::from_sinkhorn(sk.potentials, target);
    from_sk.values.array() -= w.dot(from_sk.values);
    const double err = (semi.values - from_sk.values).lpNorm<Eigen::Infinity>();
    out.push_back({"cross-solver", "d=" + std::to_string(d), err <= 1e-6 * opt.tolerance_scale,
                   "max potential gap " + fmt(err)});
  }
  return out;
}

std::vector<CheckResult> suite_lecam(const VerifyOptions& opt) {
  std::vector<CheckResult> out;
  RandomSource base(opt.seed, 6);
  for (double r : {0.02, 0.05, 0.1}) {
    RandomSource rng = base.split(static_cast<std::uint64_t>(r * 1000));
    const auto est = experiments::lecam_map_distance(5, r, 50000, rng);
    out.push_back({"lecam", "r=" + fmt(r), std::abs(est.mean - r) <= 3.0 * est.std_error * opt.tolerance_scale,
                   "mse " + fmt(est.mean) + " se " + fmt(est.std_error)});
  }
  return out;
}

using Suite = std::function<std::vector<CheckResult>(const VerifyOptions&)>;

const std::map<std::string, Suite>& registry() {
  static const std::map<std::string, Suite> suites{
      {"chi2", suite_chi2},
      {"stability", suite_stability},
      {"gradient", suite_gradient},
      {"tanh", suite_tanh},
      {"approx-law", suite_approx_law},
      {"sinkhorn-oracle", suite_sinkhorn_oracle},
      {"assignment", suite_assignment},
      {"cross-solver", suite_cross_solver},
      {"lecam", suite_lecam},
  };
  return suites;
}

}  // namespace

const std::vector<std::string>& suite_names() {
  static const std::vector<std::string> names{"chi2",       "stability",       "gradient",
                                              "tanh",       "approx-law",      "sinkhorn-oracle",
                                              "assignment", "cross-solver",    "lecam"};
  return names;
}

std::vector<CheckResult> run(const VerifyOptions& options) {
  const auto& names = options.suites.empty() ? suite_names() : options.suites;
  for (const auto& name : names) {
    if (!registry().count(name)) throw std::invalid_argument("unknown verification suite '" + name + "'");
  }
  std::vector<CheckResult> results;
  for (const auto& name : names) {
    try {
      auto part = registry().at(name)(options);
      results.insert(results.end(), part.begin(), part.end());
    } catch (const std::exception& e) {
      results.push_back({name, "error", false, e.what()});
    }
  }
  return results;
}

void print(const std::vector<CheckResult>& results, std::ostream& out) {
  for (const auto& r : results) {
    out << (r.passed ? "PASS " : "FAIL ") << r.suite << '/' << r.name << ": " << r.detail << '\n';
  }
}

}  // namespace entmap::verify
