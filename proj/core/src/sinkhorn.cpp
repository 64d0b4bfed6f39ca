#include "entmap/sinkhorn.hpp"

#include <cmath>
#include <ostream>

#include "entmap/measure_io.hpp"
#include "entmap/numerics.hpp"

namespace entmap {

Matrix half_sqdist_cost(const PointCloud& x, const PointCloud& y) {
  if (x.dim() != y.dim()) {
    throw std::invalid_argument("cost matrix: dimension mismatch");
  }
  Matrix c(x.size(), y.size());
  for (Index i = 0; i < x.size(); ++i) {
    for (Index j = 0; j < y.size(); ++j) {
      c(i, j) = 0.5 * (x.point(i) - y.point(j)).squaredNorm();
    }
  }
  return c;
}

namespace sinkhorn {

namespace {

// out_i = -eps * log sum_j exp(log_w_j + (pot_j - C_ij) / eps), row-wise over C.
void softmin_rows(const Matrix& cost, const Vector& log_w, const Vector& pot, double eps, Vector& out,
                  std::vector<double>& scratch) {
  const Index m = cost.cols();
  scratch.resize(static_cast<std::size_t>(m));
  for (Index i = 0; i < cost.rows(); ++i) {
    for (Index j = 0; j < m; ++j) {
      scratch[static_cast<std::size_t>(j)] = log_w(j) + (pot(j) - cost(i, j)) / eps;
    }
    out(i) = -eps * log_sum_exp(scratch);
  }
}

// Same reduction over columns of C.
void softmin_cols(const Matrix& cost, const Vector& log_w, const Vector& pot, double eps, Vector& out,
                  std::vector<double>& scratch) {
  const Index n = cost.rows();
  scratch.resize(static_cast<std::size_t>(n));
  for (Index j = 0; j < cost.cols(); ++j) {
    for (Index i = 0; i < n; ++i) {
      scratch[static_cast<std::size_t>(i)] = log_w(i) + (pot(i) - cost(i, j)) / eps;
    }
    out(j) = -eps * log_sum_exp(scratch);
  }
}

}  // namespace

SinkhornResult solve(const DiscreteMeasure& mu_in, const DiscreteMeasure& nu_in, const SinkhornOptions& options) {
  if (!(options.epsilon > 0.0) || !std::isfinite(options.epsilon)) {
    throw std::invalid_argument("sinkhorn: epsilon must be positive");
  }
  if (!(options.tol >= 0.0) || options.max_iter < 1) {
    throw std::invalid_argument("sinkhorn: tol must be >= 0 and max_iter >= 1");
  }
  if (mu_in.dim() != nu_in.dim()) {
    throw std::invalid_argument("sinkhorn: measures live in different dimensions");
  }
  const double eps = options.epsilon;

  std::vector<Index> mu_kept;
  std::vector<Index> nu_kept;
  const DiscreteMeasure mu = drop_zero_weights(mu_in, &mu_kept);
  const DiscreteMeasure nu = drop_zero_weights(nu_in, &nu_kept);

  const Matrix cost = half_sqdist_cost(mu.atoms(), nu.atoms());
  const Vector log_mu = mu.weights().array().log();
  const Vector log_nu = nu.weights().array().log();

  Vector f = Vector::Zero(mu.size());
  Vector g = Vector::Zero(nu.size());
  Vector g_next(nu.size());
  std::vector<double> scratch;

  SinkhornReport report;
  for (int it = 1; it <= options.max_iter; ++it) {
    softmin_rows(cost, log_nu, g, eps, f, scratch);
    // With f refit, column j sums to nu_j * exp((g_j - g_next_j) / eps).
    softmin_cols(cost, log_mu, f, eps, g_next, scratch);
    CompensatedSum residual;
    for (Index j = 0; j < nu.size(); ++j) {
      residual += std::abs(nu.weight(j) * std::expm1((g(j) - g_next(j)) / eps));
    }
    report.iterations = it;
    report.residual = residual.value();
    if (options.record_trace) report.trace.push_back(report.residual);
    if (report.residual <= options.tol) {
      report.converged = true;
      break;
    }
    g = g_next;
  }

  // Gauge: sum_j nu_j g_j = 0.
  const double shift = nu.weights().dot(g);
  g.array() -= shift;
  f.array() += shift;

  DualPotentials pot;
  pot.epsilon = eps;
  pot.f.resize(mu_in.size());
  pot.g.resize(nu_in.size());

  if (static_cast<Index>(mu_kept.size()) == mu_in.size() && static_cast<Index>(nu_kept.size()) == nu_in.size()) {
    pot.f = f;
    pot.g = g;
  } else {
    // Extend to dropped atoms through the softmin identities.
    const Matrix full_cost = half_sqdist_cost(mu_in.atoms(), nu_in.atoms());
    Vector log_nu_full = Vector::Constant(nu_in.size(), -std::numeric_limits<double>::infinity());
    Vector g_full = Vector::Zero(nu_in.size());
    for (std::size_t r = 0; r < nu_kept.size(); ++r) {
      log_nu_full(nu_kept[r]) = log_nu(static_cast<Index>(r));
      g_full(nu_kept[r]) = g(static_cast<Index>(r));
    }
    Vector log_mu_full = Vector::Constant(mu_in.size(), -std::numeric_limits<double>::infinity());
    Vector f_full = Vector::Zero(mu_in.size());
    for (std::size_t r = 0; r < mu_kept.size(); ++r) {
      log_mu_full(mu_kept[r]) = log_mu(static_cast<Index>(r));
      f_full(mu_kept[r]) = f(static_cast<Index>(r));
    }
    Vector f_ext(mu_in.size());
    Vector g_ext(nu_in.size());
    softmin_rows(full_cost, log_nu_full, g_full, eps, f_ext, scratch);
    softmin_cols(full_cost, log_mu_full, f_full, eps, g_ext, scratch);
    pot.f = f_ext;
    pot.g = g_ext;
    for (std::size_t r = 0; r < mu_kept.size(); ++r) pot.f(mu_kept[r]) = f(static_cast<Index>(r));
    for (std::size_t r = 0; r < nu_kept.size(); ++r) pot.g(nu_kept[r]) = g(static_cast<Index>(r));
  }

  report.entropic_cost = entropic_cost(pot, mu_in, nu_in);
  return {std::move(pot), std::move(report)};
}

double plan_entry(const DualPotentials& pot, const DiscreteMeasure& mu, const DiscreteMeasure& nu, Index i,
                  Index j) {
  const double c = 0.5 * (mu.atoms().point(i) - nu.atoms().point(j)).squaredNorm();
  return mu.weight(i) * nu.weight(j) * std::exp((pot.f(i) + pot.g(j) - c) / pot.epsilon);
}

Matrix plan(const DualPotentials& pot, const DiscreteMeasure& mu, const DiscreteMeasure& nu) {
  Matrix p(mu.size(), nu.size());
  for (Index i = 0; i < mu.size(); ++i) {
    for (Index j = 0; j < nu.size(); ++j) p(i, j) = plan_entry(pot, mu, nu, i, j);
  }
  return p;
}

InnerProductPotentials to_inner_product_potentials(const DualPotentials& pot, const DiscreteMeasure& mu,
                                                   const DiscreteMeasure& nu) {
  InnerProductPotentials out;
  out.phi = 0.5 * mu.atoms().points().rowwise().squaredNorm() - pot.f;
  out.psi = 0.5 * nu.atoms().points().rowwise().squaredNorm() - pot.g;
  return out;
}

double plan_entry_inner(const InnerProductPotentials& pot, double epsilon, const DiscreteMeasure& mu,
                        const DiscreteMeasure& nu, Index i, Index j) {
  const double ip = mu.atoms().point(i).dot(nu.atoms().point(j));
  return mu.weight(i) * nu.weight(j) * std::exp((ip - pot.phi(i) - pot.psi(j)) / epsilon);
}

double entropic_cost(const DualPotentials& pot, const DiscreteMeasure& mu, const DiscreteMeasure& nu) {
  const auto ip = to_inner_product_potentials(pot, mu, nu);
  CompensatedSum s;
  for (Index i = 0; i < mu.size(); ++i) {
    s += mu.weight(i) * (0.5 * mu.atoms().point(i).squaredNorm() - ip.phi(i));
  }
  for (Index j = 0; j < nu.size(); ++j) {
    s += nu.weight(j) * (0.5 * nu.atoms().point(j).squaredNorm() - ip.psi(j));
  }
  return s.value();
}

void write_trace_csv(const SinkhornReport& report, std::ostream& out) {
  out << "iter,residual\n";
  for (std::size_t k = 0; k < report.trace.size(); ++k) {
    out << (k + 1) << ',' << format_double(report.trace[k]) << '\n';
  }
}

}  // namespace sinkhorn
}  // namespace entmap
