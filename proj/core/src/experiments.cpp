#include "entmap/experiments.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <map>
#include <mutex>
#include <ostream>
#include <sstream>
#include <thread>

#include <json.hpp>

#include "entmap/measure_io.hpp"
#include "entmap/numerics.hpp"
#include "entmap/onenn.hpp"

namespace entmap::experiments {

std::string to_string(Kind kind) {
  switch (kind) {
    case Kind::kSlab: return "slab";
    case Kind::kRandomLaguerre: return "random-laguerre";
    case Kind::kSignSplit: return "sign-split";
    case Kind::kLeCam: return "lecam";
  }
  return "unknown";
}

Kind parse_kind(const std::string& name) {
  if (name == "slab") return Kind::kSlab;
  if (name == "random-laguerre") return Kind::kRandomLaguerre;
  if (name == "sign-split") return Kind::kSignSplit;
  if (name == "lecam") return Kind::kLeCam;
  throw std::invalid_argument("unknown experiment kind '" + name + "'");
}

std::string to_string(EpsRule rule) { return rule == EpsRule::kFixed ? "fixed" : "scaled"; }

EpsRule parse_eps_rule(const std::string& name) {
  if (name == "fixed") return EpsRule::kFixed;
  if (name == "scaled") return EpsRule::kScaled;
  throw std::invalid_argument("unknown eps rule '" + name + "'");
}

void ExperimentSpec::validate() const {
  if (d < 1) throw std::invalid_argument("d must be >= 1");
  if ((kind == Kind::kSlab || kind == Kind::kRandomLaguerre) && J < 1) throw std::invalid_argument("J must be >= 1");
  if (n_grid.empty()) throw std::invalid_argument("n-grid must not be empty");
  for (std::size_t k = 0; k < n_grid.size(); ++k) {
    if (n_grid[k] < 1) throw std::invalid_argument("n-grid entries must be >= 1");
    if (k > 0 && n_grid[k] <= n_grid[k - 1]) throw std::invalid_argument("n-grid must be strictly increasing");
  }
  if (trials < 1) throw std::invalid_argument("trials must be >= 1");
  if (mc_points < 1) throw std::invalid_argument("mc-points must be >= 1");
  if (!(eps_const > 0.0) || !std::isfinite(eps_const)) throw std::invalid_argument("eps constant must be positive");
  if (kind == Kind::kLeCam && !(lecam_nu0 > 0.0 && lecam_nu0 < 1.0)) {
    throw std::invalid_argument("Le Cam mass nu0 must lie in (0, 1)");
  }
  if (!(sinkhorn_tol > 0.0) || sinkhorn_max_iter < 1) throw std::invalid_argument("invalid Sinkhorn budget");
}

double epsilon_for(const ExperimentSpec& spec, Index n) {
  return spec.eps_rule == EpsRule::kFixed ? spec.eps_const : spec.eps_const / std::sqrt(static_cast<double>(n));
}

GroundTruth::GroundTruth(Kind kind, Index d, double lo, double hi, std::optional<SemiDiscreteMap> map)
    : kind_(kind), d_(d), lo_(lo), hi_(hi), map_(std::move(map)) {
  if (kind_ != Kind::kSignSplit && !map_) throw std::invalid_argument("discrete ground truth needs a map");
}

Matrix GroundTruth::sample_source(Index n, RandomSource& rng) const {
  return sample_uniform_box(lo_, hi_, n, d_, rng).points();
}

Point GroundTruth::apply(PointView x) const {
  if (map_) return brenier_eval(*map_, x).point;
  Point y = x;
  y(0) = x(0) > 0.0 ? 2.0 : (x(0) < 0.0 ? -2.0 : 0.0);
  return y;
}

Matrix GroundTruth::apply_batch(const Matrix& xs) const {
  if (map_) return brenier_eval_batch(*map_, xs);
  Matrix out(xs.rows(), xs.cols());
  for (Index i = 0; i < xs.rows(); ++i) out.row(i) = apply(PointView(xs.row(i)));
  return out;
}

SemiDiscreteMap slab_map(Index d, Index J) {
  if (d < 1 || J < 1) throw std::invalid_argument("slab map needs d >= 1 and J >= 1");
  Matrix atoms = Matrix::Constant(J, d, 0.5);
  Vector psi(J);
  for (Index j = 0; j < J; ++j) {
    atoms(j, 0) = (static_cast<double>(j) + 0.5) / static_cast<double>(J);
    // Equal-mass slabs: the boundary between j and j+1 sits at x1 = (j+1)/J.
    psi(j) = 0.5 * atoms(j, 0) * atoms(j, 0);
  }
  return SemiDiscreteMap(PointCloud(std::move(atoms)), std::move(psi));
}

SemiDiscreteMap lecam_map(Index d, double nu0) {
  if (d < 1) throw std::invalid_argument("Le Cam map needs d >= 1");
  Matrix atoms = Matrix::Zero(2, d);
  atoms(0, 0) = -0.5;
  atoms(1, 0) = 0.5;
  Vector psi(2);
  psi << 0.0, nu0 - 0.5;
  return SemiDiscreteMap(PointCloud(std::move(atoms)), std::move(psi));
}

namespace {

constexpr std::uint64_t kTruthStream = 0x7472757468ULL;  // "truth"
constexpr std::uint64_t kMonteCarloOffset = 1ULL << 40;
constexpr int kLaguerreAttempts = 100;
constexpr Index kLaguerreMassPoints = 20000;

SemiDiscreteMap random_laguerre_map(Index d, Index J, RandomSource& rng) {
  for (int attempt = 0; attempt < kLaguerreAttempts; ++attempt) {
    Matrix atoms = sample_uniform_box(0.0, 1.0, J, d, rng).points();
    // Offsets are drawn in cost convention (psi0 - |y|^2/2), which makes the
    // cells a randomly weighted Voronoi diagram of the atoms. Drawn directly,
    // the |y_j|^2 spread swamps the offsets and most cells come out empty.
    Vector psi(J);
    for (Index j = 0; j < J; ++j) {
      psi(j) = 0.5 * atoms.row(j).squaredNorm() + rng.uniform(0.0, 1.0 / static_cast<double>(J));
    }
    SemiDiscreteMap map(PointCloud(std::move(atoms)), std::move(psi));

    std::vector<Index> counts(static_cast<std::size_t>(J), 0);
    Point x(d);
    for (Index k = 0; k < kLaguerreMassPoints; ++k) {
      for (Index c = 0; c < d; ++c) x(c) = rng.uniform();
      ++counts[static_cast<std::size_t>(map.cell(x))];
    }
    const double min_mass = static_cast<double>(*std::min_element(counts.begin(), counts.end())) /
                            static_cast<double>(kLaguerreMassPoints);
    if (min_mass >= 1.0 / (4.0 * static_cast<double>(J))) return map;
  }
  throw GroundTruthError("random-laguerre: no configuration with every cell mass >= 1/(4J) after " +
                         std::to_string(kLaguerreAttempts) + " attempts");
}

}  // namespace

GroundTruth ground_truth(const ExperimentSpec& spec) {
  switch (spec.kind) {
    case Kind::kSlab:
      return GroundTruth(spec.kind, spec.d, 0.0, 1.0, slab_map(spec.d, spec.J));
    case Kind::kRandomLaguerre: {
      RandomSource rng(spec.seed, kTruthStream);
      return GroundTruth(spec.kind, spec.d, 0.0, 1.0, random_laguerre_map(spec.d, spec.J, rng));
    }
    case Kind::kSignSplit:
      return GroundTruth(spec.kind, spec.d, -1.0, 1.0, std::nullopt);
    case Kind::kLeCam:
      return GroundTruth(spec.kind, spec.d, -0.5, 0.5, lecam_map(spec.d, spec.lecam_nu0));
  }
  throw std::invalid_argument("unknown experiment kind");
}

GeneratedData generate_data(const GroundTruth& truth, Index n, RandomSource& rng) {
  Matrix x = truth.sample_source(n, rng);
  const Matrix x_prime = truth.sample_source(n, rng);
  return {PointCloud(std::move(x)), PointCloud(truth.apply_batch(x_prime))};
}

MseEstimate mse_of_outputs(const Matrix& a, const Matrix& b) {
  if (a.rows() != b.rows() || a.cols() != b.cols() || a.rows() < 1) {
    throw std::invalid_argument("mse: output shapes differ");
  }
  const Index m = a.rows();
  CompensatedSum sum;
  CompensatedSum sum_sq;
  for (Index k = 0; k < m; ++k) {
    const double e = (a.row(k) - b.row(k)).squaredNorm();
    sum += e;
    sum_sq += e * e;
  }
  const double md = static_cast<double>(m);
  const double mean = sum.value() / md;
  double var = 0.0;
  if (m > 1) var = std::max(0.0, (sum_sq.value() - md * mean * mean) / (md - 1.0));
  return {mean, std::sqrt(var / md)};
}

MseEstimate mse(const BatchMap& a, const BatchMap& b, const Sampler& sampler, Index mc_points, RandomSource& rng) {
  if (mc_points < 1) throw std::invalid_argument("mse: mc_points must be >= 1");
  const Matrix z = sampler(mc_points, rng);
  return mse_of_outputs(a(z), b(z));
}

MseEstimate lecam_map_distance(Index d, double r, Index mc_points, RandomSource& rng) {
  if (!(r > 0.0 && r < 0.5)) throw std::invalid_argument("Le Cam: r must lie in (0, 1/2)");
  const SemiDiscreteMap q0 = lecam_map(d, 0.5);
  const SemiDiscreteMap q1 = lecam_map(d, 0.5 - r);
  return mse([&](const Matrix& z) { return brenier_eval_batch(q0, z); },
             [&](const Matrix& z) { return brenier_eval_batch(q1, z); },
             [d](Index m, RandomSource& g) { return sample_uniform_box(-0.5, 0.5, m, d, g).points(); }, mc_points,
             rng);
}

SlopeFit fit_loglog(const std::vector<double>& n, const std::vector<double>& mse_values) {
  if (n.size() != mse_values.size() || n.size() < 2) throw std::invalid_argument("fit_loglog: need >= 2 points");
  const auto k = static_cast<double>(n.size());
  std::vector<double> lx(n.size());
  std::vector<double> ly(n.size());
  double mx = 0.0;
  double my = 0.0;
  for (std::size_t i = 0; i < n.size(); ++i) {
    if (!(n[i] > 0.0) || !(mse_values[i] > 0.0)) throw std::invalid_argument("fit_loglog: values must be positive");
    lx[i] = std::log(n[i]);
    ly[i] = std::log(mse_values[i]);
    mx += lx[i];
    my += ly[i];
  }
  mx /= k;
  my /= k;
  double sxx = 0.0;
  double sxy = 0.0;
  for (std::size_t i = 0; i < n.size(); ++i) {
    sxx += (lx[i] - mx) * (lx[i] - mx);
    sxy += (lx[i] - mx) * (ly[i] - my);
  }
  if (!(sxx > 0.0)) throw std::invalid_argument("fit_loglog: n values must not all coincide");
  SlopeFit fit;
  fit.slope = sxy / sxx;
  fit.intercept = my - fit.slope * mx;
  if (n.size() > 2) {
    double rss = 0.0;
    for (std::size_t i = 0; i < n.size(); ++i) {
      const double r = ly[i] - (fit.intercept + fit.slope * lx[i]);
      rss += r * r;
    }
    fit.slope_stderr = std::sqrt(rss / (k - 2.0) / sxx);
  }
  return fit;
}

const EstimatorReport& RateReport::estimator(const std::string& name) const {
  for (const auto& e : estimators) {
    if (e.name == name) return e;
  }
  throw std::out_of_range("no estimator named " + name);
}

int resolve_thread_count(int requested) {
  if (requested > 0) return requested;
  if (const char* env = std::getenv("ENTMAP_THREADS")) {
    const int v = std::atoi(env);
    if (v > 0) return v;
  }
  return 1;
}

namespace {

struct CellResult {
  double eps = 0.0;
  std::vector<MseEstimate> values;  // entropic, rounded, 1NN
  std::optional<std::string> failure;
};

const std::vector<std::string>& estimator_names() {
  static const std::vector<std::string> names{kEntropic, kEntropicRounded, kOneNN};
  return names;
}

CellResult run_cell(const ExperimentSpec& spec, const GroundTruth& truth, Index n, int trial) {
  CellResult cell;
  cell.eps = epsilon_for(spec, n);
  try {
    const RandomSource trial_stream(spec.seed, static_cast<std::uint64_t>(trial));
    RandomSource data_rng = trial_stream.split(static_cast<std::uint64_t>(n));
    RandomSource mc_rng = trial_stream.split(kMonteCarloOffset + static_cast<std::uint64_t>(n));

    const GeneratedData data = generate_data(truth, n, data_rng);
    const DiscreteMeasure source = empirical(data.x);
    const DiscreteMeasure target = consolidate(empirical(data.y), 0.0);
    const EntropicMapModel entropic =
        fit_entropic(source, target, cell.eps, spec.sinkhorn_tol, spec.sinkhorn_max_iter);
    const OneNNModel onenn = fit_onenn(data.x, data.y);

    const Matrix z = truth.sample_source(spec.mc_points, mc_rng);
    const Matrix t0 = truth.apply_batch(z);
    const MapEvaluation ev = evaluate(entropic, z);
    Matrix rounded = ev.outputs;
    const PointCloud& support = *entropic.rounding_support();
    for (Index k = 0; k < rounded.rows(); ++k) rounded.row(k) = support.point(nearest_atom(support, rounded.row(k)));
    cell.values.push_back(mse_of_outputs(ev.outputs, t0));
    cell.values.push_back(mse_of_outputs(rounded, t0));
    cell.values.push_back(mse_of_outputs(onenn_eval_batch(onenn, z), t0));
  } catch (const std::exception& e) {
    cell.values.clear();
    cell.failure = e.what();
  }
  return cell;
}

double sample_std(const std::vector<double>& v, double mean) {
  if (v.size() < 2) return 0.0;
  double s = 0.0;
  for (double x : v) s += (x - mean) * (x - mean);
  return std::sqrt(s / static_cast<double>(v.size() - 1));
}

}  // namespace

std::vector<EstimatorReport> aggregate(const std::vector<RawRecord>& raw, const std::vector<std::string>& names) {
  std::vector<EstimatorReport> out;
  for (const auto& name : names) {
    EstimatorReport est;
    est.name = name;
    std::map<Index, std::vector<double>> by_n;
    for (const auto& r : raw) {
      if (r.estimator == name) by_n[r.n].push_back(r.mse);
    }
    std::vector<double> ns;
    std::vector<double> means;
    for (const auto& [n, values] : by_n) {
      RateRow row;
      row.n = n;
      row.trials = static_cast<int>(values.size());
      double s = 0.0;
      for (double v : values) s += v;
      row.mse_mean = s / static_cast<double>(values.size());
      row.mse_std = sample_std(values, row.mse_mean);
      est.rows.push_back(row);
      ns.push_back(static_cast<double>(n));
      means.push_back(row.mse_mean);
    }
    const bool positive = std::all_of(means.begin(), means.end(), [](double m) { return m > 0.0; });
    if (ns.size() >= 2 && positive) est.fit = fit_loglog(ns, means);
    out.push_back(std::move(est));
  }
  return out;
}

RateReport run(const ExperimentSpec& spec) {
  spec.validate();
  const GroundTruth truth = ground_truth(spec);

  struct Task {
    Index n;
    int trial;
  };
  std::vector<Task> tasks;
  for (Index n : spec.n_grid) {
    for (int t = 0; t < spec.trials; ++t) tasks.push_back({n, t});
  }
  std::vector<CellResult> results(tasks.size());

  const int threads = std::min<int>(resolve_thread_count(spec.threads), static_cast<int>(tasks.size()));
  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t k = next++; k < tasks.size(); k = next++) {
      results[k] = run_cell(spec, truth, tasks[k].n, tasks[k].trial);
    }
  };
  if (threads <= 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    for (int t = 0; t < threads; ++t) pool.emplace_back(worker);
    for (auto& th : pool) th.join();
  }

  RateReport report;
  report.spec = spec;
  const auto& names = estimator_names();
  for (std::size_t k = 0; k < tasks.size(); ++k) {
    const auto& cell = results[k];
    if (cell.failure) {
      report.failures.push_back({tasks[k].n, tasks[k].trial, *cell.failure});
      continue;
    }
    for (std::size_t e = 0; e < names.size(); ++e) {
      report.raw.push_back({names[e], tasks[k].n, tasks[k].trial, cell.values[e].mean, cell.values[e].std_error,
                            cell.eps, spec.seed});
    }
  }
  report.estimators = aggregate(report.raw, names);
  return report;
}

void write_raw_csv(const RateReport& report, std::ostream& out) {
  out << "estimator,n,trial,mse,eps,seed\n";
  for (const auto& r : report.raw) {
    out << r.estimator << ',' << r.n << ',' << r.trial << ',' << format_double(r.mse) << ',' << format_double(r.eps)
        << ',' << r.seed << '\n';
  }
}

void write_aggregate_csv(const RateReport& report, std::ostream& out) {
  out << "estimator,n,mse_mean,mse_std\n";
  for (const auto& est : report.estimators) {
    for (const auto& row : est.rows) {
      out << est.name << ',' << row.n << ',' << format_double(row.mse_mean) << ',' << format_double(row.mse_std)
          << '\n';
    }
  }
}

std::string report_json(const RateReport& report) {
  nlohmann::ordered_json j;
  const auto& s = report.spec;
  j["kind"] = to_string(s.kind);
  j["d"] = s.d;
  j["J"] = s.J;
  j["n_grid"] = s.n_grid;
  j["trials"] = s.trials;
  j["mc_points"] = s.mc_points;
  j["eps_rule"] = to_string(s.eps_rule);
  j["eps_const"] = s.eps_const;
  j["seed"] = s.seed;
  if (s.kind == Kind::kLeCam) j["lecam_nu0"] = s.lecam_nu0;
  auto ests = nlohmann::ordered_json::object();
  for (const auto& est : report.estimators) {
    nlohmann::ordered_json e;
    if (est.fit) {
      e["slope"] = est.fit->slope;
      e["intercept"] = est.fit->intercept;
      e["slope_stderr"] = est.fit->slope_stderr;
    } else {
      e["slope"] = nullptr;
    }
    auto rows = nlohmann::ordered_json::array();
    for (const auto& row : est.rows) {
      rows.push_back({{"n", row.n}, {"mse_mean", row.mse_mean}, {"mse_std", row.mse_std}, {"trials", row.trials}});
    }
    e["rows"] = std::move(rows);
    ests[est.name] = std::move(e);
  }
  j["estimators"] = std::move(ests);
  auto failures = nlohmann::ordered_json::array();
  for (const auto& f : report.failures) {
    failures.push_back({{"n", f.n}, {"trial", f.trial}, {"message", f.message}});
  }
  j["failures"] = std::move(failures);
  return j.dump(2) + "\n";
}

void write_gnuplot_data(const EstimatorReport& est, std::ostream& out) {
  out << "# n mse_mean mse_std (" << est.name << ")\n";
  for (const auto& row : est.rows) {
    out << row.n << ' ' << format_double(row.mse_mean) << ' ' << format_double(row.mse_std) << '\n';
  }
}

void write_report_files(const RateReport& report, const std::string& dir) {
  namespace fs = std::filesystem;
  fs::create_directories(dir);
  auto open = [&](const std::string& name) {
    std::ofstream out(fs::path(dir) / name);
    if (!out) throw std::runtime_error("cannot write " + (fs::path(dir) / name).string());
    return out;
  };
  {
    auto out = open("raw.csv");
    write_raw_csv(report, out);
  }
  {
    auto out = open("aggregate.csv");
    write_aggregate_csv(report, out);
  }
  {
    auto out = open("report.json");
    out << report_json(report);
  }
  for (const auto& est : report.estimators) {
    auto out = open(est.name + ".dat");
    write_gnuplot_data(est, out);
  }
}

}  // namespace entmap::experiments
