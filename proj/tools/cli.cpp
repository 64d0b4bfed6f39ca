#include "cli.hpp"

#include <CLI11.hpp>

#include <filesystem>
#include <fstream>
#include <json.hpp>
#include <ostream>
#include <sstream>

#include "entmap/experiments.hpp"
#include "entmap/measure_io.hpp"
#include "entmap/sinkhorn.hpp"
#include "verify_suites.hpp"

namespace entmap::cli {

namespace {

using nlohmann::json;

// Flat JSON object whose keys are long flag names (without dashes). Items
// are attributed to whichever subcommand was selected on the command line.
class JsonConfig : public CLI::Config {
 public:
  explicit JsonConfig(const CLI::App* root) : root_(root) {}

  std::string to_config(const CLI::App*, bool, bool, std::string) const override { return "{}"; }

  std::vector<CLI::ConfigItem> from_config(std::istream& input) const override {
    json doc;
    try {
      input >> doc;
    } catch (const json::exception& e) {
      throw CLI::ConfigError(std::string("config file is not valid JSON: ") + e.what());
    }
    if (!doc.is_object()) throw CLI::ConfigError("config file must hold a flat JSON object");
    std::vector<std::string> parents;
    const CLI::App* scope = root_;
    for (const auto* sub : root_->get_subcommands()) {
      parents.push_back(sub->get_name());
      scope = sub;
    }
    std::vector<CLI::ConfigItem> items;
    for (const auto& [key, value] : doc.items()) {
      if (scope->get_option_no_throw("--" + key) == nullptr || key == "config") {
        throw CLI::ConfigError("unknown config key '" + key + "'");
      }
      CLI::ConfigItem item;
      item.parents = parents;
      item.name = key;
      if (value.is_array()) {
        for (const auto& v : value) item.inputs.push_back(scalar(key, v));
      } else {
        item.inputs.push_back(scalar(key, value));
      }
      items.push_back(std::move(item));
    }
    return items;
  }

 private:
  static std::string scalar(const std::string& key, const json& v) {
    if (v.is_string()) return v.get<std::string>();
    if (v.is_boolean()) return v.get<bool>() ? "true" : "false";
    if (v.is_number_integer()) return std::to_string(v.get<long long>());
    if (v.is_number()) return format_double(v.get<double>());
    throw CLI::ConfigError("config key '" + key + "' must be a scalar or an array of scalars");
  }

  const CLI::App* root_;
};

void write_file(const std::string& path, const std::string& text) {
  std::ofstream f(path, std::ios::binary);
  if (!f) throw std::runtime_error("cannot open '" + path + "' for writing");
  f << text;
  if (!f) throw std::runtime_error("failed writing '" + path + "'");
}

std::string dump(const json& j) { return j.dump(2) + "\n"; }

json to_json(const Vector& v) { return json(std::vector<double>(v.data(), v.data() + v.size())); }

struct SinkhornArgs {
  std::string mu;
  std::string nu;
  double eps = 1.0;
  double tol = 1e-9;
  int max_iter = 100000;
  std::string potentials = "potentials.json";
  std::string report = "report.json";
  std::string trace;
};

int cmd_sinkhorn(const SinkhornArgs& a, std::ostream& out, std::ostream& err) {
  DiscreteMeasure mu = [&] {
    try {
      return read_measure_csv(a.mu);
    } catch (const std::exception& e) {
      throw std::runtime_error(a.mu + ": " + e.what());
    }
  }();
  DiscreteMeasure nu = [&] {
    try {
      return read_measure_csv(a.nu);
    } catch (const std::exception& e) {
      throw std::runtime_error(a.nu + ": " + e.what());
    }
  }();
  SinkhornOptions opt;
  opt.epsilon = a.eps;
  opt.tol = a.tol;
  opt.max_iter = a.max_iter;
  opt.record_trace = !a.trace.empty();
  const SinkhornResult result = sinkhorn::solve(mu, nu, opt);
  const InnerProductPotentials inner = sinkhorn::to_inner_product_potentials(result.potentials, mu, nu);

  json pot;
  pot["epsilon"] = a.eps;
  pot["convention"] = "half-sqdist";
  pot["f"] = to_json(result.potentials.f);
  pot["g"] = to_json(result.potentials.g);
  pot["phi"] = to_json(inner.phi);
  pot["psi"] = to_json(inner.psi);
  write_file(a.potentials, dump(pot));

  json rep;
  rep["epsilon"] = a.eps;
  rep["tol"] = a.tol;
  rep["max_iter"] = a.max_iter;
  rep["iterations"] = result.report.iterations;
  rep["residual"] = result.report.residual;
  rep["converged"] = result.report.converged;
  rep["entropic_cost"] = result.report.entropic_cost;
  write_file(a.report, dump(rep));

  if (!a.trace.empty()) {
    std::ostringstream t;
    sinkhorn::write_trace_csv(result.report, t);
    write_file(a.trace, t.str());
  }

  if (!result.report.converged) {
    err << "sinkhorn did not converge: residual " << format_double(result.report.residual) << " after "
        << result.report.iterations << " iterations\n";
    return kNotConverged;
  }
  out << "entropic_cost " << format_double(result.report.entropic_cost) << '\n';
  return kSuccess;
}

struct ExperimentArgs {
  std::string kind = "slab";
  Index d = 10;
  Index J = 2;
  std::vector<Index> n_grid{256, 512, 1024, 2048, 4096};
  int trials = 10;
  Index mc_points = 50000;
  double eps_const = 1.0;
  std::string eps_rule = "scaled";
  std::uint64_t seed = 0;
  std::string out_dir = "results";
  double r = 0.05;
  int threads = 0;
  double sinkhorn_tol = 1e-9;
};

int cmd_experiment(const ExperimentArgs& a, std::ostream& out, std::ostream& err) {
  experiments::ExperimentSpec spec;
  spec.kind = experiments::parse_kind(a.kind);
  spec.d = a.d;
  spec.J = a.J;
  spec.n_grid = a.n_grid;
  spec.trials = a.trials;
  spec.mc_points = a.mc_points;
  spec.eps_const = a.eps_const;
  spec.eps_rule = experiments::parse_eps_rule(a.eps_rule);
  spec.seed = a.seed;
  spec.threads = a.threads;
  spec.sinkhorn_tol = a.sinkhorn_tol;
  spec.validate();

  std::filesystem::create_directories(a.out_dir);
  if (spec.kind == experiments::Kind::kLeCam) {
    if (!(a.r > 0.0 && a.r < 0.5)) throw std::invalid_argument("--r must lie in (0, 0.5)");
    RandomSource rng(spec.seed, 0);
    const auto est = experiments::lecam_map_distance(spec.d, a.r, spec.mc_points, rng);
    json rep;
    rep["kind"] = "lecam";
    rep["d"] = spec.d;
    rep["r"] = a.r;
    rep["mc_points"] = spec.mc_points;
    rep["seed"] = spec.seed;
    rep["mse"] = est.mean;
    rep["mse_stderr"] = est.std_error;
    write_file((std::filesystem::path(a.out_dir) / "lecam.json").string(), dump(rep));
    out << "mse " << format_double(est.mean) << " stderr " << format_double(est.std_error) << '\n';
    return kSuccess;
  }

  const experiments::RateReport report = experiments::run(spec);
  experiments::write_report_files(report, a.out_dir);
  for (const auto& f : report.failures) {
    err << "trial failed (n=" << f.n << ", trial=" << f.trial << "): " << f.message << '\n';
  }
  for (const auto& est : report.estimators) {
    out << est.name;
    if (est.fit) {
      out << " slope " << format_double(est.fit->slope);
    } else {
      out << " slope n/a";
    }
    if (!est.rows.empty()) out << " mse@" << est.rows.back().n << ' ' << format_double(est.rows.back().mse_mean);
    out << '\n';
  }
  return report.failures.empty() ? kSuccess : kNotConverged;
}

struct VerifyArgs {
  std::vector<std::string> suites;
  double tolerance_scale = 1.0;
  std::uint64_t seed = 20230101;
};

int cmd_verify(const VerifyArgs& a, std::ostream& out) {
  verify::VerifyOptions opt;
  opt.suites = a.suites;
  opt.tolerance_scale = a.tolerance_scale;
  opt.seed = a.seed;
  const auto results = verify::run(opt);
  verify::print(results, out);
  const bool ok = std::all_of(results.begin(), results.end(), [](const auto& r) { return r.passed; });
  out << (ok ? "all checks passed" : "verification failed") << '\n';
  return ok ? kSuccess : kVerificationFailed;
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Entropic and semi-discrete optimal transport map estimation", "entmap"};
  app.require_subcommand(1);
  app.config_formatter(std::make_shared<JsonConfig>(&app));
  app.set_config("--config", "", "Flat JSON file of flag values; command-line flags take precedence");
  app.allow_config_extras(CLI::config_extras_mode::error);

  SinkhornArgs sk;
  auto* sk_cmd = app.add_subcommand("sinkhorn", "Solve entropic OT between two measure CSV files");
  sk_cmd->fallthrough();
  sk_cmd->add_option("--mu", sk.mu, "Source measure CSV (w,x1..xd)");
  sk_cmd->add_option("--nu", sk.nu, "Target measure CSV (w,x1..xd)");
  sk_cmd->add_option("--eps", sk.eps, "Entropic regularization")->check(CLI::PositiveNumber);
  sk_cmd->add_option("--tol", sk.tol, "L1 marginal tolerance")->check(CLI::PositiveNumber);
  sk_cmd->add_option("--max-iter", sk.max_iter, "Iteration budget")->check(CLI::PositiveNumber);
  sk_cmd->add_option("--potentials", sk.potentials, "Output path for the potentials JSON");
  sk_cmd->add_option("--report", sk.report, "Output path for the solver report JSON");
  sk_cmd->add_option("--trace", sk.trace, "Optional output path for the residual trace CSV");

  ExperimentArgs ex;
  auto* ex_cmd = app.add_subcommand("experiment", "Run a convergence-rate experiment");
  ex_cmd->fallthrough();
  ex_cmd->add_option("--kind", ex.kind, "slab | random-laguerre | sign-split | lecam");
  ex_cmd->add_option("--d", ex.d, "Dimension")->check(CLI::PositiveNumber);
  ex_cmd->add_option("--J", ex.J, "Number of target atoms");
  ex_cmd->add_option("--n-grid", ex.n_grid, "Sample sizes")->delimiter(',');
  ex_cmd->add_option("--trials", ex.trials, "Trials per sample size");
  ex_cmd->add_option("--mc-points", ex.mc_points, "Monte Carlo points for the MSE");
  ex_cmd->add_option("--eps-const", ex.eps_const, "Constant c in eps = c n^{-1/2} (or eps = c)");
  ex_cmd->add_option("--eps-rule", ex.eps_rule, "scaled | fixed");
  ex_cmd->add_option("--seed", ex.seed, "Base seed");
  ex_cmd->add_option("--out-dir", ex.out_dir, "Output directory");
  ex_cmd->add_option("--r", ex.r, "Le Cam perturbation (kind lecam only)");
  ex_cmd->add_option("--threads", ex.threads, "Worker threads (default: ENTMAP_THREADS or 1)");
  ex_cmd->add_option("--sinkhorn-tol", ex.sinkhorn_tol, "Sinkhorn L1 tolerance")->check(CLI::PositiveNumber);

  VerifyArgs vf;
  auto* vf_cmd = app.add_subcommand("verify", "Run the oracle and invariant suites");
  vf_cmd->fallthrough();
  vf_cmd->add_option("--suite", vf.suites, "Restrict to these suites (repeatable)")->delimiter(',');
  vf_cmd->add_option("--tolerance-scale", vf.tolerance_scale, "Multiply every tolerance by this factor")
      ->check(CLI::NonNegativeNumber);
  vf_cmd->add_option("--seed", vf.seed, "Seed for the randomized suites");

  std::vector<std::string> reversed(args.rbegin(), args.rend());
  try {
    app.parse(reversed);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e, out, err);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e, out, err);
  } catch (const CLI::ParseError& e) {
    app.exit(e, out, err);
    return kUsageError;
  }

  try {
    if (sk_cmd->parsed()) {
      if (sk.mu.empty() || sk.nu.empty()) throw std::invalid_argument("--mu and --nu are required");
      return cmd_sinkhorn(sk, out, err);
    }
    if (ex_cmd->parsed()) return cmd_experiment(ex, out, err);
    if (vf_cmd->parsed()) return cmd_verify(vf, out);
  } catch (const SinkhornNotConverged& e) {
    err << "error: " << e.what() << '\n';
    return kNotConverged;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return kUsageError;
  }
  return kUsageError;
}

}  // namespace entmap::cli
