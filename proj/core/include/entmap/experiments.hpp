#pragma once

#include <cstdint>
#include <functional>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "entmap/maps.hpp"
#include "entmap/measures.hpp"

namespace entmap::experiments {

enum class Kind {
  kSlab,            // equal-mass slabs along x1 on [0,1]^d
  kRandomLaguerre,  // random atoms in [0,1]^d, psi0_j = |y_j|^2/2 + U[0, 1/J]
  kSignSplit,       // x -> (2 sign(x1), x2, ..., xd) on [-1,1]^d
  kLeCam,           // two atoms +-e1/2, threshold at x1 = nu0 - 1/2 on [-1/2,1/2]^d
};

enum class EpsRule {
  kFixed,   // eps = c
  kScaled,  // eps = c / sqrt(n)
};

std::string to_string(Kind kind);
Kind parse_kind(const std::string& name);
std::string to_string(EpsRule rule);
EpsRule parse_eps_rule(const std::string& name);

struct ExperimentSpec {
  Kind kind = Kind::kSlab;
  Index d = 10;
  Index J = 2;
  std::vector<Index> n_grid{256, 512, 1024, 2048, 4096};
  int trials = 10;
  Index mc_points = 50000;
  EpsRule eps_rule = EpsRule::kScaled;
  double eps_const = 1.0;
  std::uint64_t seed = 0;
  /// Mass of the atom -e in the Le Cam instance.
  double lecam_nu0 = 0.5;
  double sinkhorn_tol = 1e-9;
  int sinkhorn_max_iter = 100000;
  /// Worker threads; <= 0 reads ENTMAP_THREADS and falls back to 1.
  int threads = 0;

  /// Throws std::invalid_argument describing the first violated constraint.
  void validate() const;
};

double epsilon_for(const ExperimentSpec& spec, Index n);

/// Source distribution (uniform on a box) plus the true map.
class GroundTruth {
 public:
  GroundTruth(Kind kind, Index d, double lo, double hi, std::optional<SemiDiscreteMap> map);

  Kind kind() const { return kind_; }
  Index dim() const { return d_; }
  double box_lo() const { return lo_; }
  double box_hi() const { return hi_; }
  /// Present for every kind except sign-split.
  const std::optional<SemiDiscreteMap>& semi_discrete() const { return map_; }

  Matrix sample_source(Index n, RandomSource& rng) const;
  Point apply(PointView x) const;
  Matrix apply_batch(const Matrix& xs) const;

 private:
  Kind kind_;
  Index d_;
  double lo_;
  double hi_;
  std::optional<SemiDiscreteMap> map_;
};

/// Raised when random-laguerre cannot find a configuration with every cell
/// holding at least 1/(4J) of the mass within 100 attempts.
class GroundTruthError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

GroundTruth ground_truth(const ExperimentSpec& spec);

/// Slab map with J equal-mass cells along x1 in dimension d.
SemiDiscreteMap slab_map(Index d, Index J);
/// Le Cam two-atom map, atoms -e and +e with e = e1 / 2.
SemiDiscreteMap lecam_map(Index d, double nu0);

struct GeneratedData {
  PointCloud x;
  PointCloud y;
};

/// X ~ P^n and Y_i = T0(X'_i) for an independent X' ~ P^n.
GeneratedData generate_data(const GroundTruth& truth, Index n, RandomSource& rng);

struct MseEstimate {
  double mean = 0.0;
  /// Monte Carlo standard error of the mean.
  double std_error = 0.0;
};

using BatchMap = std::function<Matrix(const Matrix&)>;
using Sampler = std::function<Matrix(Index, RandomSource&)>;

/// Mean of |a(Z) - b(Z)|^2 over mc_points fresh draws Z ~ sampler.
MseEstimate mse(const BatchMap& a, const BatchMap& b, const Sampler& sampler, Index mc_points, RandomSource& rng);
/// Same on precomputed outputs, row by row.
MseEstimate mse_of_outputs(const Matrix& a, const Matrix& b);

/// |T0^{P->Q0} - T0^{P->Q1}|^2 in L2(P) on the Le Cam instance with masses
/// 1/2 and 1/2 - r on -e, by Monte Carlo.
MseEstimate lecam_map_distance(Index d, double r, Index mc_points, RandomSource& rng);

struct SlopeFit {
  double slope = 0.0;
  double intercept = 0.0;
  double slope_stderr = 0.0;
};

/// OLS of log(mse) on log(n). Needs at least two distinct n.
SlopeFit fit_loglog(const std::vector<double>& n, const std::vector<double>& mse);

struct RawRecord {
  std::string estimator;
  Index n = 0;
  int trial = 0;
  double mse = 0.0;
  double mse_stderr = 0.0;
  double eps = 0.0;
  std::uint64_t seed = 0;
};

struct RateRow {
  Index n = 0;
  double mse_mean = 0.0;
  double mse_std = 0.0;
  int trials = 0;
};

struct EstimatorReport {
  std::string name;
  std::vector<RateRow> rows;
  std::optional<SlopeFit> fit;
};

struct TrialFailure {
  Index n = 0;
  int trial = 0;
  std::string message;
};

struct RateReport {
  ExperimentSpec spec;
  std::vector<RawRecord> raw;
  std::vector<EstimatorReport> estimators;
  std::vector<TrialFailure> failures;

  const EstimatorReport& estimator(const std::string& name) const;
};

inline constexpr const char* kEntropic = "entropic";
inline constexpr const char* kEntropicRounded = "entropic_rounded";
inline constexpr const char* kOneNN = "onenn";

/// Full protocol: for each n and trial generate data, fit the entropic map
/// (consolidated target) and the 1NN map (raw target sample), estimate each
/// MSE against the truth on common fresh points, then aggregate per n and
/// fit slopes. Cells run on independent random streams and are reduced in
/// (n, trial) order, so the report does not depend on the thread count.
RateReport run(const ExperimentSpec& spec);

/// Aggregation and fitting of raw records, exposed for testing.
std::vector<EstimatorReport> aggregate(const std::vector<RawRecord>& raw, const std::vector<std::string>& names);

void write_raw_csv(const RateReport& report, std::ostream& out);
void write_aggregate_csv(const RateReport& report, std::ostream& out);
std::string report_json(const RateReport& report);
/// `n mse_mean mse_std` columns for one estimator, for log-log plots.
void write_gnuplot_data(const EstimatorReport& est, std::ostream& out);

/// Writes raw.csv, aggregate.csv, report.json and <estimator>.dat into dir.
void write_report_files(const RateReport& report, const std::string& dir);

int resolve_thread_count(int requested);

}  // namespace entmap::experiments
