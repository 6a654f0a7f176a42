#pragma once

// Seeded Monte Carlo harness. Each experiment runs a grid of (n, p) cells;
// replication r of every cell draws its data from stream_seed(seed, r), so
// cells share random numbers and reruns are byte-identical.

#include <cstddef>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "mtp2/mmle.hpp"
#include "mtp2/models.hpp"
#include "mtp2/sampling.hpp"

namespace mtp2 {

enum class ExperimentKind { kRate, kDiagAdaptation, kSpectral, kMisspec, kDiagMinimax, kDeviation };

std::string to_string(ExperimentKind kind);
/// Accepts rate, diag_adaptation, spectral, misspec, diag_minimax, deviation.
ExperimentKind parse_experiment_kind(std::string_view name);

/// Whether the model spec describes Theta* or Sigma*.
enum class ModelSide { kPrecision, kCovariance };

struct Cell {
  std::size_t n = 0;
  std::size_t p = 0;
  friend bool operator==(const Cell&, const Cell&) = default;
};

struct ExperimentConfig {
  ExperimentKind kind = ExperimentKind::kRate;
  std::vector<Cell> cells;
  /// A spec of dimension 0 is resized to each cell; a smaller one is padded
  /// with an identity block.
  ModelSpec model = DiagonalSpec{};
  ModelSide side = ModelSide::kPrecision;
  std::size_t replications = 20;
  Seed seed = 0;
  SolverConfig solver;
  /// Deviation threshold exponent.
  double t = 4.0;
  /// Scalings for the diagonal risk check; empty selects {1, sqrt(n/(n-2))}.
  std::vector<double> c_values;
  /// Worker threads per cell; 0 selects the hardware concurrency.
  unsigned threads = 0;

  void validate() const;
};

ExperimentConfig parse_experiment_config(std::string_view json);
std::string experiment_config_to_json(const ExperimentConfig& config);

/// Covariance and precision of the ground truth at dimension p.
struct GroundTruth {
  SymmetricMatrix sigma;
  SymmetricMatrix theta;
};
GroundTruth ground_truth(const ExperimentConfig& config, std::size_t p);

struct StatSummary {
  std::string name;
  double mean = 0.0;
  double sd = 0.0;
  double q05 = 0.0;
  double q50 = 0.0;
  double q95 = 0.0;
  double min = 0.0;
  double max = 0.0;
};

struct ReplicationRecord {
  std::size_t rep = 0;
  Seed seed = 0;
  bool ok = false;
  /// Empty unless the replication threw.
  std::string error;
  /// Parallel to ExperimentReport::stat_names; empty on failure.
  std::vector<double> values;
};

struct CellSummary {
  Cell cell;
  std::size_t replications = 0;
  std::size_t successes = 0;
  /// Fraction of replications whose solve passed the KKT certificate; 1 for
  /// kinds that do not solve.
  double kkt_pass_rate = 0.0;
  std::vector<StatSummary> stats;
  std::vector<ReplicationRecord> records;
  /// Kind-specific cell constants (closed forms, thresholds), in a fixed order.
  std::vector<std::pair<std::string, double>> extras;
  double wall_seconds = 0.0;

  double extra(std::string_view name) const;

  const StatSummary& stat(std::string_view name) const;
  /// Per-replication values of a statistic over the successful replications.
  std::vector<double> values(std::string_view name) const;
};

/// Least-squares line through (log n, log loss).
struct RateFit {
  double slope = 0.0;
  double intercept = 0.0;
  double rss = 0.0;
  std::size_t points = 0;
};

/// Throws InvalidArgument with fewer than 3 points or nonpositive values.
RateFit fit_rate(const std::vector<double>& n, const std::vector<double>& loss);

struct CheckResult {
  std::string name;
  bool passed = false;
  /// Invariant checks are exact properties whose failure makes the run fail;
  /// the others are statistical expectations and are only reported.
  bool invariant = false;
  std::string detail;
};

struct ExperimentReport {
  ExperimentKind kind = ExperimentKind::kRate;
  std::vector<std::string> stat_names;
  std::vector<CellSummary> cells;
  std::optional<RateFit> fit;
  std::vector<CheckResult> checks;

  bool invariants_hold() const;
  const CheckResult* check(std::string_view name) const;
};

ExperimentReport run_experiment(const ExperimentConfig& config);

// Kind-specific entry points; each requires config.kind to match.
ExperimentReport run_rate_experiment(const ExperimentConfig& config);
ExperimentReport run_diag_adaptation_experiment(const ExperimentConfig& config);
ExperimentReport run_spectral_experiment(const ExperimentConfig& config);
ExperimentReport run_misspec_experiment(const ExperimentConfig& config);
ExperimentReport run_diag_minimax_check(const ExperimentConfig& config);
ExperimentReport run_deviation_experiment(const ExperimentConfig& config);

/// Closed-form risk 1/2 [(1/c) n/(n-2) + c - 2] of c D_S under the symmetrized Stein loss.
double diag_minimax_risk(double c, double n);

/// Linear-interpolation quantile (type 7); `v` need not be sorted.
double quantile(std::vector<double> v, double q);

/// Writes cells.csv, replications.csv and summary.json (deterministic) plus
/// timing.json (wall clock) into `dir`, creating it if needed.
void write_report(const ExperimentReport& report, const ExperimentConfig& config, const std::filesystem::path& dir);

std::string cells_csv(const ExperimentReport& report);
std::string replications_csv(const ExperimentReport& report);
std::string summary_json(const ExperimentReport& report, const ExperimentConfig& config);

}  // namespace mtp2
