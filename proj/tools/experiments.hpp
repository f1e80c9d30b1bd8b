#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "heavytail/copula.hpp"
#include "heavytail/joint_fit.hpp"
#include "heavytail/marginal_fit.hpp"
#include "heavytail/sample_matrix.hpp"
#include "heavytail/tail_metrics.hpp"
#include "run_config.hpp"

namespace heavytail::cli {

// Drivers behind the subcommands. They compute results only; files are
// written by the command layer.

struct FitReport {
  std::vector<std::string> labels;
  std::vector<MarginalFitResult> marginals;
  /// Present when the data has at least two columns.
  std::optional<CorrelationAssembly> joint;

  bool all_converged() const;
  /// Fitted marginals with the assembled (repaired) matrices.
  ModelSpec fitted_model() const;
  /// Pair restriction of the fitted model.
  PairModel pair_model(std::size_t i, std::size_t j) const;
};

FitReport run_fit(const SampleMatrix& data, const MarginalFitConfig& marginal_cfg,
                  JointFitConfig joint_cfg, std::uint64_t seed, unsigned threads);

struct ConvergenceTrial {
  int power = 0;
  std::size_t size = 0;
  int trial = 0;
  double marginal_error = 0.0;
  double all_error = 0.0;
  bool converged = false;
};

struct ConvergenceRow {
  int power = 0;
  std::size_t size = 0;
  double marginal_error = 0.0;
  double all_error = 0.0;
  int trials = 0;
  int nonconverged = 0;
};

struct ConvergenceReport {
  /// One row per power, in the configured order.
  std::vector<ConvergenceRow> rows;
  std::vector<ConvergenceTrial> trials;
  /// True two-dimensional model of every trial.
  std::vector<ModelSpec> truths;

  bool all_converged() const;
};

/// Random pair model for one trial; every parameter uniform in its range.
ModelSpec draw_trial_model(const ParamRanges& ranges, SeedSpec seed);

/// Recovery experiment: each trial draws a true pair model and one data set
/// of the largest size; smaller sizes use its leading rows. Errors are L2
/// norms over the eight marginal parameters and over all eleven parameters.
ConvergenceReport run_convergence(const ConvergenceSettings& settings,
                                  const MarginalFitConfig& marginal_cfg,
                                  const JointFitConfig& joint_cfg, std::uint64_t seed,
                                  unsigned threads);

struct TaildepPoint {
  double value = 0.0;
  double correlation = 0.0;
  TailCurve lower;
  TailCurve upper;
};

struct TaildepReport {
  std::string parameter;
  std::vector<TaildepPoint> points;
};

/// Copy of `base` with one named parameter replaced. Throws ConfigError for
/// an unknown name.
ModelSpec apply_parameter(ModelSpec base, const std::string& name, double value);

/// Every swept value reuses the same random stream, so differences between
/// curves reflect the parameter rather than sampling noise.
TaildepReport run_taildep(const TaildepSettings& settings, std::uint64_t seed, unsigned threads);

struct PairBenchmark {
  std::size_t i = 0;
  std::size_t j = 0;
  std::vector<BenchmarkRow> rows;
};

struct DiscrepancyTable {
  FitReport fit;
  std::vector<PairBenchmark> pairs;
};

DiscrepancyTable run_discrepancy(const SampleMatrix& data, const DiscrepancySettings& settings,
                                 const MarginalFitConfig& marginal_cfg,
                                 JointFitConfig joint_cfg, std::uint64_t seed,
                                 unsigned threads);

}  // namespace heavytail::cli
