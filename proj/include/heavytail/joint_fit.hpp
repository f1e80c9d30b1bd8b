#pragma once

#include <Eigen/Dense>
#include <array>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

#include "heavytail/model.hpp"
#include "heavytail/sample_matrix.hpp"

namespace heavytail {

/// f(x) = ln(max(x - c, 1)) and g(x) = ln(max(-x - c, 1)). Both vanish
/// outside their corner, so products of them only see joint extremes.
struct CornerTransforms {
  double threshold = 0.0;

  double f(double x) const;
  double g(double x) const;
  void validate() const;
};

enum class CornerMap { f, g };

/// (1/K) sum h1(x_k) h2(y_k).
double corner_moment(std::span<const double> x, std::span<const double> y, CornerMap h1,
                     CornerMap h2, const CornerTransforms& t);

/// How the corner threshold c is chosen for a pair.
struct ThresholdRule {
  enum class Kind { fixed, quantile };
  Kind kind = Kind::quantile;
  /// c itself for `fixed`; the level q in (0.5, 1) for `quantile`.
  double value = 0.95;

  static ThresholdRule fixed(double c) { return {Kind::fixed, c}; }
  static ThresholdRule quantile(double q) { return {Kind::quantile, q}; }

  void validate() const;
  /// For `quantile`: the largest of |Q(1-q)| and |Q(q)| over both series
  /// (type-1 empirical quantiles).
  double resolve(std::span<const double> x, std::span<const double> y) const;
};

struct JointFitConfig {
  /// Simulated pairs per objective evaluation; drawn once per fit and reused.
  std::size_t sim_draws = 1'000'000;
  ThresholdRule threshold = ThresholdRule::quantile(0.95);
  int max_alternations = 50;
  double rho_tol = 1e-4;
  SeedSpec seed{};
  /// Eigenvalue floor used when repairing assembled matrices.
  double psd_floor = 1e-6;
  /// Worker count for fit_all_pairs; 0 resolves via HEAVYTAIL_THREADS.
  unsigned threads = 0;

  void validate() const;
};

/// Bounds used by the optimizer for every latent correlation.
inline constexpr double kMaxLatentCorr = 0.999;

struct SmmObjective {
  /// Squared residual of E[Y_i Y_j].
  double body = 0.0;
  /// Sum of the four squared corner-moment residuals.
  double tails = 0.0;

  double total() const { return body + tails; }
};

/// Order: body E[XY], then (f,f), (g,g), (f,g), (g,f).
using PairMoments = std::array<double, 5>;

PairMoments empirical_pair_moments(std::span<const double> x, std::span<const double> y,
                                   const CornerTransforms& t);

/// The simulated side of one pair fit. Base normals for the three latent
/// blocks are drawn once; every candidate is evaluated on the same draws
/// (common random numbers), so the objective is deterministic and continuous
/// in the correlations.
class PairMomentProblem {
 public:
  PairMomentProblem(std::span<const double> x, std::span<const double> y,
                    const MarginalParams& marg_x, const MarginalParams& marg_y,
                    const JointFitConfig& cfg);

  double threshold() const { return transforms_.threshold; }
  const PairMoments& data_moments() const { return data_; }
  std::size_t sim_draws() const { return first_.size(); }

  /// All five model moments by brute-force simulation.
  PairMoments model_moments(const PairJointParams& candidate) const;
  SmmObjective objective(const PairJointParams& candidate) const;

  /// Tail term only, restricted to draws where the first member sits in a
  /// corner; equal to objective(candidate).tails.
  double tails_objective(const PairJointParams& candidate) const;

  /// Body term as a function of the body correlation with the tail
  /// correlations frozen. Cheap after prepare_body().
  void prepare_body(double upper_tail_corr, double lower_tail_corr);
  double body_objective(double body_corr) const;

 private:
  double second_member(std::size_t k, double s1, double c1, double s2, double c2, double s3,
                       double c3) const;

  MarginalParams marg_x_, marg_y_;
  CornerTransforms transforms_;
  PairMoments data_{};
  // base normals: block b in {upper, lower, body}, members a (first) and b
  std::array<std::vector<double>, 3> base_a_, base_b_;
  std::vector<double> first_, first_f_, first_g_;
  std::vector<std::size_t> corner_index_;
  double body_fixed_ = 0.0, body_a_ = 0.0, body_b_ = 0.0;
};

struct PairData {
  std::span<const double> x;
  std::span<const double> y;
  MarginalParams marg_x;
  MarginalParams marg_y;
};

SmmObjective smm_objective(const PairJointParams& candidate, const PairData& data,
                           const JointFitConfig& cfg);

struct JointFitResult {
  PairJointParams params;
  double objective_body = 0.0;
  double objective_tails = 0.0;
  bool converged = false;
  int alternations = 0;
  double threshold = 0.0;
};

/// Alternates a golden-section search on the body correlation (body term)
/// with a simplex search on the two tail correlations (tail term). The pair
/// is put into a canonical order first, so fit_pair(x, y) == fit_pair(y, x).
JointFitResult fit_pair(std::span<const double> x, std::span<const double> y,
                        const MarginalParams& marg_x, const MarginalParams& marg_y,
                        const JointFitConfig& cfg = {});

/// Floors eigenvalues at `floor`, reconstructs, and rescales to a unit
/// diagonal; repeats with a larger clip until the smallest eigenvalue of the
/// result is at least `floor`. Inputs already satisfying that are returned
/// unchanged.
Eigen::MatrixXd repair_psd(const Eigen::MatrixXd& m, double floor = 1e-6);

struct CorrelationAssembly {
  Eigen::MatrixXd upper_tail_corr;
  Eigen::MatrixXd lower_tail_corr;
  Eigen::MatrixXd body_corr;
  /// Indexed upper, lower, body.
  std::array<bool, 3> repaired{};
  std::array<double, 3> min_eig_before{};
  std::array<double, 3> min_eig_after{};
  /// (i, j, result) for every i < j in lexicographic order.
  struct PairEntry {
    std::size_t i, j;
    JointFitResult result;
  };
  std::vector<PairEntry> pairs;
  std::vector<std::string> warnings;
};

/// Assembles three matrices from per-pair estimates and repairs each one.
CorrelationAssembly assemble_correlations(std::size_t n,
                                          std::vector<CorrelationAssembly::PairEntry> pairs,
                                          double psd_floor);

/// Fits every pair (stream id = pair index) and assembles the result.
CorrelationAssembly fit_all_pairs(const SampleMatrix& data,
                                  const std::vector<MarginalParams>& marginals,
                                  const JointFitConfig& cfg = {});

void write_matrix_csv(std::ostream& out, const Eigen::MatrixXd& m,
                      const std::vector<std::string>& labels);
/// Columns matrix, repaired, min_eig_before, min_eig_after.
void write_repair_report(std::ostream& out, const CorrelationAssembly& assembly);

double pearson_correlation(std::span<const double> x, std::span<const double> y);

}  // namespace heavytail
