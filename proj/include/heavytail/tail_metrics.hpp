#pragma once

#include <iosfwd>
#include <span>
#include <string>
#include <vector>

#include "heavytail/model.hpp"
#include "heavytail/moments.hpp"

namespace heavytail {

/// 1-based ordinal ranks; ties broken by original index.
std::vector<std::size_t> ordinal_ranks(std::span<const double> values);

struct TailCurve {
  TailSide side = TailSide::lower;
  std::vector<double> taus;
  std::vector<double> lambdas;
};

/// Pre-limit tail dependence proxy. With m = ceil(tau K) and rank-based
/// marginal quantiles, lower: #{r_x <= m and r_y <= m} / m; upper mirrors the
/// ranks. Requires min(tau) * K >= 50.
TailCurve tail_proxy(std::span<const double> x, std::span<const double> y,
                     std::span<const double> taus, TailSide side);

/// `count` log-spaced levels in [lo, hi].
std::vector<double> log_spaced_taus(double lo = 0.001, double hi = 0.1, std::size_t count = 25);

enum class QuantileSource { empirical, model };

struct JointQuantileResult {
  double tau = 0.0;
  double tau_star = 0.0;
  TailSide side = TailSide::lower;
  QuantileSource source = QuantileSource::empirical;
};

/// Solves the joint tau-quantile equation on one bivariate sample. Ranks are
/// computed once, so repeated solves on the same data are cheap.
class JointQuantileSolver {
 public:
  JointQuantileSolver(std::span<const double> x, std::span<const double> y);

  std::size_t size() const { return size_; }

  /// Lower: smallest tau* with P(X <= q_X(tau*), Y <= q_Y(tau*)) >= tau.
  /// Upper: largest tau* with P(X >= q_X(tau*), Y >= q_Y(tau*)) >= 1 - tau.
  /// Requires tau in (0, 1] and tau K >= 20 (lower), (1 - tau) K >= 20
  /// (upper).
  JointQuantileResult solve(double tau, TailSide side,
                            QuantileSource source = QuantileSource::empirical) const;

 private:
  std::size_t size_;
  // cumulative[m] = #{k : max(r_x, r_y) <= m}, m = 0..K (and mirrored ranks)
  std::vector<std::size_t> lower_cumulative_;
  std::vector<std::size_t> upper_cumulative_;
};

JointQuantileResult joint_quantile_empirical(std::span<const double> x,
                                             std::span<const double> y, double tau,
                                             TailSide side);

/// Pair restriction of the full model.
struct PairModel {
  MarginalParams first;
  MarginalParams second;
  PairJointParams joint;

  ModelSpec to_spec() const { return ModelSpec::pair(first, second, joint); }
};

JointQuantileResult joint_quantile_model(const PairModel& model, double tau, TailSide side,
                                         std::size_t sim_draws, SeedSpec seed);

/// The ten levels {0.01..0.05} and {0.95..0.99}. Levels below 0.5 are scored
/// on the lower side, the rest on the upper side.
std::vector<double> default_discrepancy_taus();

TailSide side_for_tau(double tau);

struct DiscrepancyRow {
  double tau = 0.0;
  double tau_star_model = 0.0;
  double tau_star_data = 0.0;
};

struct DiscrepancyReport {
  std::string label;
  std::vector<DiscrepancyRow> rows;
  /// sum over rows of (tau*_model - tau*_data)^2
  double value = 0.0;
};

/// D between a data sample and any simulated sample of the candidate law.
DiscrepancyReport discrepancy_between_samples(std::span<const double> data_x,
                                              std::span<const double> data_y,
                                              std::span<const double> sim_x,
                                              std::span<const double> sim_y,
                                              std::span<const double> taus,
                                              std::string label = {});

/// D for a fitted pair model; the model side is simulated with sim_draws.
DiscrepancyReport discrepancy(std::span<const double> x, std::span<const double> y,
                              const PairModel& fitted, std::span<const double> taus,
                              std::size_t sim_draws, SeedSpec seed, std::string label = {});

/// Columns tau, lambda.
void write_tail_curve_csv(std::ostream& out, const TailCurve& curve);
/// Columns tau, side, tau_star_model, tau_star_data; last line D.
void write_discrepancy_csv(std::ostream& out, const DiscrepancyReport& report);

}  // namespace heavytail
