#pragma once

#include <span>
#include <vector>

#include "heavytail/model.hpp"
#include "heavytail/moments.hpp"

namespace heavytail {

/// Raw sample moments (1/K) sum y^i, i = 1..4, no bias correction.
MomentVector sample_moments(std::span<const double> y);

struct MarginalFitConfig {
  int max_outer_iters = 200;
  /// Absolute per-block objective improvement below which a sweep counts as
  /// stalled.
  double block_tol = 1e-10;
  double right_tail_max = 3.0;
  double left_tail_max = 3.0;
  double scale_max = 1e3;
  /// Extra starts of stage 1 with (u0, v0) drawn uniformly in [0, 1]^2.
  int restarts = 0;
  /// Divide the third/fourth moment residuals by max(1, |m_i|). Off by
  /// default, so the blocks minimize raw squared residuals.
  bool scale_high_moments = false;

  void validate() const;
};

struct MarginalFitResult {
  MarginalParams params;
  /// E[Y^i] - m_i at the returned parameters, in the original data frame.
  MomentVector residuals;
  bool converged = false;
  int iterations = 0;
  /// Sum of both block objectives after every completed sweep, stage 1 then
  /// stage 2.
  std::vector<double> objective_trace;
  /// Index in objective_trace where stage 2 starts.
  std::size_t stage_two_offset = 0;
};

/// Two-stage moment matching: center the data at its sample mean, alternate
/// the (location, scale) block against moments 1-2 and the (right, left
/// tail) block against moments 3-4; then subtract the stage-1 location and
/// solve again from the stage-1 estimate. Requires at least 100 finite
/// observations.
MarginalFitResult fit_marginal(std::span<const double> y, const MarginalFitConfig& cfg = {},
                               SeedSpec seed = {});

/// One alternating run on precomputed moments (exposed for tests).
MarginalFitResult fit_marginal_moments(const MomentVector& m, const MarginalParams& start,
                                       const MarginalFitConfig& cfg);

}  // namespace heavytail
