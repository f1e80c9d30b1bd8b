#pragma once

#include <functional>
#include <vector>

namespace heavytail {

struct NelderMeadOptions {
  double initial_step = 0.1;
  /// Stop when every vertex is within x_tol of the best one (max norm)...
  double x_tol = 1e-10;
  /// ...and the objective spread across the simplex is below f_tol.
  double f_tol = 1e-30;
  int max_evaluations = 4000;
  /// Restart from the best vertex this many times after convergence, which
  /// guards against premature simplex collapse.
  int restarts = 1;
};

struct MinimizeResult {
  std::vector<double> x;
  double value = 0.0;
  int evaluations = 0;
  bool converged = false;
};

using Objective = std::function<double(const std::vector<double>&)>;

/// Unconstrained derivative-free simplex search; bounds are handled by the
/// caller through reparameterization.
MinimizeResult nelder_mead(const Objective& f, std::vector<double> x0,
                           const NelderMeadOptions& options = {});

/// Golden-section search for the minimum of a unimodal f on [lo, hi].
MinimizeResult golden_section(const std::function<double(double)>& f, double lo, double hi,
                              double x_tol = 1e-9, int max_iterations = 200);

}  // namespace heavytail
