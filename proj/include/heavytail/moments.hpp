#pragma once

#include <array>
#include <cstddef>
#include <iosfwd>
#include <span>
#include <vector>

#include "heavytail/model.hpp"

namespace heavytail {

/// Raw moments E[Y], E[Y^2], E[Y^3], E[Y^4].
struct MomentVector {
  std::array<double, 4> raw{};

  /// order in 1..4
  double operator[](int order) const { return raw[static_cast<std::size_t>(order - 1)]; }
  double& operator[](int order) { return raw[static_cast<std::size_t>(order - 1)]; }
};

/// Exact E[Y^order] for the Gaussian-latent marginal, order in 1..4.
double moment_closed_form(const MarginalParams& p, int order);
MomentVector closed_form_moments(const MarginalParams& p);

/// Right-tail asymptote of P(Y > t) for a lognormal component exp(w Z):
/// w / (sqrt(2 pi) ln t) * exp(-(ln t)^2 / (2 w^2)). Requires t > 1, w > 0.
double asymptote_lognormal_tail(double t, double weight);

/// The same asymptote written as phi(x) / x with x = ln(t) / w, i.e. the
/// normal Mills-ratio approximation applied to P(Z > ln t / w).
double asymptote_lognormal_tail_mills(double t, double weight);

/// t^(-rate); t > 0, rate > 0.
double asymptote_power_tail(double t, double rate);

enum class TailSide { lower, upper };

struct TailRatioRow {
  double t = 0.0;
  double p_hat = 0.0;
  double asymptote = 0.0;
  double ratio = 0.0;
  std::size_t exceedances = 0;
  double ci_low = 0.0;
  double ci_high = 0.0;
  /// Fewer than 100 exceedances or Wilson 95% half-width above 20% of p_hat.
  bool flagged = false;
};

/// Wilson score interval for a binomial proportion.
std::array<double, 2> wilson_interval(std::size_t successes, std::size_t trials, double z = 1.959963984540054);

/// Compares the empirical survival of `sample` with the lognormal asymptote
/// of weight `weight`. Upper side uses P(Y > t); lower side uses P(Y < -t).
std::vector<TailRatioRow> tail_ratio_from_sample(std::span<const double> sample,
                                                 std::span<const double> t_grid, double weight,
                                                 TailSide side);

/// Simulates K draws of the marginal and probes the right tail (weight u) or
/// the left tail (weight v).
std::vector<TailRatioRow> tail_ratio_probe(const MarginalParams& p,
                                           std::span<const double> t_grid, std::size_t count,
                                           SeedSpec seed, TailSide side = TailSide::upper);

/// Columns t, p_hat, asymptote, ratio, flagged.
void write_tail_ratio_csv(std::ostream& out, std::span<const TailRatioRow> rows);

}  // namespace heavytail
