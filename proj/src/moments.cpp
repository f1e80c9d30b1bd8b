#include "heavytail/moments.hpp"

#include <cmath>
#include <numbers>
#include <ostream>
#include <string>

#include "heavytail/errors.hpp"

namespace heavytail {

double moment_closed_form(const MarginalParams& p, int order) {
  if (order < 1 || order > 4) {
    throw InvalidParameter("moment order must be in 1..4, got " + std::to_string(order));
  }
  p.validate();
  const double mu = p.location;
  const double s2 = p.scale * p.scale;
  const double u2 = p.right_tail * p.right_tail;
  const double v2 = p.left_tail * p.left_tail;

  // E[exp(k u Z)] = exp(k^2 u^2 / 2)
  const double a1 = std::exp(0.5 * u2), a2 = std::exp(2.0 * u2), a3 = std::exp(4.5 * u2),
               a4 = std::exp(8.0 * u2);
  const double b1 = std::exp(0.5 * v2), b2 = std::exp(2.0 * v2), b3 = std::exp(4.5 * v2),
               b4 = std::exp(8.0 * v2);

  // D = exp(uZ1) - exp(vZ2)
  const double d1 = a1 - b1;
  const double d2 = a2 - 2.0 * a1 * b1 + b2;
  const double d3 = a3 - 3.0 * a2 * b1 + 3.0 * a1 * b2 - b3;
  const double d4 = a4 - 4.0 * a3 * b1 + 6.0 * a2 * b2 - 4.0 * a1 * b3 + b4;

  // W = mu + sigma Z3
  const double w1 = mu;
  const double w2 = mu * mu + s2;
  const double w3 = mu * mu * mu + 3.0 * mu * s2;
  const double w4 = mu * mu * mu * mu + 6.0 * mu * mu * s2 + 3.0 * s2 * s2;

  switch (order) {
    case 1:
      return w1 + d1;
    case 2:
      return w2 + 2.0 * w1 * d1 + d2;
    case 3:
      return w3 + 3.0 * w2 * d1 + 3.0 * w1 * d2 + d3;
    default:
      return w4 + 4.0 * w3 * d1 + 6.0 * w2 * d2 + 4.0 * w1 * d3 + d4;
  }
}

MomentVector closed_form_moments(const MarginalParams& p) {
  MomentVector out;
  for (int i = 1; i <= 4; ++i) out[i] = moment_closed_form(p, i);
  return out;
}

namespace {

void check_lognormal_args(double t, double weight) {
  if (!(t > 1.0)) throw InvalidParameter("lognormal tail asymptote needs t > 1");
  if (!(weight > 0.0)) throw InvalidParameter("lognormal tail asymptote needs weight > 0");
}

}  // namespace

double asymptote_lognormal_tail(double t, double weight) {
  check_lognormal_args(t, weight);
  const double log_t = std::log(t);
  return weight / (std::sqrt(2.0 * std::numbers::pi) * log_t) *
         std::exp(-(log_t * log_t) / (2.0 * weight * weight));
}

double asymptote_lognormal_tail_mills(double t, double weight) {
  check_lognormal_args(t, weight);
  const double x = std::log(t) / weight;
  return normal_density(x) / x;
}

double asymptote_power_tail(double t, double rate) {
  if (!(t > 0.0)) throw InvalidParameter("power tail asymptote needs t > 0");
  if (!(rate > 0.0)) throw InvalidParameter("power tail asymptote needs rate > 0");
  return std::pow(t, -rate);
}

std::array<double, 2> wilson_interval(std::size_t successes, std::size_t trials, double z) {
  if (trials == 0) throw InvalidParameter("wilson_interval: zero trials");
  const double n = static_cast<double>(trials);
  const double p = static_cast<double>(successes) / n;
  const double z2 = z * z;
  const double denom = 1.0 + z2 / n;
  const double center = (p + z2 / (2.0 * n)) / denom;
  const double half = z / denom * std::sqrt(p * (1.0 - p) / n + z2 / (4.0 * n * n));
  // the closed form leaves rounding residue at the boundary counts
  const double low = successes == 0 ? 0.0 : std::max(0.0, center - half);
  const double high = successes == trials ? 1.0 : std::min(1.0, center + half);
  return {low, high};
}

std::vector<TailRatioRow> tail_ratio_from_sample(std::span<const double> sample,
                                                 std::span<const double> t_grid, double weight,
                                                 TailSide side) {
  if (sample.empty()) throw DataError("tail ratio probe: empty sample");
  if (!(weight > 0.0)) {
    throw InvalidParameter("tail ratio probe needs a positive tail weight (no lognormal tail)");
  }
  for (std::size_t i = 0; i < t_grid.size(); ++i) {
    if (!(t_grid[i] > 1.0)) throw InvalidParameter("tail ratio probe: every t must exceed 1");
    if (i && !(t_grid[i] > t_grid[i - 1])) {
      throw InvalidParameter("tail ratio probe: t grid must be increasing");
    }
  }
  std::vector<TailRatioRow> rows;
  rows.reserve(t_grid.size());
  for (double t : t_grid) {
    std::size_t hits = 0;
    if (side == TailSide::upper) {
      for (double y : sample) hits += y > t;
    } else {
      for (double y : sample) hits += y < -t;
    }
    TailRatioRow row;
    row.t = t;
    row.exceedances = hits;
    row.p_hat = static_cast<double>(hits) / static_cast<double>(sample.size());
    row.asymptote = asymptote_lognormal_tail(t, weight);
    row.ratio = row.p_hat / row.asymptote;
    const auto ci = wilson_interval(hits, sample.size());
    row.ci_low = ci[0];
    row.ci_high = ci[1];
    const double half_width = 0.5 * (ci[1] - ci[0]);
    row.flagged = hits < 100 || half_width > 0.2 * row.p_hat;
    rows.push_back(row);
  }
  return rows;
}

std::vector<TailRatioRow> tail_ratio_probe(const MarginalParams& p,
                                           std::span<const double> t_grid, std::size_t count,
                                           SeedSpec seed, TailSide side) {
  const double weight = side == TailSide::upper ? p.right_tail : p.left_tail;
  if (!(weight > 0.0)) {
    throw InvalidParameter("tail ratio probe needs a positive tail weight (no lognormal tail)");
  }
  const auto draws = sample_univariate(p, count, seed);
  return tail_ratio_from_sample(draws.values, t_grid, weight, side);
}

void write_tail_ratio_csv(std::ostream& out, std::span<const TailRatioRow> rows) {
  out << "t,p_hat,asymptote,ratio,flagged\n";
  for (const auto& row : rows) {
    out << format_real(row.t) << ',' << format_real(row.p_hat) << ','
        << format_real(row.asymptote) << ',' << format_real(row.ratio) << ','
        << (row.flagged ? 1 : 0) << '\n';
  }
}

}  // namespace heavytail
