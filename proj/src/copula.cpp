#include "heavytail/copula.hpp"

#include <algorithm>
#include <boost/math/distributions/students_t.hpp>
#include <boost/math/special_functions/gamma.hpp>
#include <cmath>
#include <numbers>
#include <numeric>

#include "heavytail/errors.hpp"
#include "heavytail/optimize.hpp"
#include "heavytail/parallel.hpp"

namespace heavytail {

std::string to_string(CopulaFamily family) {
  switch (family) {
    case CopulaFamily::normal:
      return "normal";
    case CopulaFamily::student_t:
      return "student_t";
    case CopulaFamily::clayton:
      return "clayton";
    case CopulaFamily::gumbel:
      return "gumbel";
  }
  return "unknown";
}

std::optional<CopulaFamily> parse_copula_family(const std::string& name) {
  if (name == "normal") return CopulaFamily::normal;
  if (name == "student_t" || name == "t") return CopulaFamily::student_t;
  if (name == "clayton") return CopulaFamily::clayton;
  if (name == "gumbel") return CopulaFamily::gumbel;
  return std::nullopt;
}

void CopulaSpec::validate() const {
  switch (family) {
    case CopulaFamily::normal:
      if (!(rho > -1.0 && rho < 1.0)) throw InvalidParameter("normal copula needs rho in (-1, 1)");
      break;
    case CopulaFamily::student_t:
      if (!(rho > -1.0 && rho < 1.0)) throw InvalidParameter("t copula needs rho in (-1, 1)");
      if (!(dof > 2.0) || !std::isfinite(dof)) throw InvalidParameter("t copula needs dof > 2");
      break;
    case CopulaFamily::clayton:
      if (!(theta > 0.0) || !std::isfinite(theta)) throw InvalidParameter("clayton needs theta > 0");
      break;
    case CopulaFamily::gumbel:
      if (!(theta >= 1.0) || !std::isfinite(theta)) throw InvalidParameter("gumbel needs theta >= 1");
      break;
  }
}

EmpiricalMarginal::EmpiricalMarginal(std::span<const double> sample)
    : sorted_(sample.begin(), sample.end()) {
  if (sorted_.empty()) throw DataError("empirical marginal needs a non-empty sample");
  std::sort(sorted_.begin(), sorted_.end());
}

double EmpiricalMarginal::cdf(double x) const {
  const auto it = std::upper_bound(sorted_.begin(), sorted_.end(), x);
  return static_cast<double>(it - sorted_.begin()) / static_cast<double>(sorted_.size());
}

double EmpiricalMarginal::quantile(double p) const {
  if (!(p >= 0.0 && p <= 1.0)) throw InvalidParameter("quantile level outside [0, 1]");
  const auto k = static_cast<std::size_t>(
      std::ceil(p * static_cast<double>(sorted_.size()) - 1e-12));
  return sorted_[std::clamp<std::size_t>(k, 1, sorted_.size()) - 1];
}

namespace {

// Pairs of equal keys in a sorted run-length sense: sum t (t - 1) / 2.
template <typename Equal>
double tied_pairs(std::size_t n, Equal equal) {
  double ties = 0.0;
  std::size_t run = 1;
  for (std::size_t i = 1; i <= n; ++i) {
    if (i < n && equal(i - 1, i)) {
      ++run;
    } else {
      ties += 0.5 * static_cast<double>(run) * static_cast<double>(run - 1);
      run = 1;
    }
  }
  return ties;
}

// Stable merge sort on values, returning the number of inversions.
double count_swaps(std::vector<double>& values, std::vector<double>& scratch, std::size_t lo,
                   std::size_t hi) {
  if (hi - lo < 2) return 0.0;
  const std::size_t mid = lo + (hi - lo) / 2;
  double swaps = count_swaps(values, scratch, lo, mid) + count_swaps(values, scratch, mid, hi);
  std::size_t i = lo, j = mid, out = lo;
  while (i < mid && j < hi) {
    if (values[j] < values[i]) {
      swaps += static_cast<double>(mid - i);
      scratch[out++] = values[j++];
    } else {
      scratch[out++] = values[i++];
    }
  }
  while (i < mid) scratch[out++] = values[i++];
  while (j < hi) scratch[out++] = values[j++];
  std::copy(scratch.begin() + static_cast<std::ptrdiff_t>(lo),
            scratch.begin() + static_cast<std::ptrdiff_t>(hi),
            values.begin() + static_cast<std::ptrdiff_t>(lo));
  return swaps;
}

}  // namespace

double kendall_tau(std::span<const double> x, std::span<const double> y) {
  if (x.size() != y.size()) throw DataError("kendall_tau: series differ in length");
  const std::size_t n = x.size();
  if (n < 2) throw DataError("kendall_tau: need at least two observations");
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return x[a] < x[b] || (x[a] == x[b] && y[a] < y[b]);
  });
  std::vector<double> xs(n), ys(n);
  for (std::size_t i = 0; i < n; ++i) {
    xs[i] = x[order[i]];
    ys[i] = y[order[i]];
  }
  const double ties_x = tied_pairs(n, [&](std::size_t a, std::size_t b) { return xs[a] == xs[b]; });
  const double ties_xy = tied_pairs(
      n, [&](std::size_t a, std::size_t b) { return xs[a] == xs[b] && ys[a] == ys[b]; });
  std::vector<double> scratch(n);
  const double swaps = count_swaps(ys, scratch, 0, n);
  const double ties_y = tied_pairs(n, [&](std::size_t a, std::size_t b) { return ys[a] == ys[b]; });
  const double total = 0.5 * static_cast<double>(n) * static_cast<double>(n - 1);
  const double denom = std::sqrt((total - ties_x) * (total - ties_y));
  if (denom == 0.0) return 0.0;
  return (total - ties_x - ties_y + ties_xy - 2.0 * swaps) / denom;
}

double student_t_copula_log_density(double u1, double u2, double rho, double dof) {
  const boost::math::students_t_distribution<double> t(dof);
  const double x1 = boost::math::quantile(t, u1);
  const double x2 = boost::math::quantile(t, u2);
  const double one_minus = 1.0 - rho * rho;
  const double q = (x1 * x1 - 2.0 * rho * x1 * x2 + x2 * x2) / (dof * one_minus);
  const double log_joint = boost::math::lgamma(0.5 * (dof + 2.0)) - boost::math::lgamma(0.5 * dof) -
                           std::log(dof * std::numbers::pi) - 0.5 * std::log(one_minus) -
                           0.5 * (dof + 2.0) * std::log1p(q);
  auto log_marginal = [&](double x) {
    return boost::math::lgamma(0.5 * (dof + 1.0)) - boost::math::lgamma(0.5 * dof) -
           0.5 * std::log(dof * std::numbers::pi) - 0.5 * (dof + 1.0) * std::log1p(x * x / dof);
  };
  return log_joint - log_marginal(x1) - log_marginal(x2);
}

CopulaFit fit_copula(std::span<const double> x, std::span<const double> y, CopulaFamily family,
                     const CopulaFitOptions& options) {
  if (x.size() != y.size()) throw DataError("fit_copula: series differ in length");
  if (x.size() < 100) throw DataError("fit_copula needs at least 100 observations");
  CopulaFit fit;
  fit.kendall_tau = kendall_tau(x, y);
  const double tau = fit.kendall_tau;
  fit.spec.family = family;
  switch (family) {
    case CopulaFamily::normal:
    case CopulaFamily::student_t: {
      fit.spec.rho = std::clamp(std::sin(0.5 * std::numbers::pi * tau), -options.rho_max,
                                options.rho_max);
      if (family == CopulaFamily::normal) break;
      // Profile pseudo-likelihood over log(dof) on a strided rank subsample.
      const std::size_t k = x.size();
      const std::size_t points = std::min(k, options.pseudo_likelihood_points);
      const auto rx = ordinal_ranks(x);
      const auto ry = ordinal_ranks(y);
      std::vector<std::pair<double, double>> uv;
      uv.reserve(points);
      for (std::size_t i = 0; i < points; ++i) {
        const std::size_t idx = i * k / points;
        uv.emplace_back(static_cast<double>(rx[idx]) / static_cast<double>(k + 1),
                        static_cast<double>(ry[idx]) / static_cast<double>(k + 1));
      }
      const double rho = fit.spec.rho;
      auto negative_loglik = [&](double log_dof) {
        const double dof = std::exp(log_dof);
        double total = 0.0;
        for (const auto& [u1, u2] : uv) total += student_t_copula_log_density(u1, u2, rho, dof);
        return -total;
      };
      const double lo = std::log(options.dof_min), hi = std::log(options.dof_max);
      // coarse grid, then golden-section around the best grid point
      constexpr int kGrid = 12;
      int best = 0;
      double best_value = std::numeric_limits<double>::infinity();
      for (int g = 0; g <= kGrid; ++g) {
        const double value = negative_loglik(lo + (hi - lo) * g / kGrid);
        if (value < best_value) {
          best_value = value;
          best = g;
        }
      }
      const double step = (hi - lo) / kGrid;
      const auto refined = golden_section(negative_loglik, std::max(lo, lo + (best - 1) * step),
                                          std::min(hi, lo + (best + 1) * step), 1e-4);
      fit.spec.dof = std::exp(refined.x[0]);
      break;
    }
    case CopulaFamily::clayton:
      if (tau <= 0.0) {
        fit.warnings.push_back("clayton: non-positive Kendall tau, using the independence boundary");
        fit.spec.theta = options.clayton_theta_min;
      } else {
        fit.spec.theta = tau >= 1.0 ? options.clayton_theta_max
                                    : std::clamp(2.0 * tau / (1.0 - tau), options.clayton_theta_min,
                                                 options.clayton_theta_max);
      }
      break;
    case CopulaFamily::gumbel:
      if (tau <= 0.0) {
        fit.warnings.push_back("gumbel: non-positive Kendall tau, using the independence boundary");
        fit.spec.theta = 1.0;
      } else {
        fit.spec.theta = tau >= 1.0 ? options.gumbel_theta_max
                                    : std::clamp(1.0 / (1.0 - tau), 1.0, options.gumbel_theta_max);
      }
      break;
  }
  return fit;
}

namespace {

// Positive stable variate with Laplace transform exp(-s^alpha), 0 < alpha < 1
// (Kanter's representation).
double draw_positive_stable(Philox4x32& gen, double alpha) {
  const double u = std::numbers::pi * gen.uniform();
  const double w = draw_exponential(gen, 1.0);
  return std::sin(alpha * u) / std::pow(std::sin(u), 1.0 / alpha) *
         std::pow(std::sin((1.0 - alpha) * u) / w, (1.0 - alpha) / alpha);
}

}  // namespace

NormalPair sample_copula_uniforms(const CopulaSpec& spec, std::size_t count, SeedSpec seed) {
  spec.validate();
  if (count == 0) throw InvalidParameter("sample size must be at least 1");
  Philox4x32 gen(seed);
  NormalPair out{std::vector<double>(count), std::vector<double>(count)};
  switch (spec.family) {
    case CopulaFamily::normal: {
      const double c = std::sqrt(1.0 - spec.rho * spec.rho);
      for (std::size_t k = 0; k < count; ++k) {
        const double a = draw_normal(gen), b = draw_normal(gen);
        out.first[k] = normal_cdf(a);
        out.second[k] = normal_cdf(spec.rho * a + c * b);
      }
      break;
    }
    case CopulaFamily::student_t: {
      const double c = std::sqrt(1.0 - spec.rho * spec.rho);
      const boost::math::students_t_distribution<double> t(spec.dof);
      for (std::size_t k = 0; k < count; ++k) {
        const double a = draw_normal(gen), b = draw_normal(gen);
        const double scale = std::sqrt(2.0 * draw_gamma(gen, 0.5 * spec.dof) / spec.dof);
        out.first[k] = boost::math::cdf(t, a / scale);
        out.second[k] = boost::math::cdf(t, (spec.rho * a + c * b) / scale);
      }
      break;
    }
    case CopulaFamily::clayton: {
      // Marshall-Olkin: V ~ Gamma(1/theta), U_i = (1 + E_i / V)^(-1/theta)
      for (std::size_t k = 0; k < count; ++k) {
        const double v = draw_gamma(gen, 1.0 / spec.theta);
        const double e1 = draw_exponential(gen, 1.0), e2 = draw_exponential(gen, 1.0);
        out.first[k] = std::pow(1.0 + e1 / v, -1.0 / spec.theta);
        out.second[k] = std::pow(1.0 + e2 / v, -1.0 / spec.theta);
      }
      break;
    }
    case CopulaFamily::gumbel: {
      // V positive stable with index 1/theta, U_i = exp(-(E_i / V)^(1/theta))
      const double alpha = 1.0 / spec.theta;
      for (std::size_t k = 0; k < count; ++k) {
        const double v = alpha < 1.0 ? draw_positive_stable(gen, alpha) : 1.0;
        const double e1 = draw_exponential(gen, 1.0), e2 = draw_exponential(gen, 1.0);
        out.first[k] = std::exp(-std::pow(e1 / v, alpha));
        out.second[k] = std::exp(-std::pow(e2 / v, alpha));
      }
      break;
    }
  }
  return out;
}

NormalPair sample_copula(const CopulaSpec& spec, const EmpiricalMarginal& marg_x,
                         const EmpiricalMarginal& marg_y, std::size_t count, SeedSpec seed) {
  NormalPair u = sample_copula_uniforms(spec, count, seed);
  for (std::size_t k = 0; k < count; ++k) {
    u.first[k] = marg_x.quantile(u.first[k]);
    u.second[k] = marg_y.quantile(u.second[k]);
  }
  return u;
}

std::vector<BenchmarkRow> benchmark_discrepancy(std::span<const double> x,
                                                std::span<const double> y,
                                                std::span<const CopulaFamily> families,
                                                const PairModel& our_fit,
                                                const BenchmarkConfig& cfg) {
  if (x.size() != y.size()) throw DataError("benchmark: series differ in length");
  const EmpiricalMarginal marg_x(x), marg_y(y);
  std::vector<BenchmarkRow> rows(families.size());
  parallel_for(families.size(), resolve_thread_count(cfg.threads), [&](std::size_t f) {
    const CopulaFit fit = fit_copula(x, y, families[f], cfg.fit);
    const NormalPair sim = sample_copula(fit.spec, marg_x, marg_y, cfg.sim_draws,
                                         cfg.seed.with_stream(f));
    BenchmarkRow& row = rows[f];
    row.model = to_string(families[f]) + "_copula";
    row.report = discrepancy_between_samples(x, y, sim.first, sim.second, cfg.taus, row.model);
    row.discrepancy = row.report.value;
    row.copula = fit.spec;
  });
  BenchmarkRow ours;
  ours.model = "our_model";
  ours.report = discrepancy(x, y, our_fit, cfg.taus, cfg.sim_draws,
                            cfg.seed.with_stream(1000), ours.model);
  ours.discrepancy = ours.report.value;
  rows.push_back(std::move(ours));
  return rows;
}

}  // namespace heavytail
