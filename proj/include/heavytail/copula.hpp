#pragma once

#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "heavytail/rng.hpp"
#include "heavytail/tail_metrics.hpp"

namespace heavytail {

enum class CopulaFamily { normal, student_t, clayton, gumbel };

std::string to_string(CopulaFamily family);
std::optional<CopulaFamily> parse_copula_family(const std::string& name);

struct CopulaSpec {
  CopulaFamily family = CopulaFamily::normal;
  /// normal / student_t correlation in (-1, 1)
  double rho = 0.0;
  /// student_t degrees of freedom > 2
  double dof = 4.0;
  /// clayton theta > 0, gumbel theta >= 1
  double theta = 1.0;

  void validate() const;
};

/// Sample-based marginal: type-1 quantile on the sorted sample and the
/// matching step CDF, so quantile(cdf(x)) == x on sample points.
class EmpiricalMarginal {
 public:
  explicit EmpiricalMarginal(std::span<const double> sample);

  double cdf(double x) const;
  double quantile(double p) const;
  std::span<const double> sorted() const { return sorted_; }

 private:
  std::vector<double> sorted_;
};

/// Kendall's tau-b in O(K log K) (Knight's merge-sort algorithm).
double kendall_tau(std::span<const double> x, std::span<const double> y);

struct CopulaFitOptions {
  double clayton_theta_min = 1e-6;
  double clayton_theta_max = 1e2;
  double gumbel_theta_max = 50.0;
  double rho_max = 0.999;
  double dof_min = 2.1;
  double dof_max = 50.0;
  /// Rank pairs used by the t pseudo-likelihood (evenly strided subsample).
  std::size_t pseudo_likelihood_points = 20000;
};

struct CopulaFit {
  CopulaSpec spec;
  double kendall_tau = 0.0;
  std::vector<std::string> warnings;
};

/// Kendall-tau inversion: rho = sin(pi tau / 2); Clayton theta = 2 tau / (1 - tau);
/// Gumbel theta = 1 / (1 - tau); t degrees of freedom by a profile search of
/// the rank pseudo-likelihood. Requires K >= 100.
CopulaFit fit_copula(std::span<const double> x, std::span<const double> y, CopulaFamily family,
                     const CopulaFitOptions& options = {});

/// Uniform pairs from the copula.
NormalPair sample_copula_uniforms(const CopulaSpec& spec, std::size_t count, SeedSpec seed);

/// Copula pairs mapped through empirical marginal quantiles.
NormalPair sample_copula(const CopulaSpec& spec, const EmpiricalMarginal& marg_x,
                         const EmpiricalMarginal& marg_y, std::size_t count, SeedSpec seed);

/// Log density of the bivariate t copula at (u1, u2).
double student_t_copula_log_density(double u1, double u2, double rho, double dof);

struct BenchmarkConfig {
  std::size_t sim_draws = 1'000'000;
  std::vector<double> taus = default_discrepancy_taus();
  SeedSpec seed{};
  CopulaFitOptions fit{};
  /// Families are fitted concurrently; 0 resolves via HEAVYTAIL_THREADS.
  unsigned threads = 0;
};

struct BenchmarkRow {
  std::string model;
  double discrepancy = 0.0;
  DiscrepancyReport report;
  std::optional<CopulaSpec> copula;
};

/// One D per requested family plus the supplied fit of our model (last row).
std::vector<BenchmarkRow> benchmark_discrepancy(std::span<const double> x,
                                                std::span<const double> y,
                                                std::span<const CopulaFamily> families,
                                                const PairModel& our_fit,
                                                const BenchmarkConfig& cfg = {});

}  // namespace heavytail
