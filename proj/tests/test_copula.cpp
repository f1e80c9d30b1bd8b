#include <doctest.h>

#include <boost/math/distributions/students_t.hpp>
#include <cmath>
#include <numbers>
#include <random>

#include "heavytail/copula.hpp"
#include "heavytail/errors.hpp"
#include "heavytail/model.hpp"
#include "support.hpp"

using namespace heavytail;

namespace {

double brute_force_tau_b(std::span<const double> x, std::span<const double> y) {
  double concordant = 0, discordant = 0, tie_x = 0, tie_y = 0;
  for (std::size_t i = 0; i < x.size(); ++i)
    for (std::size_t j = i + 1; j < x.size(); ++j) {
      const double dx = x[i] - x[j], dy = y[i] - y[j];
      if (dx == 0 && dy == 0) continue;
      if (dx == 0) ++tie_x;
      else if (dy == 0) ++tie_y;
      else if (dx * dy > 0) ++concordant;
      else ++discordant;
    }
  return (concordant - discordant) /
         std::sqrt((concordant + discordant + tie_x) * (concordant + discordant + tie_y));
}

std::vector<double> as_doubles(const std::vector<std::size_t>& r) { return {r.begin(), r.end()}; }

}  // namespace

TEST_SUITE("benchmarks") {

TEST_CASE("family names") {
  for (auto f : {CopulaFamily::normal, CopulaFamily::student_t, CopulaFamily::clayton, CopulaFamily::gumbel})
    CHECK(parse_copula_family(to_string(f)) == f);
  CHECK_FALSE(parse_copula_family("frank").has_value());
}

TEST_CASE("spec validation") {
  CHECK_THROWS_AS((CopulaSpec{CopulaFamily::normal, 1.0}.validate()), InvalidParameter);
  CHECK_THROWS_AS((CopulaSpec{CopulaFamily::student_t, 0.5, 2.0}.validate()), InvalidParameter);
  CHECK_THROWS_AS((CopulaSpec{CopulaFamily::clayton, 0, 4, 0.0}.validate()), InvalidParameter);
  CHECK_THROWS_AS((CopulaSpec{CopulaFamily::gumbel, 0, 4, 0.99}.validate()), InvalidParameter);
  CHECK_NOTHROW((CopulaSpec{CopulaFamily::gumbel, 0, 4, 1.0}.validate()));
}

TEST_CASE("kendall tau against the quadratic definition") {
  std::mt19937_64 gen(3);
  std::uniform_int_distribution<int> coarse(0, 6);
  std::normal_distribution<double> z;
  for (int trial = 0; trial < 5; ++trial) {
    std::vector<double> x(400), y(400);
    for (std::size_t k = 0; k < x.size(); ++k) {
      x[k] = trial % 2 ? coarse(gen) : z(gen);
      y[k] = 0.5 * x[k] + (trial < 3 ? coarse(gen) : z(gen));
    }
    CHECK(kendall_tau(x, y) == doctest::Approx(brute_force_tau_b(x, y)).epsilon(1e-12));
  }
  const std::vector<double> a{1, 2, 3}, b{3, 2, 1};
  CHECK(kendall_tau(a, b) == doctest::Approx(-1.0));
  CHECK_THROWS_AS(kendall_tau(a, std::vector<double>{1, 2}), DataError);
}

TEST_CASE("empirical marginal") {
  const std::vector<double> s{3.0, -1.0, 2.0, 2.0, 10.0};
  const EmpiricalMarginal m(s);
  for (double v : s) CHECK(m.quantile(m.cdf(v)) == v);
  CHECK(m.cdf(-5) == 0.0);
  CHECK(m.cdf(2.0) == doctest::Approx(0.6));
  CHECK(m.quantile(0.0) == -1.0);
  CHECK(m.quantile(1.0) == 10.0);
  CHECK_THROWS_AS(m.quantile(1.5), InvalidParameter);
  CHECK_THROWS_AS(EmpiricalMarginal(std::vector<double>{}), DataError);
}

TEST_CASE("t copula density against a direct formula") {
  for (double rho : {-0.4, 0.0, 0.7})
    for (double dof : {2.5, 5.0, 30.0}) {
      const boost::math::students_t_distribution<> t(dof);
      for (double u1 : {0.05, 0.4, 0.9})
        for (double u2 : {0.02, 0.5, 0.97}) {
          const double x1 = boost::math::quantile(t, u1), x2 = boost::math::quantile(t, u2);
          const double q = (x1 * x1 - 2 * rho * x1 * x2 + x2 * x2) / (1 - rho * rho);
          const double joint = std::exp(std::lgamma((dof + 2) / 2) - std::lgamma(dof / 2)) /
                               (std::numbers::pi * dof * std::sqrt(1 - rho * rho)) *
                               std::pow(1 + q / dof, -(dof + 2) / 2);
          const double expected = std::log(joint / (boost::math::pdf(t, x1) * boost::math::pdf(t, x2)));
          CHECK(student_t_copula_log_density(u1, u2, rho, dof) == doctest::Approx(expected).epsilon(1e-9));
        }
    }
}

TEST_CASE("comonotone data hits the boundaries") {
  const auto x = draw_iid(LatentKind::standard_normal(), 1000, {4, 0});
  CHECK(fit_copula(x, x, CopulaFamily::normal).spec.rho == 0.999);
  CHECK(fit_copula(x, x, CopulaFamily::gumbel).spec.theta == 50.0);
  CHECK(fit_copula(x, x, CopulaFamily::clayton).spec.theta == 100.0);
  CHECK_THROWS_AS(fit_copula(std::vector<double>(99, 1.0), std::vector<double>(99, 1.0), CopulaFamily::normal),
                  DataError);
}

TEST_CASE("independent data") {
  const auto p = draw_correlated_pair(0.0, 1'000'000, {5, 0});
  CHECK(std::fabs(fit_copula(p.first, p.second, CopulaFamily::normal).spec.rho) <= 0.005);
  CHECK(fit_copula(p.first, p.second, CopulaFamily::clayton).spec.theta <= 0.01);
  CHECK(fit_copula(p.first, p.second, CopulaFamily::gumbel).spec.theta == doctest::Approx(1.0).epsilon(0.005));

  std::vector<double> negated(p.second);
  for (double& v : negated) v = -v - 0.5 * p.first[&v - negated.data()];
  const auto clayton = fit_copula(p.first, negated, CopulaFamily::clayton);
  CHECK(clayton.spec.theta == 1e-6);
  CHECK(clayton.warnings.size() == 1);
  const auto gumbel = fit_copula(p.first, negated, CopulaFamily::gumbel);
  CHECK(gumbel.spec.theta == 1.0);
  CHECK(gumbel.warnings.size() == 1);
}

TEST_CASE("gumbel recovery") {
  const auto u = sample_copula_uniforms({CopulaFamily::gumbel, 0, 4, 2.0}, 1'000'000, {6, 0});
  CHECK(fit_copula(u.first, u.second, CopulaFamily::gumbel).spec.theta == doctest::Approx(2.0).epsilon(0.05));
}

TEST_CASE("uniform margins and round trips") {
  const CopulaSpec specs[] = {{CopulaFamily::normal, 0.6},
                              {CopulaFamily::student_t, 0.5, 5.0},
                              {CopulaFamily::clayton, 0, 4, 2.0},
                              {CopulaFamily::gumbel, 0, 4, 1.7}};
  for (const auto& spec : specs) {
    INFO(to_string(spec.family));
    const auto u = sample_copula_uniforms(spec, 1'000'000, {7, 0});
    CHECK(testing::ks_uniform(u.first) < 0.002);
    CHECK(testing::ks_uniform(u.second) < 0.002);
    const auto refit = fit_copula(u.first, u.second, spec.family);
    CHECK(std::fabs(refit.spec.rho - spec.rho) <= 0.05);
    CHECK(std::fabs(refit.spec.theta - spec.theta) <= 0.05);
    if (spec.family == CopulaFamily::student_t) CHECK(std::fabs(refit.spec.dof - spec.dof) <= 1.0);
  }
}

TEST_CASE("independent normal copula has no rank correlation") {
  const auto d = draw_iid(LatentKind::standard_normal(), 1'000'000, {8, 0});
  const EmpiricalMarginal m(d);
  const auto s = sample_copula({CopulaFamily::normal, 0.0}, m, m, 1'000'000, {9, 0});
  CHECK(std::fabs(testing::correlation(as_doubles(ordinal_ranks(s.first)),
                                       as_doubles(ordinal_ranks(s.second)))) <= 0.005);
  // values come from the sample itself
  CHECK(std::binary_search(m.sorted().begin(), m.sorted().end(), s.first[123]));
}

TEST_CASE("gaussian copula tail dependence fades") {
  const auto u = sample_copula_uniforms({CopulaFamily::normal, 0.7}, 1'000'000, {10, 0});
  const std::vector<double> taus{0.001, 0.05};
  const auto c = tail_proxy(u.first, u.second, taus, TailSide::lower);
  CHECK(c.lambdas[0] < c.lambdas[1]);
}

TEST_CASE("archimedean tail dependence") {
  const std::vector<double> tau{0.01};
  const auto clayton = sample_copula_uniforms({CopulaFamily::clayton, 0, 4, 2.0}, 10'000'000, {11, 0});
  CHECK(std::fabs(tail_proxy(clayton.first, clayton.second, tau, TailSide::lower).lambdas[0] -
                  std::pow(2.0, -0.5)) <= 0.05);
  const auto gumbel = sample_copula_uniforms({CopulaFamily::gumbel, 0, 4, 2.0}, 10'000'000, {12, 0});
  CHECK(std::fabs(tail_proxy(gumbel.first, gumbel.second, tau, TailSide::upper).lambdas[0] -
                  (2.0 - std::sqrt(2.0))) <= 0.05);
}

TEST_CASE("benchmark table") {
  const std::vector<CopulaFamily> all{CopulaFamily::normal, CopulaFamily::student_t, CopulaFamily::clayton,
                                      CopulaFamily::gumbel};
  BenchmarkConfig cfg;
  cfg.seed = {13, 0};

  SUBCASE("normal data favours the normal copula") {
    const MarginalParams m{0, 0, 0, 1};
    const PairModel truth{m, m, {0, 0, 0.6}};
    const auto d = sample_multivariate(truth.to_spec(), 1'000'000, {14, 0});
    const auto rows = benchmark_discrepancy(d.column(0), d.column(1), all, truth, cfg);
    REQUIRE(rows.size() == 5);
    CHECK(rows.back().model == "our_model");
    double best = rows[0].discrepancy;
    for (const auto& r : rows) best = std::min(best, r.discrepancy);
    CHECK(rows[0].model == "normal_copula");
    CHECK(rows[0].discrepancy <= best + 1e-3);
  }
  SUBCASE("heavy data favours our model") {
    const MarginalParams m{0, 0.8, 0.8, 0.5};
    const PairModel truth{m, m, {0.8, 0.8, 0.3}};
    const auto d = sample_multivariate(truth.to_spec(), 1'000'000, {15, 0});
    const std::vector<CopulaFamily> one{CopulaFamily::normal};
    const auto rows = benchmark_discrepancy(d.column(0), d.column(1), one, truth, cfg);
    REQUIRE(rows.size() == 2);
    MESSAGE("D normal " << rows[0].discrepancy << ", ours " << rows[1].discrepancy);
    CHECK(rows[1].discrepancy < rows[0].discrepancy);
    CHECK(rows[0].copula.has_value());
    CHECK_FALSE(rows[1].copula.has_value());
  }
  SUBCASE("thread count does not change the table") {
    const MarginalParams m{0, 0.5, 0.5, 1};
    const PairModel truth{m, m, {0.5, 0.5, 0.5}};
    const auto d = sample_multivariate(truth.to_spec(), 100000, {16, 0});
    cfg.sim_draws = 100000;
    cfg.threads = 1;
    const auto serial = benchmark_discrepancy(d.column(0), d.column(1), all, truth, cfg);
    cfg.threads = 4;
    const auto parallel = benchmark_discrepancy(d.column(0), d.column(1), all, truth, cfg);
    for (std::size_t i = 0; i < serial.size(); ++i) CHECK(serial[i].discrepancy == parallel[i].discrepancy);
  }
}

}
