#include <doctest.h>

#include <cmath>
#include <sstream>

#include "heavytail/copula.hpp"
#include "heavytail/errors.hpp"
#include "heavytail/model.hpp"
#include "heavytail/tail_metrics.hpp"

using namespace heavytail;

namespace {

PairModel heavy_spec() {
  const MarginalParams m{0, 0.8, 0.8, 0.5};
  return {m, m, {0.8, 0.8, 0.3}};
}

SampleMatrix base_config_sample(double v1, std::size_t count) {
  const MarginalParams second{0, 0.5, 0.5, 1};
  MarginalParams first = second;
  first.left_tail = v1;
  return sample_multivariate(ModelSpec::pair(first, second, {0.5, 0.5, 0.5}), count, {60, 0});
}

}  // namespace

TEST_SUITE("tail_metrics") {

TEST_CASE("ordinal ranks break ties by index") {
  const std::vector<double> v{3.0, 1.0, 3.0, 2.0, 1.0};
  CHECK(ordinal_ranks(v) == std::vector<std::size_t>{4, 1, 5, 3, 2});
}

TEST_CASE("log spaced levels") {
  const auto t = log_spaced_taus();
  REQUIRE(t.size() == 25);
  CHECK(t.front() == doctest::Approx(0.001));
  CHECK(t.back() == doctest::Approx(0.1));
  for (std::size_t i = 1; i < t.size(); ++i) CHECK(t[i] / t[i - 1] == doctest::Approx(t[1] / t[0]));
}

TEST_CASE("comonotone data has unit proxy") {
  const auto x = draw_iid(LatentKind::standard_normal(), 100000, {1, 0});
  const auto taus = log_spaced_taus();
  for (auto side : {TailSide::lower, TailSide::upper}) {
    const auto curve = tail_proxy(x, x, taus, side);
    CHECK(curve.side == side);
    for (std::size_t i = 0; i < taus.size(); ++i)
      CHECK(curve.lambdas[i] >= 1.0 - 1.0 / (taus[i] * 100000));
  }
}

TEST_CASE("independent normals give lambda equal to tau") {
  const auto p = draw_correlated_pair(0.0, 10'000'000, {2, 0});
  std::vector<double> taus;
  for (double t = 0.01; t <= 0.1 + 1e-12; t += 0.01) taus.push_back(t);
  for (auto side : {TailSide::lower, TailSide::upper}) {
    const auto curve = tail_proxy(p.first, p.second, taus, side);
    for (std::size_t i = 0; i < taus.size(); ++i) CHECK(std::fabs(curve.lambdas[i] - taus[i]) <= 0.005);
  }
}

TEST_CASE("proxy bounds and exchange invariance") {
  const auto d = sample_multivariate(heavy_spec().to_spec(), 200000, {3, 0});
  const auto taus = log_spaced_taus();
  for (auto side : {TailSide::lower, TailSide::upper}) {
    const auto xy = tail_proxy(d.column(0), d.column(1), taus, side);
    const auto yx = tail_proxy(d.column(1), d.column(0), taus, side);
    CHECK(xy.lambdas == yx.lambdas);
    for (double l : xy.lambdas) {
      CHECK(l >= 0.0);
      CHECK(l <= 1.0);
    }
  }
}

TEST_CASE("proxy input checks") {
  const std::vector<double> x(1000, 0.0), y(999, 0.0);
  const std::vector<double> tau{0.01};
  CHECK_THROWS_AS(tail_proxy(x, y, tau, TailSide::lower), DataError);
  CHECK_THROWS_AS(tail_proxy(x, x, tau, TailSide::lower), InvalidParameter);
}

TEST_CASE("joint quantile examples") {
  SUBCASE("comonotone") {
    const auto x = draw_iid(LatentKind::standard_normal(), 100000, {4, 0});
    const auto r = joint_quantile_empirical(x, x, 0.03, TailSide::lower);
    CHECK(std::fabs(r.tau_star - 0.03) <= 1.0 / 100000 + 1e-12);
    CHECK(r.source == QuantileSource::empirical);
    const auto u = joint_quantile_empirical(x, x, 0.97, TailSide::upper);
    CHECK(std::fabs(u.tau_star - 0.97) <= 1.0 / 100000 + 1e-12);
  }
  SUBCASE("independent") {
    const auto p = draw_correlated_pair(0.0, 1'000'000, {5, 0});
    CHECK(std::fabs(joint_quantile_empirical(p.first, p.second, 0.01, TailSide::lower).tau_star - 0.1) <= 0.01);
    CHECK(std::fabs(joint_quantile_empirical(p.first, p.second, 0.99, TailSide::upper).tau_star - 0.9) <= 0.01);
  }
  SUBCASE("degenerate level") {
    const auto p = draw_correlated_pair(0.3, 1000, {6, 0});
    CHECK(joint_quantile_empirical(p.first, p.second, 1.0, TailSide::lower).tau_star == 1.0);
  }
  SUBCASE("too little data") {
    const auto p = draw_correlated_pair(0.3, 1000, {6, 0});
    CHECK_THROWS_AS(joint_quantile_empirical(p.first, p.second, 0.01, TailSide::lower), InvalidParameter);
    CHECK_THROWS_AS(joint_quantile_empirical(p.first, p.second, 0.0, TailSide::lower), InvalidParameter);
  }
}

TEST_CASE("joint quantile is monotone, bounded and rank based") {
  const auto d = sample_multivariate(heavy_spec().to_spec(), 200000, {7, 0});
  const auto x = d.column(0), y = d.column(1);
  std::vector<double> tx(x.size()), ty(y.size());
  for (std::size_t k = 0; k < x.size(); ++k) {
    tx[k] = std::exp(x[k]);
    ty[k] = std::atan(y[k]) + 3.0 * y[k];
  }
  const JointQuantileSolver solver(x, y);
  const JointQuantileSolver transformed(tx, ty);
  double previous_lower = 0.0, previous_upper = 0.0;
  for (double tau = 0.001; tau < 0.999; tau += 0.007) {
    const auto lower = solver.solve(tau, TailSide::lower);
    const auto upper = solver.solve(tau, TailSide::upper);
    CHECK(lower.tau_star >= tau);
    CHECK(lower.tau_star <= 1.0);
    CHECK(upper.tau_star <= tau);
    CHECK(lower.tau_star >= previous_lower);
    CHECK(upper.tau_star >= previous_upper);
    previous_lower = lower.tau_star;
    previous_upper = upper.tau_star;
    CHECK(transformed.solve(tau, TailSide::lower).tau_star == lower.tau_star);
    CHECK(transformed.solve(tau, TailSide::upper).tau_star == upper.tau_star);
    CHECK(joint_quantile_empirical(x, y, tau, TailSide::lower).tau_star == lower.tau_star);
  }
}

TEST_CASE("model joint quantile") {
  SUBCASE("independent normal model") {
    const PairModel m{{0, 0, 0, 1}, {0, 0, 0, 1}, {0, 0, 0}};
    const auto r = joint_quantile_model(m, 0.01, TailSide::lower, 10'000'000, {8, 0});
    CHECK(std::fabs(r.tau_star - 0.1) <= 0.01);
    CHECK(r.source == QuantileSource::model);
  }
  SUBCASE("near comonotone") {
    const PairModel m{{0, 0.5, 0.5, 1}, {0, 0.5, 0.5, 1}, {0.999, 0.999, 0.999}};
    for (double tau : {0.01, 0.03, 0.05}) {
      const auto r = joint_quantile_model(m, tau, TailSide::lower, 1'000'000, {9, 0});
      CHECK(std::fabs(r.tau_star - tau) <= 0.02);
    }
  }
  SUBCASE("deterministic") {
    const auto m = heavy_spec();
    const auto a = joint_quantile_model(m, 0.02, TailSide::lower, 100000, {10, 3});
    const auto b = joint_quantile_model(m, 0.02, TailSide::lower, 100000, {10, 3});
    CHECK(a.tau_star == b.tau_star);
  }
}

TEST_CASE("discrepancy levels") {
  const auto taus = default_discrepancy_taus();
  CHECK(taus == std::vector<double>{0.01, 0.02, 0.03, 0.04, 0.05, 0.95, 0.96, 0.97, 0.98, 0.99});
  CHECK(side_for_tau(0.05) == TailSide::lower);
  CHECK(side_for_tau(0.95) == TailSide::upper);
}

TEST_CASE("discrepancy against itself is zero") {
  const auto d = sample_multivariate(heavy_spec().to_spec(), 100000, {11, 0});
  const auto taus = default_discrepancy_taus();
  const auto r = discrepancy_between_samples(d.column(0), d.column(1), d.column(0), d.column(1), taus, "self");
  CHECK(r.value == 0.0);
  CHECK(r.rows.size() == 10);
  CHECK(r.label == "self");
}

TEST_CASE("discrepancy of the true spec sits below the normal copula") {
  const auto spec = heavy_spec();
  const auto d = sample_multivariate(spec.to_spec(), 1'000'000, {12, 0});
  const auto taus = default_discrepancy_taus();
  const auto ours = discrepancy(d.column(0), d.column(1), spec, taus, 1'000'000, {13, 0}, "ours");
  double sum = 0.0;
  for (const auto& row : ours.rows) sum += std::pow(row.tau_star_model - row.tau_star_data, 2);
  CHECK(ours.value == doctest::Approx(sum).epsilon(1e-12));
  CHECK(ours.value >= 0.0);
  CHECK(ours.value <= 1e-3);

  const auto fit = fit_copula(d.column(0), d.column(1), CopulaFamily::normal);
  const EmpiricalMarginal mx(d.column(0)), my(d.column(1));
  const auto sim = sample_copula(fit.spec, mx, my, 1'000'000, {14, 0});
  const auto normal = discrepancy_between_samples(d.column(0), d.column(1), sim.first, sim.second, taus);
  MESSAGE("D ours " << ours.value << ", normal copula " << normal.value);
  CHECK(normal.value > ours.value);

  std::ostringstream csv;
  write_discrepancy_csv(csv, ours);
  CHECK(csv.str().rfind("tau,side,tau_star_model,tau_star_data\n", 0) == 0);
}

TEST_CASE("tail curve csv") {
  TailCurve c{TailSide::lower, {0.01, 0.02}, {0.5, 0.25}};
  std::ostringstream out;
  write_tail_curve_csv(out, c);
  CHECK(out.str() == "tau,lambda_lower\n0.01,0.5\n0.02,0.25\n");
}

}

TEST_SUITE("tail_metrics_base_config") {

TEST_CASE("lower proxy increases with the left tail weight") {
  const std::vector<double> tau{0.01};
  double previous = -1.0;
  for (double v1 : {0.3, 0.6, 0.9}) {
    const auto d = base_config_sample(v1, 1'000'000);
    const double l = tail_proxy(d.column(0), d.column(1), tau, TailSide::lower).lambdas[0];
    MESSAGE("v1 = " << v1 << ": lambda(0.01) = " << l);
    CHECK(l > previous);
    previous = l;
  }
}

}
