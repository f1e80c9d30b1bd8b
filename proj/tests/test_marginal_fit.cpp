#include <doctest.h>

#include <cmath>
#include <vector>

#include "heavytail/errors.hpp"
#include "heavytail/marginal_fit.hpp"
#include "heavytail/model.hpp"

using namespace heavytail;

namespace {

double l2(const MarginalParams& a, const MarginalParams& b) {
  return std::sqrt(std::pow(a.location - b.location, 2) + std::pow(a.right_tail - b.right_tail, 2) +
                   std::pow(a.left_tail - b.left_tail, 2) + std::pow(a.scale - b.scale, 2));
}

void check_residual_invariant(std::span<const double> y, const MarginalFitResult& r,
                              const MarginalFitConfig& cfg) {
  if (!r.converged) return;
  const auto m = sample_moments(y);
  for (int i = 1; i <= 4; ++i)
    CHECK(std::fabs(r.residuals[i]) / std::max(1.0, std::fabs(m[i])) <= 10 * cfg.block_tol);
}

}  // namespace

TEST_SUITE("marginal_fit") {

TEST_CASE("sample moments") {
  const std::vector<double> y{1, 2, 3};
  const auto m = sample_moments(y);
  CHECK(m[1] == doctest::Approx(2.0));
  CHECK(m[2] == doctest::Approx(14.0 / 3.0));
  CHECK(m[3] == doctest::Approx(12.0));
  CHECK(m[4] == doctest::Approx(98.0 / 3.0));

  const std::vector<double> c(17, -1.5);
  const auto mc = sample_moments(c);
  for (int i = 1; i <= 4; ++i) CHECK(mc[i] == doctest::Approx(std::pow(-1.5, i)));

  const auto z = draw_iid(LatentKind::standard_normal(), 10'000'000, {77, 0});
  const auto mz = sample_moments(z);
  // standard errors sqrt(Var(Z^i) / K) with Var = 1, 2, 15, 96
  const double k = 1e7;
  CHECK(std::fabs(mz[1]) < 5 * std::sqrt(1 / k));
  CHECK(std::fabs(mz[2] - 1) < 5 * std::sqrt(2 / k));
  CHECK(std::fabs(mz[3]) < 5 * std::sqrt(15 / k));
  CHECK(std::fabs(mz[4] - 3) < 5 * std::sqrt(96 / k));

  CHECK_THROWS_AS(sample_moments(std::vector<double>{}), DataError);
  CHECK_THROWS_AS(sample_moments(std::vector<double>{1, NAN}), DataError);
}

TEST_CASE("config validation") {
  MarginalFitConfig cfg;
  CHECK_NOTHROW(cfg.validate());
  cfg.right_tail_max = 3.5;
  CHECK_THROWS_AS(cfg.validate(), InvalidParameter);
  cfg = {};
  cfg.block_tol = 0;
  CHECK_THROWS_AS(cfg.validate(), InvalidParameter);
  cfg = {};
  cfg.restarts = -1;
  CHECK_THROWS_AS(cfg.validate(), InvalidParameter);
}

TEST_CASE("input errors") {
  CHECK_THROWS_AS(fit_marginal(std::vector<double>(99, 1.0)), DataError);
  auto y = sample_univariate({0, 0, 0, 1}, 500, {1, 0}).values;
  y[17] = INFINITY;
  CHECK_THROWS_AS(fit_marginal(y), DataError);
}

TEST_CASE("degenerate normal recovery") {
  const auto y = sample_univariate({0, 0, 0, 1}, 1'000'000, {3, 0}).values;
  const MarginalFitConfig cfg;
  const auto r = fit_marginal(y, cfg);
  CHECK(r.params.right_tail <= 0.05);
  CHECK(r.params.left_tail <= 0.05);
  CHECK(std::fabs(r.params.scale - 1) <= 0.02);
  CHECK(std::fabs(r.params.location) <= 0.01);
  check_residual_invariant(y, r, cfg);
}

TEST_CASE("self recovery averaged over 20 seeds") {
  const MarginalParams truth{1, 0.6, 0.3, 0.8};
  const MarginalFitConfig cfg;
  double total = 0.0;
  int converged = 0;
  for (std::uint64_t s = 0; s < 20; ++s) {
    const auto y = sample_univariate(truth, 1'000'000, {1000 + s, 0}).values;
    const auto r = fit_marginal(y, cfg);
    total += l2(r.params, truth);
    converged += r.converged;
    check_residual_invariant(y, r, cfg);
    // the per-sweep objective never rises on recovery data
    for (std::size_t i = 1; i < r.stage_two_offset; ++i)
      CHECK(r.objective_trace[i] <= r.objective_trace[i - 1]);
    for (std::size_t i = r.stage_two_offset + 1; i < r.objective_trace.size(); ++i)
      CHECK(r.objective_trace[i] <= r.objective_trace[i - 1]);
  }
  MESSAGE("mean L2 " << total / 20 << ", converged " << converged << "/20");
  CHECK(total / 20 <= 0.1);
}

TEST_CASE("location equivariance") {
  const auto y = sample_univariate({0.3, 0.5, 0.4, 1.1}, 200000, {8, 0}).values;
  std::vector<double> shifted(y);
  for (double& v : shifted) v += 7.0;
  const auto a = fit_marginal(y);
  const auto b = fit_marginal(shifted);
  CHECK(std::fabs(a.params.right_tail - b.params.right_tail) <= 1e-6);
  CHECK(std::fabs(a.params.left_tail - b.params.left_tail) <= 1e-6);
  CHECK(std::fabs(a.params.scale - b.params.scale) <= 1e-6);
  CHECK(b.params.location - a.params.location == doctest::Approx(7.0).epsilon(1e-9));
}

TEST_CASE("mirroring swaps the tails") {
  const auto y = sample_univariate({0.5, 0.6, 0.3, 0.8}, 1'000'000, {9, 0}).values;
  std::vector<double> mirrored(y);
  for (double& v : mirrored) v = -v;
  const auto a = fit_marginal(y);
  const auto b = fit_marginal(mirrored);
  CHECK(std::fabs(a.params.right_tail - b.params.left_tail) <= 1e-3);
  CHECK(std::fabs(a.params.left_tail - b.params.right_tail) <= 1e-3);
  CHECK(std::fabs(a.params.scale - b.params.scale) <= 1e-3);
  CHECK(std::fabs(a.params.location + b.params.location) <= 1e-3);
}

TEST_CASE("moment-level fit reproduces exact moments") {
  const MarginalParams truth{0, 0.5, 0.2, 1.0};
  const auto m = closed_form_moments(truth);
  // block alternation contracts linearly, this start needs a little over 200 sweeps
  MarginalFitConfig cfg;
  cfg.max_outer_iters = 1000;
  const auto r = fit_marginal_moments(m, {0, 0.3, 0.3, 1.2}, cfg);
  CHECK(r.converged);
  for (int i = 1; i <= 4; ++i) CHECK(std::fabs(r.residuals[i]) <= 1e-8 * std::max(1.0, std::fabs(m[i])));
  CHECK(r.iterations == static_cast<int>(r.objective_trace.size()));
}

TEST_CASE("fit is deterministic") {
  const auto y = sample_univariate({0, 0.4, 0.4, 1}, 100000, {10, 0}).values;
  MarginalFitConfig cfg;
  cfg.restarts = 2;
  const auto a = fit_marginal(y, cfg, {5, 1});
  const auto b = fit_marginal(y, cfg, {5, 1});
  CHECK(a.params == b.params);
  CHECK(a.objective_trace == b.objective_trace);
}

}
