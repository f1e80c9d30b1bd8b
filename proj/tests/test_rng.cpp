#include <doctest.h>

#include <boost/math/distributions/normal.hpp>
#include <cmath>
#include <set>

#include "heavytail/errors.hpp"
#include "heavytail/rng.hpp"
#include "support.hpp"

using namespace heavytail;

TEST_SUITE("latent_sampler") {

TEST_CASE("philox known answers") {
  using B = Philox4x32::Block;
  CHECK(Philox4x32::encrypt(B{0, 0, 0, 0}, {0, 0}) ==
        B{0x6627e8d5, 0xe169c58d, 0xbc57ac4c, 0x9b00dbd8});
  CHECK(Philox4x32::encrypt(B{0xffffffff, 0xffffffff, 0xffffffff, 0xffffffff},
                            {0xffffffff, 0xffffffff}) ==
        B{0x408f276d, 0x41c83b0e, 0xa20bc7c6, 0x6d5451fd});
  CHECK(Philox4x32::encrypt(B{0x243f6a88, 0x85a308d3, 0x13198a2e, 0x03707344},
                            {0xa4093822, 0x299f31d0}) ==
        B{0xd16cfe09, 0x94fdcceb, 0x5001e420, 0x24126ea1});
}

TEST_CASE("generator is a pure function of seed and stream") {
  Philox4x32 a({42, 3}), b({42, 3}), c({42, 4}), d({43, 3});
  bool differs_stream = false, differs_seed = false;
  for (int i = 0; i < 100; ++i) {
    const auto va = a(), vb = b(), vc = c(), vd = d();
    CHECK(va == vb);
    differs_stream = differs_stream || va != vc;
    differs_seed = differs_seed || va != vd;
  }
  CHECK(differs_stream);
  CHECK(differs_seed);
}

TEST_CASE("copies fork identical streams and discard skips ahead") {
  Philox4x32 a({9, 1});
  a();
  Philox4x32 copy = a;
  CHECK(a() == copy());

  Philox4x32 x({5, 0}), y({5, 0});
  for (int i = 0; i < 7; ++i) x();
  y.discard(7);
  for (int i = 0; i < 10; ++i) CHECK(x() == y());
}

TEST_CASE("uniform stays inside the open unit interval") {
  Philox4x32 g({1, 0});
  double lo = 1.0, hi = 0.0, sum = 0.0;
  const int n = 200000;
  for (int i = 0; i < n; ++i) {
    const double u = g.uniform();
    lo = std::min(lo, u);
    hi = std::max(hi, u);
    sum += u;
  }
  CHECK(lo > 0.0);
  CHECK(hi < 1.0);
  CHECK(sum / n == doctest::Approx(0.5).epsilon(0.005));
}

TEST_CASE("normal quantile agrees with boost") {
  const boost::math::normal_distribution<> n;
  for (double p : {1e-300, 1e-100, 1e-20, 1e-10, 1e-5, 0.001, 0.02425, 0.1, 0.3, 0.5, 0.7, 0.9,
                   0.97575, 0.999, 1 - 1e-10}) {
    const double expected = boost::math::quantile(n, p);
    CHECK(normal_quantile(p) == doctest::Approx(expected).epsilon(1e-13));
  }
  for (double x : {-30.0, -8.0, -1.0, 0.0, 0.5, 3.0, 8.0}) {
    CHECK(normal_cdf(x) == doctest::Approx(boost::math::cdf(n, x)).epsilon(1e-13));
    CHECK(normal_survival(x) ==
          doctest::Approx(boost::math::cdf(boost::math::complement(n, x))).epsilon(1e-13));
    CHECK(normal_density(x) == doctest::Approx(boost::math::pdf(n, x)).epsilon(1e-13));
  }
}

TEST_CASE("standard normal draws") {
  const auto z = draw_iid(LatentKind::standard_normal(), 1'000'000, {2024, 0});
  CHECK(std::fabs(testing::mean(z)) < 4e-3);
  CHECK(std::fabs(testing::variance(z) - 1.0) < 1e-2);
  CHECK(testing::ks_normal(z) < 1.628 / std::sqrt(1e6));
}

TEST_CASE("exponential draws") {
  const auto e = draw_iid(LatentKind::exponential(2.0), 1'000'000, {2024, 1});
  CHECK(std::fabs(testing::mean(e) - 0.5) < 2e-3);
  CHECK(*std::min_element(e.begin(), e.end()) > 0.0);
}

TEST_CASE("student t and gamma draws") {
  const auto t = draw_iid(LatentKind::student_t(6.0), 1'000'000, {7, 0});
  CHECK(std::fabs(testing::mean(t)) < 6e-3);
  CHECK(testing::variance(t) == doctest::Approx(1.5).epsilon(0.03));

  Philox4x32 g({8, 0});
  double s = 0.0;
  const int n = 400000;
  for (int i = 0; i < n; ++i) s += draw_gamma(g, 0.4);
  CHECK(s / n == doctest::Approx(0.4).epsilon(0.01));
}

TEST_CASE("determinism of a short draw") {
  const auto a = draw_iid(LatentKind::standard_normal(), 5, {11, 2});
  const auto b = draw_iid(LatentKind::standard_normal(), 5, {11, 2});
  CHECK(a == b);
}

TEST_CASE("invalid distribution parameters") {
  CHECK_THROWS_AS(LatentKind::exponential(0.0), InvalidParameter);
  CHECK_THROWS_AS(LatentKind::exponential(-1.0), InvalidParameter);
  CHECK_THROWS_AS(LatentKind::student_t(0.0), InvalidParameter);
  CHECK_THROWS_AS(LatentKind::student_t(std::nan("")), InvalidParameter);
  CHECK_THROWS_AS(draw_iid(LatentKind::standard_normal(), 0, {}), InvalidParameter);
}

TEST_CASE("correlated pairs") {
  SUBCASE("rho = 0") {
    const auto p = draw_correlated_pair(0.0, 1'000'000, {3, 0});
    CHECK(std::fabs(testing::correlation(p.first, p.second)) < 4e-3);
  }
  SUBCASE("rho = 1 gives identical vectors") {
    const auto p = draw_correlated_pair(1.0, 1000, {3, 0});
    CHECK(p.first == p.second);
  }
  SUBCASE("rho = 0.6") {
    const auto p = draw_correlated_pair(0.6, 1'000'000, {3, 0});
    CHECK(std::fabs(testing::correlation(p.first, p.second) - 0.6) < 4e-3);
    CHECK(testing::ks_normal(p.first) < 0.002);
    CHECK(testing::ks_normal(p.second) < 0.002);
  }
  CHECK_THROWS_AS(draw_correlated_pair(1.01, 10, {}), InvalidParameter);
  CHECK_THROWS_AS(draw_correlated_pair(-1.5, 10, {}), InvalidParameter);
}

TEST_CASE("common random numbers across rho") {
  const CorrelatedNormalBase base(100000, {17, 4});
  const auto a = base.correlate(0.3);
  const auto b = base.correlate(0.8);
  CHECK(a.first == b.first);
  const auto direct = draw_correlated_pair(0.8, 100000, {17, 4});
  CHECK(direct.second == b.second);

  // statistics move continuously on a 1e-4 grid
  double previous = testing::correlation(base.correlate(0.5).first, base.correlate(0.5).second);
  double largest_jump = 0.0;
  for (int i = 1; i <= 20; ++i) {
    const auto p = base.correlate(0.5 + 1e-4 * i);
    const double c = testing::correlation(p.first, p.second);
    largest_jump = std::max(largest_jump, std::fabs(c - previous));
    previous = c;
  }
  CHECK(largest_jump < 1e-2);
}

TEST_CASE("seed derivation spreads child seeds") {
  std::set<std::uint64_t> seen;
  for (std::uint64_t a = 0; a < 50; ++a)
    for (std::uint64_t b = 0; b < 50; ++b) seen.insert(derive_seed(1, a, b));
  CHECK(seen.size() == 2500);
  CHECK(derive_seed(1, 2, 3) == derive_seed(1, 2, 3));
}

}
