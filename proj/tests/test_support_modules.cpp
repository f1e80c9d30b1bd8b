#include <doctest.h>

#include <atomic>
#include <cmath>
#include <cstdlib>
#include <sstream>
#include <stdexcept>

#include "heavytail/errors.hpp"
#include "heavytail/optimize.hpp"
#include "heavytail/parallel.hpp"
#include "heavytail/sample_matrix.hpp"

using namespace heavytail;

TEST_SUITE("support") {

TEST_CASE("nelder mead on the rosenbrock valley") {
  const auto r = nelder_mead(
      [](const std::vector<double>& x) {
        return 100 * std::pow(x[1] - x[0] * x[0], 2) + std::pow(1 - x[0], 2);
      },
      {-1.2, 1.0}, {.initial_step = 0.5, .x_tol = 1e-10, .f_tol = 1e-30, .max_evaluations = 10000});
  CHECK(r.x[0] == doctest::Approx(1.0).epsilon(1e-6));
  CHECK(r.x[1] == doctest::Approx(1.0).epsilon(1e-6));
  CHECK(r.value < 1e-12);
  CHECK(r.evaluations > 0);
}

TEST_CASE("golden section") {
  const auto r = golden_section([](double x) { return std::pow(x - 0.3, 2) + 1; }, -1, 1);
  CHECK(r.x[0] == doctest::Approx(0.3).epsilon(1e-7));
  CHECK(r.value == doctest::Approx(1.0));
  const auto edge = golden_section([](double x) { return x; }, -1, 1);
  CHECK(edge.x[0] == doctest::Approx(-1.0).epsilon(1e-7));
}

TEST_CASE("parallel_for visits every index once and rethrows") {
  std::vector<std::atomic<int>> hits(1000);
  parallel_for(hits.size(), 4, [&](std::size_t i) { hits[i]++; });
  for (auto& h : hits) CHECK(h.load() == 1);
  CHECK_THROWS_AS(parallel_for(10, 3, [](std::size_t i) {
                    if (i == 7) throw std::runtime_error("boom");
                  }),
                  std::runtime_error);
  parallel_for(0, 4, [](std::size_t) { FAIL("no tasks expected"); });
}

TEST_CASE("thread count resolution") {
  CHECK(resolve_thread_count(3) == 3);
  ::setenv("HEAVYTAIL_THREADS", "5", 1);
  CHECK(resolve_thread_count() == 5);
  CHECK(resolve_thread_count(2) == 2);
  ::unsetenv("HEAVYTAIL_THREADS");
  CHECK(resolve_thread_count() >= 1);
}

TEST_CASE("csv round trip keeps every bit") {
  Eigen::MatrixXd m(3, 2);
  m << 0.1, -1e-300, 1.0 / 3.0, 12345678.901234567, -2.5e17, 5e-324;
  const SampleMatrix s(m, {"a", "b"});
  std::ostringstream out;
  s.write_csv(out);
  std::istringstream in(out.str());
  const auto back = SampleMatrix::read_csv(in);
  CHECK(back.labels() == s.labels());
  CHECK(back.data() == s.data());
  CHECK(out.str().substr(0, 4) == "a,b\n");
}

TEST_CASE("number format") {
  CHECK(format_real(0.1) == "0.10000000000000001");
  CHECK(format_real(1.0) == "1");
  CHECK(format_real(-2.5) == "-2.5");
  CHECK(default_labels(3) == std::vector<std::string>{"Y1", "Y2", "Y3"});
}

TEST_CASE("csv diagnostics name the row and column") {
  const auto error_of = [](const std::string& text) {
    std::istringstream in(text);
    try {
      SampleMatrix::read_csv(in);
    } catch (const DataError& e) {
      return std::string(e.what());
    }
    return std::string();
  };
  const auto nan = error_of("x,y\n1,2\n3,nan\n");
  CHECK(nan.find("row 2") != std::string::npos);
  CHECK(nan.find("'y'") != std::string::npos);
  const auto text = error_of("x,y\n1,abc\n");
  CHECK(text.find("row 1") != std::string::npos);
  CHECK(text.find("abc") != std::string::npos);
  CHECK_FALSE(error_of("x,y\n1,2,3\n").empty());
  CHECK_FALSE(error_of("").empty());
  CHECK_FALSE(error_of("x,y\n").empty());
}

TEST_CASE("sample matrix checks shape and finiteness") {
  Eigen::MatrixXd m(2, 2);
  m << 1, 2, 3, NAN;
  CHECK_THROWS_AS(SampleMatrix(m, {"a", "b"}), DataError);
  CHECK_THROWS_AS(SampleMatrix(Eigen::MatrixXd::Zero(2, 2), {"a"}), DataError);
  CHECK_THROWS_AS(SampleMatrix(Eigen::MatrixXd(0, 2), {"a", "b"}), DataError);
}

}
