#include "heavytail/optimize.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace heavytail {

namespace {

MinimizeResult nelder_mead_once(const Objective& f, const std::vector<double>& x0,
                                const NelderMeadOptions& options, int budget) {
  const std::size_t d = x0.size();
  std::vector<std::vector<double>> simplex(d + 1, x0);
  std::vector<double> values(d + 1);
  int evals = 0;
  auto eval = [&](const std::vector<double>& x) {
    ++evals;
    const double v = f(x);
    return std::isnan(v) ? std::numeric_limits<double>::infinity() : v;
  };
  for (std::size_t i = 0; i < d; ++i) {
    const double step = x0[i] != 0.0 ? options.initial_step * std::max(1.0, std::fabs(x0[i]))
                                     : options.initial_step;
    simplex[i + 1][i] += step;
  }
  for (std::size_t i = 0; i <= d; ++i) values[i] = eval(simplex[i]);

  std::vector<std::size_t> order(d + 1);
  std::vector<double> centroid(d), trial(d), trial2(d);
  bool converged = false;
  while (evals < budget) {
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(),
                     [&](std::size_t a, std::size_t b) { return values[a] < values[b]; });
    const std::size_t best = order.front();
    const std::size_t worst = order.back();
    const std::size_t second_worst = order[d > 0 ? d - 1 : 0];

    double spread_x = 0.0;
    for (std::size_t i = 0; i <= d; ++i) {
      for (std::size_t k = 0; k < d; ++k) {
        spread_x = std::max(spread_x, std::fabs(simplex[i][k] - simplex[best][k]));
      }
    }
    const double spread_f = values[worst] - values[best];
    if (spread_x <= options.x_tol || spread_f <= options.f_tol) {
      converged = true;
      break;
    }

    std::fill(centroid.begin(), centroid.end(), 0.0);
    for (std::size_t i = 0; i <= d; ++i) {
      if (i == worst) continue;
      for (std::size_t k = 0; k < d; ++k) centroid[k] += simplex[i][k];
    }
    for (auto& c : centroid) c /= static_cast<double>(d);

    for (std::size_t k = 0; k < d; ++k) trial[k] = centroid[k] + (centroid[k] - simplex[worst][k]);
    const double f_reflect = eval(trial);
    if (f_reflect < values[best]) {
      for (std::size_t k = 0; k < d; ++k)
        trial2[k] = centroid[k] + 2.0 * (centroid[k] - simplex[worst][k]);
      const double f_expand = eval(trial2);
      if (f_expand < f_reflect) {
        simplex[worst] = trial2;
        values[worst] = f_expand;
      } else {
        simplex[worst] = trial;
        values[worst] = f_reflect;
      }
      continue;
    }
    if (f_reflect < values[second_worst]) {
      simplex[worst] = trial;
      values[worst] = f_reflect;
      continue;
    }
    const bool outside = f_reflect < values[worst];
    for (std::size_t k = 0; k < d; ++k) {
      trial2[k] = outside ? centroid[k] + 0.5 * (trial[k] - centroid[k])
                          : centroid[k] + 0.5 * (simplex[worst][k] - centroid[k]);
    }
    const double f_contract = eval(trial2);
    if (f_contract < std::min(f_reflect, values[worst])) {
      simplex[worst] = trial2;
      values[worst] = f_contract;
      continue;
    }
    for (std::size_t i = 0; i <= d; ++i) {
      if (i == best) continue;
      for (std::size_t k = 0; k < d; ++k)
        simplex[i][k] = simplex[best][k] + 0.5 * (simplex[i][k] - simplex[best][k]);
      values[i] = eval(simplex[i]);
    }
  }
  const auto best = static_cast<std::size_t>(
      std::min_element(values.begin(), values.end()) - values.begin());
  return {simplex[best], values[best], evals, converged};
}

}  // namespace

MinimizeResult nelder_mead(const Objective& f, std::vector<double> x0,
                           const NelderMeadOptions& options) {
  MinimizeResult result = nelder_mead_once(f, x0, options, options.max_evaluations);
  for (int r = 0; r < options.restarts && result.evaluations < options.max_evaluations; ++r) {
    MinimizeResult again =
        nelder_mead_once(f, result.x, options, options.max_evaluations - result.evaluations);
    again.evaluations += result.evaluations;
    const bool improved = again.value < result.value;
    if (improved) {
      result = std::move(again);
    } else {
      result.evaluations = again.evaluations;
      result.converged = result.converged && again.converged;
      break;
    }
  }
  return result;
}

MinimizeResult golden_section(const std::function<double(double)>& f, double lo, double hi,
                              double x_tol, int max_iterations) {
  const double inv_phi = (std::sqrt(5.0) - 1.0) / 2.0;
  double a = lo, b = hi;
  double c = b - inv_phi * (b - a);
  double d = a + inv_phi * (b - a);
  double fc = f(c), fd = f(d);
  int evals = 2;
  int it = 0;
  while (b - a > x_tol && it++ < max_iterations) {
    if (fc <= fd) {
      b = d;
      d = c;
      fd = fc;
      c = b - inv_phi * (b - a);
      fc = f(c);
    } else {
      a = c;
      c = d;
      fc = fd;
      d = a + inv_phi * (b - a);
      fd = f(d);
    }
    ++evals;
  }
  // The endpoints are candidates too: the minimum may sit on a bound.
  double best_x = fc <= fd ? c : d;
  double best_f = std::min(fc, fd);
  for (double edge : {lo, hi}) {
    const double fe = f(edge);
    ++evals;
    if (fe < best_f) {
      best_f = fe;
      best_x = edge;
    }
  }
  return {{best_x}, best_f, evals, b - a <= x_tol};
}

}  // namespace heavytail
