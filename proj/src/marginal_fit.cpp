#include "heavytail/marginal_fit.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include "heavytail/errors.hpp"
#include "heavytail/optimize.hpp"

namespace heavytail {

MomentVector sample_moments(std::span<const double> y) {
  if (y.empty()) throw DataError("sample_moments: empty input");
  double s1 = 0.0, s2 = 0.0, s3 = 0.0, s4 = 0.0;
  for (double v : y) {
    if (!std::isfinite(v)) throw DataError("sample_moments: non-finite observation");
    const double v2 = v * v;
    s1 += v;
    s2 += v2;
    s3 += v2 * v;
    s4 += v2 * v2;
  }
  const double k = static_cast<double>(y.size());
  MomentVector m;
  m.raw = {s1 / k, s2 / k, s3 / k, s4 / k};
  return m;
}

void MarginalFitConfig::validate() const {
  if (max_outer_iters < 1) throw InvalidParameter("max_outer_iters must be positive");
  if (!(block_tol > 0.0)) throw InvalidParameter("block_tol must be positive");
  if (!(right_tail_max > 0.0 && right_tail_max <= 3.0) ||
      !(left_tail_max > 0.0 && left_tail_max <= 3.0)) {
    throw InvalidParameter("tail bounds must lie in (0, 3]");
  }
  if (!(scale_max > 0.0)) throw InvalidParameter("scale_max must be positive");
  if (restarts < 0) throw InvalidParameter("restarts must be nonnegative");
}

namespace {

struct Blocks {
  const MomentVector& target;
  const MarginalFitConfig& cfg;

  double weight(int order) const {
    return cfg.scale_high_moments && order >= 3 ? 1.0 / std::max(1.0, std::fabs(target[order]))
                                                : 1.0;
  }

  double location_scale(const MarginalParams& p) const {
    const double r1 = moment_closed_form(p, 1) - target[1];
    const double r2 = moment_closed_form(p, 2) - target[2];
    return r1 * r1 + r2 * r2;
  }

  double tails(const MarginalParams& p) const {
    const double r3 = (moment_closed_form(p, 3) - target[3]) * weight(3);
    const double r4 = (moment_closed_form(p, 4) - target[4]) * weight(4);
    return r3 * r3 + r4 * r4;
  }
};

// Squared reparameterization keeps u, v, sigma nonnegative; clamping applies
// the configured upper bounds.
double from_root(double root, double upper) { return std::min(root * root, upper); }
double to_root(double value) { return std::sqrt(std::max(value, 0.0)); }

bool residuals_within(const MomentVector& target, const MarginalParams& p, double tol) {
  for (int i = 1; i <= 4; ++i) {
    const double r = moment_closed_form(p, i) - target[i];
    if (!(std::fabs(r) / std::max(1.0, std::fabs(target[i])) <= tol)) return false;
  }
  return true;
}

MomentVector residuals_of(const MomentVector& target, const MarginalParams& p) {
  MomentVector r;
  for (int i = 1; i <= 4; ++i) r[i] = moment_closed_form(p, i) - target[i];
  return r;
}

}  // namespace

MarginalFitResult fit_marginal_moments(const MomentVector& m, const MarginalParams& start,
                                       const MarginalFitConfig& cfg) {
  cfg.validate();
  const Blocks blocks{m, cfg};
  MarginalParams p = start;
  p.right_tail = std::min(p.right_tail, cfg.right_tail_max);
  p.left_tail = std::min(p.left_tail, cfg.left_tail_max);
  p.scale = std::min(p.scale, cfg.scale_max);

  NelderMeadOptions nm;
  nm.initial_step = 0.05;
  nm.x_tol = 1e-12;
  nm.max_evaluations = 3000;
  nm.restarts = 2;

  MarginalFitResult result;
  auto total = [&](const MarginalParams& q) { return blocks.location_scale(q) + blocks.tails(q); };

  // One block update: the block minimizes its own objective and the move is
  // kept only if that objective drops. Returns the drop.
  auto update = [&](auto own, auto get, auto set) {
    const double before = own(p);
    const auto fit = nelder_mead(
        [&](const std::vector<double>& x) {
          MarginalParams q = p;
          set(q, x);
          return own(q);
        },
        get(p), nm);
    if (fit.value < before) set(p, fit.x);
    return before - own(p);
  };

  const auto get_a = [](const MarginalParams& q) {
    return std::vector<double>{q.location, to_root(q.scale)};
  };
  const auto set_a = [&](MarginalParams& q, const std::vector<double>& x) {
    q.location = x[0];
    q.scale = from_root(x[1], cfg.scale_max);
  };
  const auto get_b = [](const MarginalParams& q) {
    return std::vector<double>{to_root(q.right_tail), to_root(q.left_tail)};
  };
  const auto set_b = [&](MarginalParams& q, const std::vector<double>& x) {
    q.right_tail = from_root(x[0], cfg.right_tail_max);
    q.left_tail = from_root(x[1], cfg.left_tail_max);
  };
  const auto own_a = [&](const MarginalParams& q) { return blocks.location_scale(q); };
  const auto own_b = [&](const MarginalParams& q) { return blocks.tails(q); };

  int stalled = 0;
  double previous_sweep = std::numeric_limits<double>::infinity();
  for (int iter = 1; iter <= cfg.max_outer_iters; ++iter) {
    result.iterations = iter;
    const double drop_a = update(own_a, get_a, set_a);
    const double drop_b = update(own_b, get_b, set_b);
    const double sweep = total(p);
    result.objective_trace.push_back(sweep);

    const bool small_steps = drop_a < cfg.block_tol && drop_b < cfg.block_tol;
    if (small_steps && residuals_within(m, p, 10.0 * cfg.block_tol)) {
      result.converged = true;
      break;
    }
    // Slow linear progress is fine; a sweep only stalls when the combined
    // objective stops shrinking.
    if (small_steps && !(sweep < 0.99 * previous_sweep)) {
      if (++stalled >= 3) break;
    } else {
      stalled = 0;
    }
    previous_sweep = sweep;
  }
  result.params = p;
  result.residuals = residuals_of(m, p);
  return result;
}

MarginalFitResult fit_marginal(std::span<const double> y, const MarginalFitConfig& cfg,
                               SeedSpec seed) {
  cfg.validate();
  if (y.size() < 100) {
    throw DataError("fit_marginal needs at least 100 observations, got " +
                    std::to_string(y.size()));
  }
  for (double v : y) {
    if (!std::isfinite(v)) throw DataError("fit_marginal: non-finite observation");
  }

  double mean = 0.0;
  for (double v : y) mean += v;
  mean /= static_cast<double>(y.size());

  std::vector<double> work(y.begin(), y.end());
  for (auto& v : work) v -= mean;
  const MomentVector centered = sample_moments(work);
  const double sd = std::sqrt(std::max(centered[2] - centered[1] * centered[1], 0.0));

  // Stage 1 on centered data, best over the default start and restarts.
  MarginalParams start{0.0, 0.3, 0.3, std::min(sd, cfg.scale_max)};
  MarginalFitResult stage_one = fit_marginal_moments(centered, start, cfg);
  auto final_objective = [](const MarginalFitResult& r) {
    return r.objective_trace.empty() ? std::numeric_limits<double>::infinity()
                                     : r.objective_trace.back();
  };
  Philox4x32 gen(seed);
  for (int r = 0; r < cfg.restarts; ++r) {
    MarginalParams perturbed = start;
    perturbed.right_tail = gen.uniform();
    perturbed.left_tail = gen.uniform();
    MarginalFitResult candidate = fit_marginal_moments(centered, perturbed, cfg);
    if (final_objective(candidate) < final_objective(stage_one)) stage_one = std::move(candidate);
  }

  // Stage 2: subtract the stage-1 location (no re-centering) and refit.
  const double shift = stage_one.params.location;
  for (auto& v : work) v -= shift;
  const MomentVector shifted = sample_moments(work);
  MarginalParams restart = stage_one.params;
  restart.location = 0.0;
  MarginalFitResult stage_two = fit_marginal_moments(shifted, restart, cfg);

  MarginalFitResult result;
  result.params = stage_two.params;
  result.params.location += mean + shift;
  result.converged = stage_two.converged;
  result.iterations = stage_one.iterations + stage_two.iterations;
  result.objective_trace = stage_one.objective_trace;
  result.stage_two_offset = result.objective_trace.size();
  result.objective_trace.insert(result.objective_trace.end(), stage_two.objective_trace.begin(),
                                stage_two.objective_trace.end());
  result.residuals = residuals_of(sample_moments(y), result.params);
  return result;
}

}  // namespace heavytail
