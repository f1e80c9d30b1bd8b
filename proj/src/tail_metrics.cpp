#include "heavytail/tail_metrics.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <ostream>
#include <utility>

#include "heavytail/errors.hpp"

namespace heavytail {

namespace {

void require_pair(std::span<const double> x, std::span<const double> y) {
  if (x.size() != y.size()) throw DataError("paired series differ in length");
  if (x.empty()) throw DataError("paired series are empty");
}

std::size_t level_count(double tau, std::size_t k) {
  const auto m = static_cast<std::size_t>(std::ceil(tau * static_cast<double>(k) - 1e-9));
  return std::clamp<std::size_t>(m, 1, k);
}

const char* side_name(TailSide side) { return side == TailSide::lower ? "lower" : "upper"; }

}  // namespace

std::vector<std::size_t> ordinal_ranks(std::span<const double> values) {
  // (value, index) keys give a strict order, so ties fall back to the
  // original index just as a stable sort would.
  std::vector<std::pair<double, std::size_t>> keyed(values.size());
  for (std::size_t i = 0; i < values.size(); ++i) keyed[i] = {values[i], i};
  std::sort(keyed.begin(), keyed.end());
  std::vector<std::size_t> ranks(values.size());
  for (std::size_t r = 0; r < keyed.size(); ++r) ranks[keyed[r].second] = r + 1;
  return ranks;
}

TailCurve tail_proxy(std::span<const double> x, std::span<const double> y,
                     std::span<const double> taus, TailSide side) {
  require_pair(x, y);
  const std::size_t k = x.size();
  for (double tau : taus) {
    if (!(tau > 0.0 && tau < 1.0)) throw InvalidParameter("tail_proxy: tau must lie in (0, 1)");
    if (tau * static_cast<double>(k) < 50.0) {
      throw InvalidParameter("tail_proxy: tau grid too extreme for sample size (need tau K >= 50)");
    }
  }
  const auto rx = ordinal_ranks(x);
  const auto ry = ordinal_ranks(y);
  // Joint rank depth: an observation is in the lower m-corner iff depth <= m.
  std::vector<std::size_t> depth(k);
  for (std::size_t i = 0; i < k; ++i) {
    depth[i] = side == TailSide::lower ? std::max(rx[i], ry[i])
                                       : std::max(k + 1 - rx[i], k + 1 - ry[i]);
  }
  std::vector<std::size_t> counts(k + 1, 0);
  for (auto d : depth) ++counts[d];
  std::partial_sum(counts.begin(), counts.end(), counts.begin());

  TailCurve curve;
  curve.side = side;
  curve.taus.assign(taus.begin(), taus.end());
  for (double tau : taus) {
    const std::size_t m = level_count(tau, k);
    curve.lambdas.push_back(static_cast<double>(counts[m]) / static_cast<double>(m));
  }
  return curve;
}

std::vector<double> log_spaced_taus(double lo, double hi, std::size_t count) {
  if (!(lo > 0.0 && hi > lo && hi < 1.0) || count < 2) {
    throw InvalidParameter("log_spaced_taus: need 0 < lo < hi < 1 and count >= 2");
  }
  std::vector<double> taus(count);
  const double step = std::log(hi / lo) / static_cast<double>(count - 1);
  for (std::size_t i = 0; i < count; ++i) taus[i] = lo * std::exp(step * static_cast<double>(i));
  taus.back() = hi;
  return taus;
}

JointQuantileSolver::JointQuantileSolver(std::span<const double> x, std::span<const double> y)
    : size_(x.size()) {
  require_pair(x, y);
  const auto rx = ordinal_ranks(x);
  const auto ry = ordinal_ranks(y);
  lower_cumulative_.assign(size_ + 1, 0);
  upper_cumulative_.assign(size_ + 1, 0);
  for (std::size_t i = 0; i < size_; ++i) {
    ++lower_cumulative_[std::max(rx[i], ry[i])];
    ++upper_cumulative_[std::max(size_ + 1 - rx[i], size_ + 1 - ry[i])];
  }
  std::partial_sum(lower_cumulative_.begin(), lower_cumulative_.end(), lower_cumulative_.begin());
  std::partial_sum(upper_cumulative_.begin(), upper_cumulative_.end(), upper_cumulative_.begin());
}

JointQuantileResult JointQuantileSolver::solve(double tau, TailSide side,
                                               QuantileSource source) const {
  if (!(tau > 0.0 && tau <= 1.0)) throw InvalidParameter("joint quantile: tau must lie in (0, 1]");
  const double k = static_cast<double>(size_);
  const double mass = side == TailSide::lower ? tau : 1.0 - tau;
  if (side == TailSide::lower ? tau * k < 20.0 : (1.0 - tau) * k < 20.0) {
    throw InvalidParameter("joint quantile: too few observations for tau " + std::to_string(tau));
  }
  const auto needed = static_cast<std::size_t>(std::ceil(mass * k - 1e-9));
  const auto& cumulative = side == TailSide::lower ? lower_cumulative_ : upper_cumulative_;
  // cumulative is nondecreasing in the level: bisect for the first level
  // holding the required joint mass.
  const auto it = std::lower_bound(cumulative.begin(), cumulative.end(), needed);
  if (it == cumulative.end()) throw Error("joint quantile: required joint mass is unattainable");
  const auto level = static_cast<std::size_t>(it - cumulative.begin());

  JointQuantileResult result{tau, 0.0, side, source};
  if (side == TailSide::lower) {
    result.tau_star = static_cast<double>(level) / k;
  } else {
    // level counts from the top: X >= q(tau*) with tau* = (K + 1 - level) / K
    result.tau_star = (k + 1.0 - static_cast<double>(level)) / k;
  }
  return result;
}

JointQuantileResult joint_quantile_empirical(std::span<const double> x,
                                             std::span<const double> y, double tau,
                                             TailSide side) {
  return JointQuantileSolver(x, y).solve(tau, side);
}

JointQuantileResult joint_quantile_model(const PairModel& model, double tau, TailSide side,
                                         std::size_t sim_draws, SeedSpec seed) {
  const SampleMatrix sim = sample_multivariate(model.to_spec(), sim_draws, seed);
  return JointQuantileSolver(sim.column(0), sim.column(1))
      .solve(tau, side, QuantileSource::model);
}

std::vector<double> default_discrepancy_taus() {
  return {0.01, 0.02, 0.03, 0.04, 0.05, 0.95, 0.96, 0.97, 0.98, 0.99};
}

TailSide side_for_tau(double tau) { return tau < 0.5 ? TailSide::lower : TailSide::upper; }

DiscrepancyReport discrepancy_between_samples(std::span<const double> data_x,
                                              std::span<const double> data_y,
                                              std::span<const double> sim_x,
                                              std::span<const double> sim_y,
                                              std::span<const double> taus, std::string label) {
  const JointQuantileSolver data(data_x, data_y);
  const JointQuantileSolver sim(sim_x, sim_y);
  DiscrepancyReport report;
  report.label = std::move(label);
  for (double tau : taus) {
    const TailSide side = side_for_tau(tau);
    DiscrepancyRow row{tau, sim.solve(tau, side, QuantileSource::model).tau_star,
                       data.solve(tau, side).tau_star};
    const double gap = row.tau_star_model - row.tau_star_data;
    report.value += gap * gap;
    report.rows.push_back(row);
  }
  return report;
}

DiscrepancyReport discrepancy(std::span<const double> x, std::span<const double> y,
                              const PairModel& fitted, std::span<const double> taus,
                              std::size_t sim_draws, SeedSpec seed, std::string label) {
  const SampleMatrix sim = sample_multivariate(fitted.to_spec(), sim_draws, seed);
  return discrepancy_between_samples(x, y, sim.column(0), sim.column(1), taus, std::move(label));
}

void write_tail_curve_csv(std::ostream& out, const TailCurve& curve) {
  out << "tau,lambda_" << side_name(curve.side) << '\n';
  for (std::size_t i = 0; i < curve.taus.size(); ++i) {
    out << format_real(curve.taus[i]) << ',' << format_real(curve.lambdas[i]) << '\n';
  }
}

void write_discrepancy_csv(std::ostream& out, const DiscrepancyReport& report) {
  out << "tau,side,tau_star_model,tau_star_data\n";
  for (const auto& row : report.rows) {
    out << format_real(row.tau) << ',' << side_name(side_for_tau(row.tau)) << ','
        << format_real(row.tau_star_model) << ',' << format_real(row.tau_star_data) << '\n';
  }
  out << "D,," << format_real(report.value) << ",\n";
}

}  // namespace heavytail
