#include "experiments.hpp"

#include <algorithm>
#include <cmath>
#include <utility>

#include "heavytail/parallel.hpp"

namespace heavytail::cli {

namespace {

// Stream families under the master seed; keeps each stage's draws disjoint.
enum Purpose : std::uint64_t {
  kMarginalFit = 1,
  kJointFit,
  kTrialModel,
  kTrialData,
  kTaildep,
  kBenchmark,
};

double squared_distance(const MarginalParams& a, const MarginalParams& b) {
  const double d[4] = {a.location - b.location, a.right_tail - b.right_tail,
                       a.left_tail - b.left_tail, a.scale - b.scale};
  return d[0] * d[0] + d[1] * d[1] + d[2] * d[2] + d[3] * d[3];
}

double in_range(Philox4x32& gen, const std::array<double, 2>& r) {
  return r[0] + (r[1] - r[0]) * gen.uniform();
}

}  // namespace

bool FitReport::all_converged() const {
  for (const auto& m : marginals)
    if (!m.converged) return false;
  if (joint)
    for (const auto& p : joint->pairs)
      if (!p.result.converged) return false;
  return true;
}

ModelSpec FitReport::fitted_model() const {
  std::vector<MarginalParams> params;
  for (const auto& m : marginals) params.push_back(m.params);
  ModelSpec spec = ModelSpec::independent(std::move(params));
  if (joint) {
    spec.upper_tail_corr = joint->upper_tail_corr;
    spec.lower_tail_corr = joint->lower_tail_corr;
    spec.body_corr = joint->body_corr;
  }
  return spec;
}

PairModel FitReport::pair_model(std::size_t i, std::size_t j) const {
  PairModel pm{marginals.at(i).params, marginals.at(j).params, {}};
  if (joint) {
    const auto a = static_cast<Eigen::Index>(i), b = static_cast<Eigen::Index>(j);
    pm.joint = {joint->upper_tail_corr(a, b), joint->lower_tail_corr(a, b), joint->body_corr(a, b)};
  }
  return pm;
}

FitReport run_fit(const SampleMatrix& data, const MarginalFitConfig& marginal_cfg,
                  JointFitConfig joint_cfg, std::uint64_t seed, unsigned threads) {
  FitReport report;
  report.labels = data.labels();
  report.marginals.resize(data.cols());
  const SeedSpec marginal_seed{derive_seed(seed, kMarginalFit)};
  parallel_for(data.cols(), threads, [&](std::size_t j) {
    report.marginals[j] = fit_marginal(data.column(j), marginal_cfg, marginal_seed.with_stream(j));
  });
  if (data.cols() >= 2) {
    std::vector<MarginalParams> params;
    for (const auto& m : report.marginals) params.push_back(m.params);
    joint_cfg.seed = SeedSpec{derive_seed(seed, kJointFit)};
    joint_cfg.threads = threads;
    report.joint = fit_all_pairs(data, params, joint_cfg);
  }
  return report;
}

bool ConvergenceReport::all_converged() const {
  return std::all_of(trials.begin(), trials.end(),
                     [](const ConvergenceTrial& t) { return t.converged; });
}

ModelSpec draw_trial_model(const ParamRanges& ranges, SeedSpec seed) {
  Philox4x32 gen(seed);
  std::vector<MarginalParams> marginals(2);
  for (auto& m : marginals) {
    m.location = in_range(gen, ranges.location);
    m.right_tail = in_range(gen, ranges.right_tail);
    m.left_tail = in_range(gen, ranges.left_tail);
    m.scale = in_range(gen, ranges.scale);
  }
  PairJointParams joint;
  joint.upper_tail_corr = in_range(gen, ranges.corr);
  joint.lower_tail_corr = in_range(gen, ranges.corr);
  joint.body_corr = in_range(gen, ranges.corr);
  return ModelSpec::pair(marginals[0], marginals[1], joint);
}

ConvergenceReport run_convergence(const ConvergenceSettings& settings,
                                  const MarginalFitConfig& marginal_cfg,
                                  const JointFitConfig& joint_cfg, std::uint64_t seed,
                                  unsigned threads) {
  const std::size_t n_powers = settings.powers.size();
  const auto n_trials = static_cast<std::size_t>(settings.trials);
  const int max_power = *std::max_element(settings.powers.begin(), settings.powers.end());
  const std::size_t max_size = settings.base_size << max_power;

  ConvergenceReport report;
  report.truths.resize(n_trials);
  report.trials.resize(n_trials * n_powers);

  parallel_for(n_trials, threads, [&](std::size_t t) {
    const ModelSpec truth =
        draw_trial_model(settings.ranges, SeedSpec{derive_seed(seed, kTrialModel, t)});
    report.truths[t] = truth;
    const SampleMatrix full =
        sample_multivariate(truth, max_size, SeedSpec{derive_seed(seed, kTrialData, t)});
    const PairJointParams true_joint{truth.upper_tail_corr(0, 1), truth.lower_tail_corr(0, 1),
                                     truth.body_corr(0, 1)};
    for (std::size_t p = 0; p < n_powers; ++p) {
      const std::size_t size = settings.base_size << settings.powers[p];
      const std::span<const double> x = full.column(0).first(size);
      const std::span<const double> y = full.column(1).first(size);

      const SeedSpec mseed{derive_seed(seed, kMarginalFit, t)};
      const MarginalFitResult fx = fit_marginal(x, marginal_cfg, mseed.with_stream(0));
      const MarginalFitResult fy = fit_marginal(y, marginal_cfg, mseed.with_stream(1));
      JointFitConfig jc = joint_cfg;
      jc.seed = SeedSpec{derive_seed(seed, kJointFit, t)};
      const JointFitResult fj = fit_pair(x, y, fx.params, fy.params, jc);

      const double marginal_sq = squared_distance(fx.params, truth.marginals[0]) +
                                 squared_distance(fy.params, truth.marginals[1]);
      const double du = fj.params.upper_tail_corr - true_joint.upper_tail_corr;
      const double dl = fj.params.lower_tail_corr - true_joint.lower_tail_corr;
      const double db = fj.params.body_corr - true_joint.body_corr;

      ConvergenceTrial& out = report.trials[p * n_trials + t];
      out.power = settings.powers[p];
      out.size = size;
      out.trial = static_cast<int>(t);
      out.marginal_error = std::sqrt(marginal_sq);
      out.all_error = std::sqrt(marginal_sq + du * du + dl * dl + db * db);
      out.converged = fx.converged && fy.converged && fj.converged;
    }
  });

  for (std::size_t p = 0; p < n_powers; ++p) {
    ConvergenceRow row;
    row.power = settings.powers[p];
    row.size = settings.base_size << settings.powers[p];
    row.trials = settings.trials;
    for (std::size_t t = 0; t < n_trials; ++t) {
      const ConvergenceTrial& tr = report.trials[p * n_trials + t];
      row.marginal_error += tr.marginal_error;
      row.all_error += tr.all_error;
      if (!tr.converged) ++row.nonconverged;
    }
    row.marginal_error /= static_cast<double>(n_trials);
    row.all_error /= static_cast<double>(n_trials);
    report.rows.push_back(row);
  }
  return report;
}

ModelSpec apply_parameter(ModelSpec m, const std::string& name, double value) {
  if (m.dim() == 2) {
    MarginalParams& p1 = m.marginals[0];
    MarginalParams& p2 = m.marginals[1];
    const std::pair<const char*, double*> marginal[] = {
        {"mu1", &p1.location},  {"mu2", &p2.location},    {"u1", &p1.right_tail},
        {"u2", &p2.right_tail}, {"v1", &p1.left_tail},    {"v2", &p2.left_tail},
        {"sigma1", &p1.scale},  {"sigma2", &p2.scale}};
    for (const auto& [key, target] : marginal) {
      if (name == key) {
        *target = value;
        return m;
      }
    }
    const std::pair<const char*, Eigen::MatrixXd*> corr[] = {
        {"rho1", &m.upper_tail_corr}, {"rho2", &m.lower_tail_corr}, {"rho3", &m.body_corr}};
    for (const auto& [key, target] : corr) {
      if (name == key) {
        (*target)(0, 1) = (*target)(1, 0) = value;
        return m;
      }
    }
  }
  throw ConfigError("taildep.parameter: unknown parameter '" + name +
                    "' (expected mu1, mu2, u1, u2, v1, v2, sigma1, sigma2, rho1, rho2 or rho3)");
}

TaildepReport run_taildep(const TaildepSettings& settings, std::uint64_t seed, unsigned threads) {
  std::vector<ModelSpec> models;
  for (double v : settings.values) {
    models.push_back(apply_parameter(settings.base, settings.parameter, v));
    models.back().validate();
  }
  const std::size_t draws = std::max(settings.draws, settings.correlation_draws);
  const SeedSpec common{derive_seed(seed, kTaildep)};

  TaildepReport report;
  report.parameter = settings.parameter;
  report.points.resize(models.size());
  parallel_for(models.size(), threads, [&](std::size_t i) {
    const SampleMatrix s = sample_multivariate(models[i], draws, common);
    TaildepPoint& pt = report.points[i];
    pt.value = settings.values[i];
    pt.correlation = pearson_correlation(s.column(0).first(settings.correlation_draws),
                                         s.column(1).first(settings.correlation_draws));
    const auto x = s.column(0).first(settings.draws);
    const auto y = s.column(1).first(settings.draws);
    pt.lower = tail_proxy(x, y, settings.taus, TailSide::lower);
    pt.upper = tail_proxy(x, y, settings.taus, TailSide::upper);
  });
  return report;
}

DiscrepancyTable run_discrepancy(const SampleMatrix& data, const DiscrepancySettings& settings,
                                 const MarginalFitConfig& marginal_cfg,
                                 JointFitConfig joint_cfg, std::uint64_t seed,
                                 unsigned threads) {
  if (data.cols() < 2) throw DataError("discrepancy needs at least two columns");
  DiscrepancyTable table;
  table.fit = run_fit(data, marginal_cfg, joint_cfg, seed, threads);
  std::size_t index = 0;
  for (std::size_t i = 0; i < data.cols(); ++i) {
    for (std::size_t j = i + 1; j < data.cols(); ++j, ++index) {
      BenchmarkConfig bc;
      bc.sim_draws = settings.sim_draws;
      bc.taus = settings.taus;
      bc.seed = SeedSpec{derive_seed(seed, kBenchmark, index)};
      bc.threads = threads;
      table.pairs.push_back({i, j,
                             benchmark_discrepancy(data.column(i), data.column(j),
                                                   settings.families, table.fit.pair_model(i, j),
                                                   bc)});
    }
  }
  return table;
}

}  // namespace heavytail::cli
