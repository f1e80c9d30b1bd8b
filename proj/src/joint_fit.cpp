#include "heavytail/joint_fit.hpp"

#include <algorithm>
#include <cmath>
#include <ostream>
#include <string>
#include <tuple>

#include "heavytail/errors.hpp"
#include "heavytail/optimize.hpp"
#include "heavytail/parallel.hpp"

namespace heavytail {

double CornerTransforms::f(double x) const { return std::log(std::max(x - threshold, 1.0)); }

double CornerTransforms::g(double x) const { return std::log(std::max(-x - threshold, 1.0)); }

void CornerTransforms::validate() const {
  if (!(threshold >= 0.0) || !std::isfinite(threshold)) {
    throw InvalidParameter("corner threshold must be finite and nonnegative");
  }
}

namespace {

void require_same_length(std::span<const double> x, std::span<const double> y) {
  if (x.size() != y.size()) {
    throw DataError("paired series differ in length (" + std::to_string(x.size()) + " vs " +
                    std::to_string(y.size()) + ")");
  }
  if (x.empty()) throw DataError("paired series are empty");
}

double apply(CornerMap h, const CornerTransforms& t, double v) {
  return h == CornerMap::f ? t.f(v) : t.g(v);
}

double type1_quantile(std::vector<double> values, double p) {
  const auto k = static_cast<std::size_t>(
      std::ceil(p * static_cast<double>(values.size()) - 1e-12));
  const std::size_t index = std::clamp<std::size_t>(k, 1, values.size()) - 1;
  std::nth_element(values.begin(), values.begin() + static_cast<std::ptrdiff_t>(index),
                   values.end());
  return values[index];
}

double to_unbounded(double rho) {
  return std::atanh(std::clamp(rho, -kMaxLatentCorr, kMaxLatentCorr) / kMaxLatentCorr *
                    (1.0 - 1e-12));
}
double to_bounded(double theta) { return kMaxLatentCorr * std::tanh(theta); }

}  // namespace

double corner_moment(std::span<const double> x, std::span<const double> y, CornerMap h1,
                     CornerMap h2, const CornerTransforms& t) {
  t.validate();
  require_same_length(x, y);
  double sum = 0.0;
  for (std::size_t k = 0; k < x.size(); ++k) sum += apply(h1, t, x[k]) * apply(h2, t, y[k]);
  return sum / static_cast<double>(x.size());
}

void ThresholdRule::validate() const {
  if (kind == Kind::fixed) {
    CornerTransforms{value}.validate();
  } else if (!(value > 0.5 && value < 1.0)) {
    throw InvalidParameter("threshold quantile level must lie in (0.5, 1)");
  }
}

double ThresholdRule::resolve(std::span<const double> x, std::span<const double> y) const {
  validate();
  if (kind == Kind::fixed) return value;
  double c = 0.0;
  for (auto series : {x, y}) {
    std::vector<double> copy(series.begin(), series.end());
    c = std::max(c, std::fabs(type1_quantile(copy, 1.0 - value)));
    c = std::max(c, std::fabs(type1_quantile(std::move(copy), value)));
  }
  return c;
}

void JointFitConfig::validate() const {
  if (sim_draws < 100000) throw InvalidParameter("sim_draws must be at least 100000");
  threshold.validate();
  if (max_alternations < 1) throw InvalidParameter("max_alternations must be positive");
  if (!(rho_tol > 0.0)) throw InvalidParameter("rho_tol must be positive");
  if (!(psd_floor > 0.0)) throw InvalidParameter("psd_floor must be positive");
}

PairMoments empirical_pair_moments(std::span<const double> x, std::span<const double> y,
                                   const CornerTransforms& t) {
  require_same_length(x, y);
  PairMoments sums{};
  for (std::size_t k = 0; k < x.size(); ++k) {
    const double fx = t.f(x[k]), gx = t.g(x[k]), fy = t.f(y[k]), gy = t.g(y[k]);
    sums[0] += x[k] * y[k];
    sums[1] += fx * fy;
    sums[2] += gx * gy;
    sums[3] += fx * gy;
    sums[4] += gx * fy;
  }
  for (auto& s : sums) s /= static_cast<double>(x.size());
  return sums;
}

PairMomentProblem::PairMomentProblem(std::span<const double> x, std::span<const double> y,
                                     const MarginalParams& marg_x, const MarginalParams& marg_y,
                                     const JointFitConfig& cfg)
    : marg_x_(marg_x), marg_y_(marg_y) {
  cfg.validate();
  marg_x.validate();
  marg_y.validate();
  require_same_length(x, y);
  for (std::size_t k = 0; k < x.size(); ++k) {
    if (!std::isfinite(x[k]) || !std::isfinite(y[k])) {
      throw DataError("non-finite observation at row " + std::to_string(k + 1));
    }
  }
  transforms_.threshold = cfg.threshold.resolve(x, y);
  data_ = empirical_pair_moments(x, y, transforms_);

  const std::size_t m = cfg.sim_draws;
  for (int b = 0; b < 3; ++b) {
    base_a_[b].resize(m);
    base_b_[b].resize(m);
  }
  Philox4x32 gen(cfg.seed);
  for (std::size_t k = 0; k < m; ++k) {
    for (int b = 0; b < 3; ++b) {
      base_a_[b][k] = draw_normal(gen);
      base_b_[b][k] = draw_normal(gen);
    }
  }
  first_.resize(m);
  first_f_.resize(m);
  first_g_.resize(m);
  for (std::size_t k = 0; k < m; ++k) {
    const double yi = marg_x_.location + std::exp(marg_x_.right_tail * base_a_[0][k]) -
                      std::exp(marg_x_.left_tail * base_a_[1][k]) +
                      marg_x_.scale * base_a_[2][k];
    first_[k] = yi;
    first_f_[k] = transforms_.f(yi);
    first_g_[k] = transforms_.g(yi);
    if (first_f_[k] != 0.0 || first_g_[k] != 0.0) corner_index_.push_back(k);
  }
}

double PairMomentProblem::second_member(std::size_t k, double s1, double c1, double s2,
                                        double c2, double s3, double c3) const {
  const double z1 = s1 * base_a_[0][k] + c1 * base_b_[0][k];
  const double z2 = s2 * base_a_[1][k] + c2 * base_b_[1][k];
  const double z3 = s3 * base_a_[2][k] + c3 * base_b_[2][k];
  return marg_y_.location + std::exp(marg_y_.right_tail * z1) -
         std::exp(marg_y_.left_tail * z2) + marg_y_.scale * z3;
}

PairMoments PairMomentProblem::model_moments(const PairJointParams& candidate) const {
  candidate.validate();
  const double s1 = candidate.upper_tail_corr, c1 = std::sqrt(1.0 - s1 * s1);
  const double s2 = candidate.lower_tail_corr, c2 = std::sqrt(1.0 - s2 * s2);
  const double s3 = candidate.body_corr, c3 = std::sqrt(1.0 - s3 * s3);
  PairMoments sums{};
  for (std::size_t k = 0; k < first_.size(); ++k) {
    const double yj = second_member(k, s1, c1, s2, c2, s3, c3);
    const double fj = transforms_.f(yj), gj = transforms_.g(yj);
    sums[0] += first_[k] * yj;
    sums[1] += first_f_[k] * fj;
    sums[2] += first_g_[k] * gj;
    sums[3] += first_f_[k] * gj;
    sums[4] += first_g_[k] * fj;
  }
  for (auto& s : sums) s /= static_cast<double>(first_.size());
  return sums;
}

SmmObjective PairMomentProblem::objective(const PairJointParams& candidate) const {
  const PairMoments model = model_moments(candidate);
  SmmObjective out;
  const double rb = model[0] - data_[0];
  out.body = rb * rb;
  for (int i = 1; i < 5; ++i) {
    const double r = model[i] - data_[i];
    out.tails += r * r;
  }
  return out;
}

double PairMomentProblem::tails_objective(const PairJointParams& candidate) const {
  const double s1 = candidate.upper_tail_corr, c1 = std::sqrt(1.0 - s1 * s1);
  const double s2 = candidate.lower_tail_corr, c2 = std::sqrt(1.0 - s2 * s2);
  const double s3 = candidate.body_corr, c3 = std::sqrt(1.0 - s3 * s3);
  std::array<double, 4> sums{};
  for (std::size_t k : corner_index_) {
    const double yj = second_member(k, s1, c1, s2, c2, s3, c3);
    const double fj = transforms_.f(yj), gj = transforms_.g(yj);
    sums[0] += first_f_[k] * fj;
    sums[1] += first_g_[k] * gj;
    sums[2] += first_f_[k] * gj;
    sums[3] += first_g_[k] * fj;
  }
  double total = 0.0;
  for (int i = 0; i < 4; ++i) {
    const double r = sums[i] / static_cast<double>(first_.size()) - data_[i + 1];
    total += r * r;
  }
  return total;
}

void PairMomentProblem::prepare_body(double upper_tail_corr, double lower_tail_corr) {
  const double s1 = upper_tail_corr, c1 = std::sqrt(1.0 - s1 * s1);
  const double s2 = lower_tail_corr, c2 = std::sqrt(1.0 - s2 * s2);
  // Y_j = fixed_k + sigma_j (rho Z'_a + sqrt(1 - rho^2) Z'_b) on the body block.
  double fixed = 0.0, along = 0.0, across = 0.0;
  for (std::size_t k = 0; k < first_.size(); ++k) {
    const double z1 = s1 * base_a_[0][k] + c1 * base_b_[0][k];
    const double z2 = s2 * base_a_[1][k] + c2 * base_b_[1][k];
    const double part = marg_y_.location + std::exp(marg_y_.right_tail * z1) -
                        std::exp(marg_y_.left_tail * z2);
    fixed += first_[k] * part;
    along += first_[k] * base_a_[2][k];
    across += first_[k] * base_b_[2][k];
  }
  const double m = static_cast<double>(first_.size());
  body_fixed_ = fixed / m;
  body_a_ = marg_y_.scale * along / m;
  body_b_ = marg_y_.scale * across / m;
}

double PairMomentProblem::body_objective(double body_corr) const {
  const double model =
      body_fixed_ + body_corr * body_a_ + std::sqrt(1.0 - body_corr * body_corr) * body_b_;
  const double r = model - data_[0];
  return r * r;
}

SmmObjective smm_objective(const PairJointParams& candidate, const PairData& data,
                           const JointFitConfig& cfg) {
  const PairMomentProblem problem(data.x, data.y, data.marg_x, data.marg_y, cfg);
  return problem.objective(candidate);
}

double pearson_correlation(std::span<const double> x, std::span<const double> y) {
  require_same_length(x, y);
  const double k = static_cast<double>(x.size());
  double mx = 0.0, my = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    mx += x[i];
    my += y[i];
  }
  mx /= k;
  my /= k;
  double sxy = 0.0, sxx = 0.0, syy = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double dx = x[i] - mx, dy = y[i] - my;
    sxy += dx * dy;
    sxx += dx * dx;
    syy += dy * dy;
  }
  if (sxx <= 0.0 || syy <= 0.0) return 0.0;
  return sxy / std::sqrt(sxx * syy);
}

JointFitResult fit_pair(std::span<const double> x, std::span<const double> y,
                        const MarginalParams& marg_x, const MarginalParams& marg_y,
                        const JointFitConfig& cfg) {
  // The five moments are symmetric in (x, y) as a set; evaluating in a
  // canonical order makes the estimate exactly symmetric too.
  const auto key_x = std::tie(marg_x.location, marg_x.right_tail, marg_x.left_tail, marg_x.scale);
  const auto key_y = std::tie(marg_y.location, marg_y.right_tail, marg_y.left_tail, marg_y.scale);
  const bool swap = key_y < key_x ||
                    (key_y == key_x && std::lexicographical_compare(y.begin(), y.end(),
                                                                    x.begin(), x.end()));
  PairMomentProblem problem = swap ? PairMomentProblem(y, x, marg_y, marg_x, cfg)
                                   : PairMomentProblem(x, y, marg_x, marg_y, cfg);

  PairJointParams p;
  p.body_corr = std::clamp(pearson_correlation(x, y), -kMaxLatentCorr, kMaxLatentCorr);
  p.upper_tail_corr = p.lower_tail_corr = std::clamp(p.body_corr, 0.0, 0.9);

  NelderMeadOptions nm;
  nm.initial_step = 0.2;
  nm.x_tol = 1e-6;
  nm.max_evaluations = 600;
  nm.restarts = 1;

  JointFitResult result;
  result.threshold = problem.threshold();
  for (int it = 1; it <= cfg.max_alternations; ++it) {
    result.alternations = it;
    const PairJointParams previous = p;

    problem.prepare_body(p.upper_tail_corr, p.lower_tail_corr);
    const auto body = golden_section([&](double rho) { return problem.body_objective(rho); },
                                     -kMaxLatentCorr, kMaxLatentCorr, 1e-8);
    p.body_corr = body.x[0];

    const auto tails = nelder_mead(
        [&](const std::vector<double>& theta) {
          PairJointParams q = p;
          q.upper_tail_corr = to_bounded(theta[0]);
          q.lower_tail_corr = to_bounded(theta[1]);
          return problem.tails_objective(q);
        },
        {to_unbounded(p.upper_tail_corr), to_unbounded(p.lower_tail_corr)}, nm);
    p.upper_tail_corr = to_bounded(tails.x[0]);
    p.lower_tail_corr = to_bounded(tails.x[1]);

    const double change = std::max({std::fabs(p.body_corr - previous.body_corr),
                                    std::fabs(p.upper_tail_corr - previous.upper_tail_corr),
                                    std::fabs(p.lower_tail_corr - previous.lower_tail_corr)});
    if (change < cfg.rho_tol) {
      result.converged = true;
      break;
    }
  }
  result.params = p;
  const SmmObjective final_objective = problem.objective(p);
  result.objective_body = final_objective.body;
  result.objective_tails = final_objective.tails;
  return result;
}

Eigen::MatrixXd repair_psd(const Eigen::MatrixXd& m, double floor) {
  if (m.rows() != m.cols() || m.rows() == 0) {
    throw InvalidParameter("repair_psd needs a non-empty square matrix");
  }
  if (!(floor > 0.0)) throw InvalidParameter("repair_psd floor must be positive");
  if (!m.allFinite() || !m.isApprox(m.transpose(), 1e-12)) {
    throw InvalidParameter("repair_psd needs a finite symmetric matrix");
  }
  if (min_eigenvalue(m) >= floor) return m;

  const Eigen::MatrixXd sym = 0.5 * (m + m.transpose());
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(sym);
  double clip = floor;
  for (int attempt = 0; attempt < 64; ++attempt, clip *= 2.0) {
    const Eigen::VectorXd values = solver.eigenvalues().cwiseMax(clip);
    Eigen::MatrixXd r =
        solver.eigenvectors() * values.asDiagonal() * solver.eigenvectors().transpose();
    const Eigen::VectorXd inv_sqrt = r.diagonal().cwiseSqrt().cwiseInverse();
    r = inv_sqrt.asDiagonal() * r * inv_sqrt.asDiagonal();
    r = 0.5 * (r + r.transpose()).eval();
    r.diagonal().setOnes();
    if (min_eigenvalue(r) >= floor) return r;
  }
  throw Error("repair_psd failed to reach the eigenvalue floor");
}

CorrelationAssembly assemble_correlations(std::size_t n,
                                          std::vector<CorrelationAssembly::PairEntry> pairs,
                                          double psd_floor) {
  const auto dim = static_cast<Eigen::Index>(n);
  CorrelationAssembly out;
  out.upper_tail_corr = Eigen::MatrixXd::Identity(dim, dim);
  out.lower_tail_corr = Eigen::MatrixXd::Identity(dim, dim);
  out.body_corr = Eigen::MatrixXd::Identity(dim, dim);
  for (const auto& entry : pairs) {
    const auto i = static_cast<Eigen::Index>(entry.i), j = static_cast<Eigen::Index>(entry.j);
    out.upper_tail_corr(i, j) = out.upper_tail_corr(j, i) = entry.result.params.upper_tail_corr;
    out.lower_tail_corr(i, j) = out.lower_tail_corr(j, i) = entry.result.params.lower_tail_corr;
    out.body_corr(i, j) = out.body_corr(j, i) = entry.result.params.body_corr;
    if (!entry.result.converged) {
      out.warnings.push_back("pair (" + std::to_string(entry.i + 1) + ", " +
                             std::to_string(entry.j + 1) + ") did not converge");
    }
  }
  Eigen::MatrixXd* mats[3] = {&out.upper_tail_corr, &out.lower_tail_corr, &out.body_corr};
  for (int b = 0; b < 3; ++b) {
    out.min_eig_before[b] = min_eigenvalue(*mats[b]);
    out.repaired[b] = out.min_eig_before[b] < psd_floor;
    if (out.repaired[b]) *mats[b] = repair_psd(*mats[b], psd_floor);
    out.min_eig_after[b] = min_eigenvalue(*mats[b]);
  }
  out.pairs = std::move(pairs);
  return out;
}

CorrelationAssembly fit_all_pairs(const SampleMatrix& data,
                                  const std::vector<MarginalParams>& marginals,
                                  const JointFitConfig& cfg) {
  cfg.validate();
  const std::size_t n = data.cols();
  if (marginals.size() != n) {
    throw InvalidParameter("fit_all_pairs: " + std::to_string(marginals.size()) +
                           " marginals for " + std::to_string(n) + " columns");
  }
  std::vector<CorrelationAssembly::PairEntry> pairs;
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = i + 1; j < n; ++j) pairs.push_back({i, j, {}});
  }
  parallel_for(pairs.size(), resolve_thread_count(cfg.threads), [&](std::size_t index) {
    JointFitConfig local = cfg;
    local.seed = cfg.seed.with_stream(index);
    auto& entry = pairs[index];
    entry.result = fit_pair(data.column(entry.i), data.column(entry.j), marginals[entry.i],
                            marginals[entry.j], local);
  });
  return assemble_correlations(n, std::move(pairs), cfg.psd_floor);
}

void write_matrix_csv(std::ostream& out, const Eigen::MatrixXd& m,
                      const std::vector<std::string>& labels) {
  out << "label";
  for (const auto& l : labels) out << ',' << l;
  out << '\n';
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    out << labels[static_cast<std::size_t>(i)];
    for (Eigen::Index j = 0; j < m.cols(); ++j) out << ',' << format_real(m(i, j));
    out << '\n';
  }
}

void write_repair_report(std::ostream& out, const CorrelationAssembly& assembly) {
  static const char* names[3] = {"upper_tail_corr", "lower_tail_corr", "body_corr"};
  out << "matrix,repaired,min_eig_before,min_eig_after\n";
  for (int b = 0; b < 3; ++b) {
    out << names[b] << ',' << (assembly.repaired[b] ? 1 : 0) << ','
        << format_real(assembly.min_eig_before[b]) << ','
        << format_real(assembly.min_eig_after[b]) << '\n';
  }
}

}  // namespace heavytail
