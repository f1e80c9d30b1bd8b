#include "heavytail/model.hpp"

#include <cmath>
#include <string>

#include "heavytail/errors.hpp"

namespace heavytail {

namespace {

constexpr double kStructureTol = 1e-10;

void require_finite(double value, const char* name) {
  if (!std::isfinite(value)) {
    throw InvalidParameter(std::string(name) + " must be finite");
  }
}

void check_correlation(const Eigen::MatrixXd& m, std::size_t n, const std::string& name) {
  const auto dim = static_cast<Eigen::Index>(n);
  if (m.rows() != dim || m.cols() != dim) {
    throw InvalidParameter(name + " must be " + std::to_string(n) + "x" + std::to_string(n));
  }
  for (Eigen::Index i = 0; i < dim; ++i) {
    if (std::fabs(m(i, i) - 1.0) > kStructureTol) {
      throw InvalidParameter(name + " must have unit diagonal");
    }
    for (Eigen::Index j = 0; j < dim; ++j) {
      if (!std::isfinite(m(i, j))) throw InvalidParameter(name + " has a non-finite entry");
      if (std::fabs(m(i, j) - m(j, i)) > kStructureTol) {
        throw InvalidParameter(name + " must be symmetric");
      }
    }
  }
  const double lowest = min_eigenvalue(m);
  if (lowest < -kStructureTol) throw NotPsdError(name, lowest);
}

}  // namespace

void MarginalParams::validate() const {
  require_finite(location, "location");
  require_finite(right_tail, "right_tail");
  require_finite(left_tail, "left_tail");
  require_finite(scale, "scale");
  if (right_tail < 0.0 || left_tail < 0.0 || scale < 0.0) {
    throw InvalidParameter("marginal parameters require right_tail, left_tail, scale >= 0");
  }
}

void PairJointParams::validate() const {
  for (double rho : {upper_tail_corr, lower_tail_corr, body_corr}) {
    if (!(rho > -1.0 && rho < 1.0)) {
      throw InvalidParameter("pair correlations must lie strictly inside (-1, 1), got " +
                             std::to_string(rho));
    }
  }
}

std::size_t ModelSpec::parameter_count() const {
  const std::size_t n = dim();
  return 4 * n + 3 * n * (n - 1) / 2;
}

void ModelSpec::validate() const {
  if (marginals.empty()) throw InvalidParameter("model needs at least one dimension");
  for (const auto& m : marginals) m.validate();
  check_correlation(upper_tail_corr, dim(), "upper_tail_corr");
  check_correlation(lower_tail_corr, dim(), "lower_tail_corr");
  check_correlation(body_corr, dim(), "body_corr");
}

ModelSpec ModelSpec::independent(std::vector<MarginalParams> marginals) {
  const auto n = static_cast<Eigen::Index>(marginals.size());
  ModelSpec spec{std::move(marginals), Eigen::MatrixXd::Identity(n, n),
                 Eigen::MatrixXd::Identity(n, n), Eigen::MatrixXd::Identity(n, n)};
  return spec;
}

ModelSpec ModelSpec::pair(const MarginalParams& first, const MarginalParams& second,
                          const PairJointParams& joint) {
  ModelSpec spec = independent({first, second});
  spec.upper_tail_corr(0, 1) = spec.upper_tail_corr(1, 0) = joint.upper_tail_corr;
  spec.lower_tail_corr(0, 1) = spec.lower_tail_corr(1, 0) = joint.lower_tail_corr;
  spec.body_corr(0, 1) = spec.body_corr(1, 0) = joint.body_corr;
  return spec;
}

void ExpVariantParams::validate() const {
  require_finite(location, "location");
  require_finite(scale, "scale");
  if (!(right_rate > 0.0) || !(left_rate > 0.0) || !std::isfinite(right_rate) ||
      !std::isfinite(left_rate)) {
    throw InvalidParameter("exponential variant rates must be positive and finite");
  }
  if (scale < 0.0) throw InvalidParameter("scale must be nonnegative");
}

double min_eigenvalue(const Eigen::MatrixXd& m) {
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(m, Eigen::EigenvaluesOnly);
  return solver.eigenvalues().minCoeff();
}

Eigen::MatrixXd psd_square_root(const Eigen::MatrixXd& m) {
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(m);
  const Eigen::VectorXd roots = solver.eigenvalues().cwiseMax(0.0).cwiseSqrt();
  return solver.eigenvectors() * roots.asDiagonal() * solver.eigenvectors().transpose();
}

Draws sample_univariate(const MarginalParams& p, std::size_t count, SeedSpec seed) {
  return sample_univariate_latent(p, LatentKind::standard_normal(), count, seed);
}

Draws sample_univariate_latent(const MarginalParams& p, const LatentKind& kind,
                               std::size_t count, SeedSpec seed) {
  p.validate();
  if (count == 0) throw InvalidParameter("sample size must be at least 1");
  Philox4x32 gen(seed);
  Draws out;
  out.values.resize(count);
  for (auto& y : out.values) {
    for (;;) {
      const double z1 = kind.draw(gen);
      const double z2 = kind.draw(gen);
      const double z3 = draw_normal(gen);
      const double up = std::exp(p.right_tail * z1);
      const double down = std::exp(p.left_tail * z2);
      y = p.location + up - down + p.scale * z3;
      if (std::isfinite(y)) break;
      ++out.diagnostics.overflow_redraws;
    }
  }
  return out;
}

Draws sample_univariate_exp(const ExpVariantParams& p, std::size_t count, SeedSpec seed,
                            ExpSamplingOptions options) {
  p.validate();
  if (count == 0) throw InvalidParameter("sample size must be at least 1");
  Philox4x32 gen(seed);
  Draws out;
  out.diagnostics.mean_undefined = p.right_rate <= 1.0 || p.left_rate <= 1.0;
  out.values.resize(count);
  for (auto& y : out.values) {
    for (;;) {
      const double z1 = draw_exponential(gen, p.right_rate);
      const double z2 = options.tie_latents ? z1 : draw_exponential(gen, p.left_rate);
      const double z3 = draw_normal(gen);
      y = p.location + (std::exp(z1) - std::exp(z2)) + p.scale * z3;
      if (std::isfinite(y)) break;
      ++out.diagnostics.overflow_redraws;
    }
  }
  return out;
}

SampleMatrix sample_multivariate(const ModelSpec& m, std::size_t count, SeedSpec seed,
                                 SampleDiagnostics* diagnostics) {
  m.validate();
  if (count == 0) throw InvalidParameter("sample size must be at least 1");
  const auto n = static_cast<Eigen::Index>(m.dim());
  const Eigen::MatrixXd root_upper = psd_square_root(m.upper_tail_corr);
  const Eigen::MatrixXd root_lower = psd_square_root(m.lower_tail_corr);
  const Eigen::MatrixXd root_body = psd_square_root(m.body_corr);

  Philox4x32 gen(seed);
  Eigen::MatrixXd data(static_cast<Eigen::Index>(count), n);
  Eigen::VectorXd w1(n), w2(n), w3(n), z1(n), z2(n), z3(n);
  std::size_t redraws = 0;
  for (Eigen::Index k = 0; k < data.rows(); ++k) {
    for (;;) {
      for (Eigen::Index j = 0; j < n; ++j) w1(j) = draw_normal(gen);
      for (Eigen::Index j = 0; j < n; ++j) w2(j) = draw_normal(gen);
      for (Eigen::Index j = 0; j < n; ++j) w3(j) = draw_normal(gen);
      z1.noalias() = root_upper * w1;
      z2.noalias() = root_lower * w2;
      z3.noalias() = root_body * w3;
      bool finite = true;
      for (Eigen::Index j = 0; j < n; ++j) {
        const auto& p = m.marginals[static_cast<std::size_t>(j)];
        const double y = p.location + std::exp(p.right_tail * z1(j)) -
                         std::exp(p.left_tail * z2(j)) + p.scale * z3(j);
        finite = finite && std::isfinite(y);
        data(k, j) = y;
      }
      if (finite) break;
      ++redraws;
    }
  }
  if (diagnostics) diagnostics->overflow_redraws = redraws;
  return SampleMatrix(std::move(data), default_labels(m.dim()));
}

}  // namespace heavytail
