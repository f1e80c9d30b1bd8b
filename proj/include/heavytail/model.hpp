#pragma once

#include <Eigen/Dense>
#include <cstddef>
#include <string>
#include <vector>

#include "heavytail/rng.hpp"
#include "heavytail/sample_matrix.hpp"

namespace heavytail {

/// Marginal law Y = location + exp(right_tail Z1) - exp(left_tail Z2) + scale Z3
/// with independent standard normal Z1, Z2, Z3.
struct MarginalParams {
  double location = 0.0;
  double right_tail = 0.0;
  double left_tail = 0.0;
  double scale = 0.0;

  void validate() const;
  friend bool operator==(const MarginalParams&, const MarginalParams&) = default;
};

/// Latent correlations of one pair: upper-tail block, lower-tail block, body.
struct PairJointParams {
  double upper_tail_corr = 0.0;
  double lower_tail_corr = 0.0;
  double body_corr = 0.0;

  void validate() const;
  friend bool operator==(const PairJointParams&, const PairJointParams&) = default;
};

/// Full n-dimensional model: marginals plus the three latent correlation
/// matrices (upper tail, lower tail, body), each symmetric PSD with unit
/// diagonal.
struct ModelSpec {
  std::vector<MarginalParams> marginals;
  Eigen::MatrixXd upper_tail_corr;
  Eigen::MatrixXd lower_tail_corr;
  Eigen::MatrixXd body_corr;

  std::size_t dim() const { return marginals.size(); }

  /// 4n + 3n(n-1)/2.
  std::size_t parameter_count() const;

  /// Throws InvalidParameter on shape/symmetry/diagonal problems and
  /// NotPsdError for an indefinite matrix.
  void validate() const;

  /// n independent dimensions (identity correlation matrices).
  static ModelSpec independent(std::vector<MarginalParams> marginals);
  static ModelSpec pair(const MarginalParams& first, const MarginalParams& second,
                        const PairJointParams& joint);
};

/// Exponential-latent variant: Y = location + exp(Z1) - exp(Z2) + scale Z3
/// with Z1 ~ Exp(right_rate), Z2 ~ Exp(left_rate).
struct ExpVariantParams {
  double location = 0.0;
  double right_rate = 1.0;
  double left_rate = 1.0;
  double scale = 0.0;

  void validate() const;
};

struct SampleDiagnostics {
  /// Draws discarded because exp() overflowed.
  std::size_t overflow_redraws = 0;
  /// Set when a tail rate <= 1, i.e. the mean does not exist.
  bool mean_undefined = false;
};

struct Draws {
  std::vector<double> values;
  SampleDiagnostics diagnostics;
};

struct ExpSamplingOptions {
  /// Diagnostics only: reuse Z1 as Z2.
  bool tie_latents = false;
};

Draws sample_univariate(const MarginalParams& p, std::size_t count, SeedSpec seed);

Draws sample_univariate_exp(const ExpVariantParams& p, std::size_t count, SeedSpec seed,
                            ExpSamplingOptions options = {});

/// Same law as sample_univariate, but each latent normal block comes from its
/// own user-chosen kind (standard normal or Student t) for sampling
/// experiments.
Draws sample_univariate_latent(const MarginalParams& p, const LatentKind& kind,
                               std::size_t count, SeedSpec seed);

SampleMatrix sample_multivariate(const ModelSpec& m, std::size_t count, SeedSpec seed,
                                 SampleDiagnostics* diagnostics = nullptr);

/// Symmetric square root of a PSD matrix, eigenvalues floored at zero.
Eigen::MatrixXd psd_square_root(const Eigen::MatrixXd& m);

double min_eigenvalue(const Eigen::MatrixXd& m);

}  // namespace heavytail
