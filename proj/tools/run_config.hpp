#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "heavytail/copula.hpp"
#include "heavytail/errors.hpp"
#include "heavytail/joint_fit.hpp"
#include "heavytail/marginal_fit.hpp"
#include "heavytail/model.hpp"

namespace heavytail::cli {

/// Malformed or inconsistent configuration (exit code 1).
class ConfigError : public Error {
 public:
  using Error::Error;
};

enum class Command { sample, fit, convergence, taildep, discrepancy };

std::string to_string(Command command);

/// Uniform ranges for the randomly drawn true parameters of one trial.
struct ParamRanges {
  std::array<double, 2> location{-1.0, 1.0};
  std::array<double, 2> right_tail{0.2, 0.7};
  std::array<double, 2> left_tail{0.2, 0.7};
  std::array<double, 2> scale{0.5, 1.5};
  std::array<double, 2> corr{0.1, 0.8};
};

struct SampleSettings {
  std::size_t draws = 1000;
};

struct ConvergenceSettings {
  std::size_t base_size = 10000;
  /// Sample sizes are base_size * 2^k for each k listed.
  std::vector<int> powers{0, 1, 2, 3, 4, 5, 6, 7};
  int trials = 20;
  ParamRanges ranges;
};

/// Default two-dimensional base for the sensitivity sweeps: mu = 0,
/// u = v = 0.5, sigma = 1, all three latent correlations 0.5.
ModelSpec taildep_base_model();

struct TaildepSettings {
  /// mu1, mu2, u1, u2, v1, v2, sigma1, sigma2, rho1, rho2, rho3.
  std::string parameter = "rho3";
  std::vector<double> values{0.3, 0.6, 0.9};
  /// Draws for the tail curves.
  std::size_t draws = 10'000'000;
  /// Leading draws used for the sample correlation.
  std::size_t correlation_draws = 1'000'000;
  std::vector<double> taus = log_spaced_taus();
  ModelSpec base = taildep_base_model();
};

struct DiscrepancySettings {
  std::vector<CopulaFamily> families{CopulaFamily::normal, CopulaFamily::student_t,
                                     CopulaFamily::clayton, CopulaFamily::gumbel};
  std::size_t sim_draws = 1'000'000;
  std::vector<double> taus = default_discrepancy_taus();
};

struct RunConfig {
  std::optional<std::uint64_t> seed;
  unsigned threads = 0;
  std::optional<std::string> data;
  std::optional<ModelSpec> model;
  std::vector<std::string> labels;
  SampleSettings sample;
  MarginalFitConfig marginal_fit;
  JointFitConfig joint_fit;
  ConvergenceSettings convergence;
  TaildepSettings taildep;
  DiscrepancySettings discrepancy;
};

/// Unknown keys and wrongly typed values throw ConfigError.
RunConfig parse_run_config(const nlohmann::json& j);
RunConfig load_run_config(const std::filesystem::path& path);

/// The resolved settings a command actually used, in the input format.
nlohmann::json effective_config(const RunConfig& cfg, Command command);

nlohmann::json model_to_json(const ModelSpec& m, const std::vector<std::string>& labels = {});
ModelSpec model_from_json(const nlohmann::json& j, std::vector<std::string>* labels = nullptr);

nlohmann::json to_json(const MarginalParams& p);

}  // namespace heavytail::cli
