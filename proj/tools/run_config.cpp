#include "run_config.hpp"

#include <cmath>
#include <fstream>
#include <initializer_list>
#include <string_view>

namespace heavytail::cli {

using nlohmann::json;

namespace {

[[noreturn]] void fail(std::string_view where, const std::string& what) {
  throw ConfigError(std::string(where) + ": " + what);
}

void check_keys(const json& j, std::string_view where,
                std::initializer_list<std::string_view> allowed) {
  if (!j.is_object()) fail(where, "expected an object");
  for (const auto& item : j.items()) {
    bool known = false;
    for (auto key : allowed) known = known || item.key() == key;
    if (!known) fail(where, "unknown key '" + item.key() + "'");
  }
}

std::string path_of(std::string_view where, std::string_view key) {
  return std::string(where) + "." + std::string(key);
}

double as_real(const json& v, const std::string& where) {
  if (!v.is_number()) fail(where, "expected a number");
  const double x = v.get<double>();
  if (!std::isfinite(x)) fail(where, "expected a finite number");
  return x;
}

// Integral JSON numbers, including forms like 1e7.
std::uint64_t as_count(const json& v, const std::string& where) {
  if (v.is_number_unsigned()) return v.get<std::uint64_t>();
  if (v.is_number_integer() && v.get<std::int64_t>() >= 0) return static_cast<std::uint64_t>(v.get<std::int64_t>());
  if (v.is_number_float()) {
    const double x = v.get<double>();
    if (x >= 0.0 && x <= 9007199254740992.0 && std::floor(x) == x)
      return static_cast<std::uint64_t>(x);
  }
  fail(where, "expected a nonnegative integer");
}

int as_int(const json& v, const std::string& where) {
  if (!v.is_number_integer()) fail(where, "expected an integer");
  const auto x = v.get<std::int64_t>();
  if (x < -1000000000 || x > 1000000000) fail(where, "integer out of range");
  return static_cast<int>(x);
}

bool as_bool(const json& v, const std::string& where) {
  if (!v.is_boolean()) fail(where, "expected true or false");
  return v.get<bool>();
}

std::string as_string(const json& v, const std::string& where) {
  if (!v.is_string()) fail(where, "expected a string");
  return v.get<std::string>();
}

std::vector<double> as_reals(const json& v, const std::string& where) {
  if (!v.is_array()) fail(where, "expected an array of numbers");
  std::vector<double> out;
  for (std::size_t i = 0; i < v.size(); ++i)
    out.push_back(as_real(v[i], where + "[" + std::to_string(i) + "]"));
  return out;
}

std::array<double, 2> as_range(const json& v, const std::string& where) {
  const auto r = as_reals(v, where);
  if (r.size() != 2 || !(r[0] <= r[1])) fail(where, "expected [low, high] with low <= high");
  return {r[0], r[1]};
}

template <class F>
void maybe(const json& obj, std::string_view where, std::string_view key, F&& read) {
  const auto it = obj.find(std::string(key));
  if (it != obj.end()) read(*it, path_of(where, key));
}

Eigen::MatrixXd as_matrix(const json& v, const std::string& where) {
  if (!v.is_array() || v.empty()) fail(where, "expected a square array of rows");
  const auto n = static_cast<Eigen::Index>(v.size());
  Eigen::MatrixXd m(n, n);
  for (Eigen::Index i = 0; i < n; ++i) {
    const auto row = as_reals(v[static_cast<std::size_t>(i)], where);
    if (static_cast<Eigen::Index>(row.size()) != n) fail(where, "matrix must be square");
    for (Eigen::Index k = 0; k < n; ++k) m(i, k) = row[static_cast<std::size_t>(k)];
  }
  return m;
}

json matrix_to_json(const Eigen::MatrixXd& m) {
  json rows = json::array();
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    json row = json::array();
    for (Eigen::Index k = 0; k < m.cols(); ++k) row.push_back(m(i, k));
    rows.push_back(std::move(row));
  }
  return rows;
}

MarginalParams marginal_from_json(const json& j, const std::string& where) {
  check_keys(j, where, {"location", "right_tail", "left_tail", "scale"});
  MarginalParams p;
  maybe(j, where, "location", [&](const json& v, const std::string& w) { p.location = as_real(v, w); });
  maybe(j, where, "right_tail", [&](const json& v, const std::string& w) { p.right_tail = as_real(v, w); });
  maybe(j, where, "left_tail", [&](const json& v, const std::string& w) { p.left_tail = as_real(v, w); });
  maybe(j, where, "scale", [&](const json& v, const std::string& w) { p.scale = as_real(v, w); });
  return p;
}

MarginalFitConfig marginal_fit_from_json(const json& j) {
  constexpr std::string_view where = "marginal_fit";
  check_keys(j, where, {"max_outer_iters", "block_tol", "right_tail_max", "left_tail_max",
                        "scale_max", "restarts", "scale_high_moments"});
  MarginalFitConfig c;
  maybe(j, where, "max_outer_iters", [&](const json& v, const std::string& w) { c.max_outer_iters = as_int(v, w); });
  maybe(j, where, "block_tol", [&](const json& v, const std::string& w) { c.block_tol = as_real(v, w); });
  maybe(j, where, "right_tail_max", [&](const json& v, const std::string& w) { c.right_tail_max = as_real(v, w); });
  maybe(j, where, "left_tail_max", [&](const json& v, const std::string& w) { c.left_tail_max = as_real(v, w); });
  maybe(j, where, "scale_max", [&](const json& v, const std::string& w) { c.scale_max = as_real(v, w); });
  maybe(j, where, "restarts", [&](const json& v, const std::string& w) { c.restarts = as_int(v, w); });
  maybe(j, where, "scale_high_moments", [&](const json& v, const std::string& w) { c.scale_high_moments = as_bool(v, w); });
  try {
    c.validate();
  } catch (const InvalidParameter& e) {
    fail(where, e.what());
  }
  return c;
}

JointFitConfig joint_fit_from_json(const json& j) {
  constexpr std::string_view where = "joint_fit";
  check_keys(j, where, {"sim_draws", "threshold", "max_alternations", "rho_tol", "psd_floor"});
  JointFitConfig c;
  maybe(j, where, "sim_draws", [&](const json& v, const std::string& w) { c.sim_draws = as_count(v, w); });
  maybe(j, where, "threshold", [&](const json& v, const std::string& w) {
    check_keys(v, w, {"kind", "value"});
    maybe(v, w, "kind", [&](const json& k, const std::string& wk) {
      const std::string kind = as_string(k, wk);
      if (kind == "quantile") c.threshold.kind = ThresholdRule::Kind::quantile;
      else if (kind == "fixed") c.threshold.kind = ThresholdRule::Kind::fixed;
      else fail(wk, "expected 'quantile' or 'fixed'");
    });
    maybe(v, w, "value", [&](const json& x, const std::string& wx) { c.threshold.value = as_real(x, wx); });
  });
  maybe(j, where, "max_alternations", [&](const json& v, const std::string& w) { c.max_alternations = as_int(v, w); });
  maybe(j, where, "rho_tol", [&](const json& v, const std::string& w) { c.rho_tol = as_real(v, w); });
  maybe(j, where, "psd_floor", [&](const json& v, const std::string& w) { c.psd_floor = as_real(v, w); });
  try {
    c.validate();
  } catch (const InvalidParameter& e) {
    fail(where, e.what());
  }
  return c;
}

ConvergenceSettings convergence_from_json(const json& j) {
  constexpr std::string_view where = "convergence";
  check_keys(j, where, {"base_size", "powers", "trials", "ranges"});
  ConvergenceSettings c;
  maybe(j, where, "base_size", [&](const json& v, const std::string& w) { c.base_size = as_count(v, w); });
  maybe(j, where, "powers", [&](const json& v, const std::string& w) {
    if (!v.is_array()) fail(w, "expected an array of integers");
    c.powers.clear();
    for (const auto& k : v) c.powers.push_back(as_int(k, w));
  });
  maybe(j, where, "trials", [&](const json& v, const std::string& w) { c.trials = as_int(v, w); });
  maybe(j, where, "ranges", [&](const json& v, const std::string& w) {
    check_keys(v, w, {"location", "right_tail", "left_tail", "scale", "corr"});
    maybe(v, w, "location", [&](const json& x, const std::string& wx) { c.ranges.location = as_range(x, wx); });
    maybe(v, w, "right_tail", [&](const json& x, const std::string& wx) { c.ranges.right_tail = as_range(x, wx); });
    maybe(v, w, "left_tail", [&](const json& x, const std::string& wx) { c.ranges.left_tail = as_range(x, wx); });
    maybe(v, w, "scale", [&](const json& x, const std::string& wx) { c.ranges.scale = as_range(x, wx); });
    maybe(v, w, "corr", [&](const json& x, const std::string& wx) { c.ranges.corr = as_range(x, wx); });
  });
  if (c.base_size < 100) fail(where, "base_size must be at least 100");
  if (c.powers.empty()) fail(where, "powers must not be empty");
  for (int k : c.powers)
    if (k < 0 || k > 20) fail(where, "powers must lie in [0, 20]");
  if (c.trials < 1) fail(where, "trials must be at least 1");
  const auto& r = c.ranges;
  if (r.right_tail[0] < 0.0 || r.left_tail[0] < 0.0 || r.scale[0] < 0.0)
    fail(where, "tail and scale ranges must be nonnegative");
  if (r.corr[0] <= -1.0 || r.corr[1] >= 1.0) fail(where, "corr range must lie inside (-1, 1)");
  return c;
}

TaildepSettings taildep_from_json(const json& j) {
  constexpr std::string_view where = "taildep";
  check_keys(j, where, {"parameter", "values", "draws", "correlation_draws", "taus", "base"});
  TaildepSettings c;
  maybe(j, where, "parameter", [&](const json& v, const std::string& w) { c.parameter = as_string(v, w); });
  maybe(j, where, "values", [&](const json& v, const std::string& w) { c.values = as_reals(v, w); });
  maybe(j, where, "draws", [&](const json& v, const std::string& w) { c.draws = as_count(v, w); });
  maybe(j, where, "correlation_draws", [&](const json& v, const std::string& w) { c.correlation_draws = as_count(v, w); });
  maybe(j, where, "taus", [&](const json& v, const std::string& w) { c.taus = as_reals(v, w); });
  maybe(j, where, "base", [&](const json& v, const std::string&) { c.base = model_from_json(v); });
  if (c.values.empty()) fail(where, "values must not be empty");
  if (c.taus.empty()) fail(where, "taus must not be empty");
  for (double t : c.taus)
    if (!(t > 0.0 && t < 1.0)) fail(where, "taus must lie in (0, 1)");
  if (c.draws < 1000 || c.correlation_draws < 2) fail(where, "draws must be at least 1000");
  if (c.base.dim() != 2) fail(where, "base model must be two-dimensional");
  return c;
}

DiscrepancySettings discrepancy_from_json(const json& j) {
  constexpr std::string_view where = "discrepancy";
  check_keys(j, where, {"families", "sim_draws", "taus"});
  DiscrepancySettings c;
  maybe(j, where, "families", [&](const json& v, const std::string& w) {
    if (!v.is_array()) fail(w, "expected an array of family names");
    c.families.clear();
    for (const auto& name : v) {
      const auto family = parse_copula_family(as_string(name, w));
      if (!family) fail(w, "unknown copula family '" + name.get<std::string>() + "'");
      c.families.push_back(*family);
    }
  });
  maybe(j, where, "sim_draws", [&](const json& v, const std::string& w) { c.sim_draws = as_count(v, w); });
  maybe(j, where, "taus", [&](const json& v, const std::string& w) { c.taus = as_reals(v, w); });
  if (c.sim_draws < 1000) fail(where, "sim_draws must be at least 1000");
  if (c.taus.empty()) fail(where, "taus must not be empty");
  for (double t : c.taus)
    if (!(t > 0.0 && t < 1.0)) fail(where, "taus must lie in (0, 1)");
  return c;
}

json threshold_to_json(const ThresholdRule& t) {
  return {{"kind", t.kind == ThresholdRule::Kind::quantile ? "quantile" : "fixed"},
          {"value", t.value}};
}

json to_json(const MarginalFitConfig& c) {
  return {{"max_outer_iters", c.max_outer_iters}, {"block_tol", c.block_tol},
          {"right_tail_max", c.right_tail_max},   {"left_tail_max", c.left_tail_max},
          {"scale_max", c.scale_max},             {"restarts", c.restarts},
          {"scale_high_moments", c.scale_high_moments}};
}

json to_json(const JointFitConfig& c) {
  return {{"sim_draws", c.sim_draws},
          {"threshold", threshold_to_json(c.threshold)},
          {"max_alternations", c.max_alternations},
          {"rho_tol", c.rho_tol},
          {"psd_floor", c.psd_floor}};
}

json to_json(const ConvergenceSettings& c) {
  const auto& r = c.ranges;
  return {{"base_size", c.base_size},
          {"powers", c.powers},
          {"trials", c.trials},
          {"ranges",
           {{"location", r.location},
            {"right_tail", r.right_tail},
            {"left_tail", r.left_tail},
            {"scale", r.scale},
            {"corr", r.corr}}}};
}

json to_json(const TaildepSettings& c) {
  return {{"parameter", c.parameter},
          {"values", c.values},
          {"draws", c.draws},
          {"correlation_draws", c.correlation_draws},
          {"taus", c.taus},
          {"base", model_to_json(c.base)}};
}

json to_json(const DiscrepancySettings& c) {
  json families = json::array();
  for (auto f : c.families) families.push_back(to_string(f));
  return {{"families", families}, {"sim_draws", c.sim_draws}, {"taus", c.taus}};
}

}  // namespace

std::string to_string(Command command) {
  switch (command) {
    case Command::sample: return "sample";
    case Command::fit: return "fit";
    case Command::convergence: return "convergence";
    case Command::taildep: return "taildep";
    case Command::discrepancy: return "discrepancy";
  }
  return "unknown";
}

ModelSpec taildep_base_model() {
  const MarginalParams m{0.0, 0.5, 0.5, 1.0};
  return ModelSpec::pair(m, m, {0.5, 0.5, 0.5});
}

json to_json(const MarginalParams& p) {
  return {{"location", p.location},
          {"right_tail", p.right_tail},
          {"left_tail", p.left_tail},
          {"scale", p.scale}};
}

json model_to_json(const ModelSpec& m, const std::vector<std::string>& labels) {
  json j;
  if (!labels.empty()) j["labels"] = labels;
  json marginals = json::array();
  for (const auto& p : m.marginals) marginals.push_back(to_json(p));
  j["marginals"] = std::move(marginals);
  j["upper_tail_corr"] = matrix_to_json(m.upper_tail_corr);
  j["lower_tail_corr"] = matrix_to_json(m.lower_tail_corr);
  j["body_corr"] = matrix_to_json(m.body_corr);
  return j;
}

ModelSpec model_from_json(const json& j, std::vector<std::string>* labels) {
  constexpr std::string_view where = "model";
  check_keys(j, where,
             {"labels", "marginals", "upper_tail_corr", "lower_tail_corr", "body_corr"});
  if (!j.contains("marginals") || !j["marginals"].is_array() || j["marginals"].empty())
    fail(where, "marginals must be a non-empty array");
  std::vector<MarginalParams> marginals;
  for (std::size_t i = 0; i < j["marginals"].size(); ++i)
    marginals.push_back(
        marginal_from_json(j["marginals"][i], "model.marginals[" + std::to_string(i) + "]"));
  ModelSpec m = ModelSpec::independent(std::move(marginals));
  maybe(j, where, "upper_tail_corr", [&](const json& v, const std::string& w) { m.upper_tail_corr = as_matrix(v, w); });
  maybe(j, where, "lower_tail_corr", [&](const json& v, const std::string& w) { m.lower_tail_corr = as_matrix(v, w); });
  maybe(j, where, "body_corr", [&](const json& v, const std::string& w) { m.body_corr = as_matrix(v, w); });
  if (j.contains("labels")) {
    const json& l = j["labels"];
    if (!l.is_array() || l.size() != m.dim())
      fail("model.labels", "expected one label per marginal");
    std::vector<std::string> names;
    for (const auto& s : l) names.push_back(as_string(s, "model.labels"));
    if (labels) *labels = std::move(names);
  }
  return m;
}

RunConfig parse_run_config(const json& j) {
  check_keys(j, "config",
             {"command", "seed", "threads", "data", "model", "sample", "marginal_fit", "joint_fit",
              "convergence", "taildep", "discrepancy"});
  RunConfig c;
  try {
    maybe(j, "config", "command", [&](const json& v, const std::string& w) { as_string(v, w); });
    maybe(j, "config", "seed", [&](const json& v, const std::string& w) {
      if (v.is_number_unsigned()) c.seed = v.get<std::uint64_t>();
      else if (v.is_number_integer() && v.get<std::int64_t>() >= 0) c.seed = static_cast<std::uint64_t>(v.get<std::int64_t>());
      else fail(w, "expected an unsigned 64-bit integer");
    });
    maybe(j, "config", "threads", [&](const json& v, const std::string& w) {
      c.threads = static_cast<unsigned>(std::min<std::uint64_t>(as_count(v, w), 4096));
    });
    maybe(j, "config", "data", [&](const json& v, const std::string& w) { c.data = as_string(v, w); });
    maybe(j, "config", "model", [&](const json& v, const std::string&) {
      c.model = model_from_json(v, &c.labels);
    });
    maybe(j, "config", "sample", [&](const json& v, const std::string& w) {
      check_keys(v, w, {"draws"});
      maybe(v, w, "draws", [&](const json& x, const std::string& wx) { c.sample.draws = as_count(x, wx); });
      if (c.sample.draws < 1) fail(w, "draws must be at least 1");
    });
    maybe(j, "config", "marginal_fit", [&](const json& v, const std::string&) { c.marginal_fit = marginal_fit_from_json(v); });
    maybe(j, "config", "joint_fit", [&](const json& v, const std::string&) { c.joint_fit = joint_fit_from_json(v); });
    maybe(j, "config", "convergence", [&](const json& v, const std::string&) { c.convergence = convergence_from_json(v); });
    maybe(j, "config", "taildep", [&](const json& v, const std::string&) { c.taildep = taildep_from_json(v); });
    maybe(j, "config", "discrepancy", [&](const json& v, const std::string&) { c.discrepancy = discrepancy_from_json(v); });
  } catch (const json::exception& e) {
    throw ConfigError(std::string("config: ") + e.what());
  }
  return c;
}

RunConfig load_run_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file " + path.string());
  json j;
  try {
    j = json::parse(in);
  } catch (const json::parse_error& e) {
    throw ConfigError(path.string() + ": " + e.what());
  }
  return parse_run_config(j);
}

json effective_config(const RunConfig& c, Command command) {
  json j;
  j["command"] = to_string(command);
  if (c.seed) j["seed"] = *c.seed;
  switch (command) {
    case Command::sample:
      if (c.model) j["model"] = model_to_json(*c.model, c.labels);
      j["sample"] = {{"draws", c.sample.draws}};
      break;
    case Command::fit:
      if (c.data) j["data"] = *c.data;
      j["marginal_fit"] = to_json(c.marginal_fit);
      j["joint_fit"] = to_json(c.joint_fit);
      break;
    case Command::convergence:
      j["convergence"] = to_json(c.convergence);
      j["marginal_fit"] = to_json(c.marginal_fit);
      j["joint_fit"] = to_json(c.joint_fit);
      break;
    case Command::taildep:
      j["taildep"] = to_json(c.taildep);
      break;
    case Command::discrepancy:
      if (c.data) j["data"] = *c.data;
      j["marginal_fit"] = to_json(c.marginal_fit);
      j["joint_fit"] = to_json(c.joint_fit);
      j["discrepancy"] = to_json(c.discrepancy);
      break;
  }
  return j;
}

}  // namespace heavytail::cli
