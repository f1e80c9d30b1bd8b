#include "commands.hpp"

#include <cstdlib>
#include <fstream>
#include <map>
#include <ostream>
#include <sstream>
#include <string>

#include "experiments.hpp"
#include "heavytail/parallel.hpp"

namespace heavytail::cli {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

// Files are staged in memory and written together at the end of a command.
class OutputSet {
 public:
  std::ostringstream& open(const std::string& name) { return files_[name]; }
  void add_json(const std::string& name, const json& j) { files_[name] << j.dump(2) << '\n'; }

  void write(const fs::path& dir) const {
    for (const auto& [name, body] : files_) {
      std::ofstream out(dir / name, std::ios::binary | std::ios::trunc);
      out << body.str();
      if (!out) throw ConfigError("cannot write " + (dir / name).string());
    }
  }

  std::size_t size() const { return files_.size(); }

 private:
  std::map<std::string, std::ostringstream> files_;
};

std::string fmt(double x) { return format_real(x); }

std::string side_name(TailSide side) { return side == TailSide::lower ? "lower" : "upper"; }

SampleMatrix load_data(const RunConfig& cfg) {
  if (!cfg.data) throw ConfigError("this command needs input data (--data or config 'data')");
  std::ifstream in(*cfg.data, std::ios::binary);
  if (!in) throw ConfigError("cannot open data file " + *cfg.data);
  return SampleMatrix::read_csv(in);
}

unsigned threads_of(const RunConfig& cfg) { return resolve_thread_count(cfg.threads); }

std::uint64_t seed_of(const RunConfig& cfg) {
  if (!cfg.seed) throw ConfigError("a seed is required (config 'seed' or --seed)");
  return *cfg.seed;
}

void add_fit_outputs(OutputSet& files, const FitReport& report) {
  auto& m = files.open("marginals.csv");
  m << "label,location,right_tail,left_tail,scale,converged,iterations,"
       "residual_1,residual_2,residual_3,residual_4\n";
  json record = json::array();
  for (std::size_t j = 0; j < report.marginals.size(); ++j) {
    const MarginalFitResult& r = report.marginals[j];
    const MarginalParams& p = r.params;
    m << report.labels[j] << ',' << fmt(p.location) << ',' << fmt(p.right_tail) << ','
      << fmt(p.left_tail) << ',' << fmt(p.scale) << ',' << (r.converged ? 1 : 0) << ','
      << r.iterations;
    for (int i = 1; i <= 4; ++i) m << ',' << fmt(r.residuals[i]);
    m << '\n';
    record.push_back({{"label", report.labels[j]},
                      {"params", to_json(p)},
                      {"residuals", {r.residuals[1], r.residuals[2], r.residuals[3], r.residuals[4]}},
                      {"converged", r.converged},
                      {"iterations", r.iterations},
                      {"stage_two_offset", r.stage_two_offset},
                      {"objective_trace", r.objective_trace}});
  }
  files.add_json("marginal_fit.json", record);
  files.add_json("fitted_model.json", model_to_json(report.fitted_model(), report.labels));
  if (!report.joint) return;

  const CorrelationAssembly& a = *report.joint;
  write_matrix_csv(files.open("upper_tail_corr.csv"), a.upper_tail_corr, report.labels);
  write_matrix_csv(files.open("lower_tail_corr.csv"), a.lower_tail_corr, report.labels);
  write_matrix_csv(files.open("body_corr.csv"), a.body_corr, report.labels);
  write_repair_report(files.open("repair_report.csv"), a);
  auto& p = files.open("pairs.csv");
  p << "first,second,upper_tail_corr,lower_tail_corr,body_corr,objective_body,"
       "objective_tails,threshold,alternations,converged\n";
  for (const auto& e : a.pairs) {
    const JointFitResult& r = e.result;
    p << report.labels[e.i] << ',' << report.labels[e.j] << ',' << fmt(r.params.upper_tail_corr)
      << ',' << fmt(r.params.lower_tail_corr) << ',' << fmt(r.params.body_corr) << ','
      << fmt(r.objective_body) << ',' << fmt(r.objective_tails) << ',' << fmt(r.threshold)
      << ',' << r.alternations << ',' << (r.converged ? 1 : 0) << '\n';
  }
}

void report_fit(const FitReport& report, std::ostream& log) {
  for (std::size_t j = 0; j < report.marginals.size(); ++j)
    if (!report.marginals[j].converged)
      log << "warning: marginal fit of '" << report.labels[j] << "' did not converge\n";
  if (!report.joint) return;
  for (const auto& e : report.joint->pairs)
    if (!e.result.converged)
      log << "warning: joint fit of ('" << report.labels[e.i] << "', '" << report.labels[e.j]
          << "') did not converge\n";
  for (const auto& w : report.joint->warnings) log << "warning: " << w << '\n';
}

int finish(const OutputSet& files, const RunConfig& cfg, Command command, const fs::path& out,
           bool converged, std::ostream& log) {
  files.write(out);
  std::ofstream echo(out / "effective_config.json", std::ios::binary | std::ios::trunc);
  echo << effective_config(cfg, command).dump(2) << '\n';
  if (!echo) throw ConfigError("cannot write " + (out / "effective_config.json").string());
  log << to_string(command) << ": wrote " << files.size() + 1 << " files to " << out.string()
      << '\n';
  if (!converged) {
    log << to_string(command) << ": some fits did not converge; results were still written\n";
    return kNotConverged;
  }
  return kSuccess;
}

}  // namespace

int cmd_sample(const RunConfig& cfg, const fs::path& out, std::ostream& log) {
  const std::uint64_t seed = seed_of(cfg);
  if (!cfg.model) throw ConfigError("sample needs a 'model' section");
  const ModelSpec& model = *cfg.model;
  model.validate();
  SampleDiagnostics diag;
  const SampleMatrix draws = sample_multivariate(model, cfg.sample.draws, SeedSpec{seed}, &diag);
  const SampleMatrix labelled(draws.data(),
                              cfg.labels.empty() ? default_labels(model.dim()) : cfg.labels);
  if (diag.overflow_redraws > 0)
    log << "warning: " << diag.overflow_redraws << " draws overflowed and were redrawn\n";
  OutputSet files;
  labelled.write_csv(files.open("samples.csv"));
  return finish(files, cfg, Command::sample, out, true, log);
}

int cmd_fit(const RunConfig& cfg, const fs::path& out, std::ostream& log) {
  const std::uint64_t seed = seed_of(cfg);
  const SampleMatrix data = load_data(cfg);
  const FitReport report = run_fit(data, cfg.marginal_fit, cfg.joint_fit, seed, threads_of(cfg));
  report_fit(report, log);
  OutputSet files;
  add_fit_outputs(files, report);
  return finish(files, cfg, Command::fit, out, report.all_converged(), log);
}

int cmd_convergence(const RunConfig& cfg, const fs::path& out, std::ostream& log) {
  const std::uint64_t seed = seed_of(cfg);
  const ConvergenceReport report = run_convergence(cfg.convergence, cfg.marginal_fit,
                                                   cfg.joint_fit, seed, threads_of(cfg));
  OutputSet files;
  auto& marginal = files.open("convergence_marginal.csv");
  auto& all = files.open("convergence_all.csv");
  for (auto* f : {&marginal, &all}) *f << "log2_size_ratio,size,mean_l2_error,trials,nonconverged\n";
  for (const auto& r : report.rows) {
    marginal << r.power << ',' << r.size << ',' << fmt(r.marginal_error) << ',' << r.trials << ','
             << r.nonconverged << '\n';
    all << r.power << ',' << r.size << ',' << fmt(r.all_error) << ',' << r.trials << ','
        << r.nonconverged << '\n';
  }
  auto& trials = files.open("convergence_trials.csv");
  trials << "log2_size_ratio,size,trial,marginal_error,all_error,converged\n";
  for (const auto& t : report.trials)
    trials << t.power << ',' << t.size << ',' << t.trial << ',' << fmt(t.marginal_error) << ','
           << fmt(t.all_error) << ',' << (t.converged ? 1 : 0) << '\n';
  auto& truth = files.open("convergence_truth.csv");
  truth << "trial,mu1,u1,v1,sigma1,mu2,u2,v2,sigma2,rho1,rho2,rho3\n";
  for (std::size_t t = 0; t < report.truths.size(); ++t) {
    const ModelSpec& m = report.truths[t];
    truth << t;
    for (const auto& p : m.marginals)
      truth << ',' << fmt(p.location) << ',' << fmt(p.right_tail) << ',' << fmt(p.left_tail)
            << ',' << fmt(p.scale);
    truth << ',' << fmt(m.upper_tail_corr(0, 1)) << ',' << fmt(m.lower_tail_corr(0, 1)) << ','
          << fmt(m.body_corr(0, 1)) << '\n';
  }
  return finish(files, cfg, Command::convergence, out, report.all_converged(), log);
}

int cmd_taildep(const RunConfig& cfg, const fs::path& out, std::ostream& log) {
  const std::uint64_t seed = seed_of(cfg);
  const TaildepReport report = run_taildep(cfg.taildep, seed, threads_of(cfg));
  OutputSet files;
  auto& corr = files.open("correlation.csv");
  corr << "parameter,value,correlation\n";
  for (const auto& p : report.points)
    corr << report.parameter << ',' << fmt(p.value) << ',' << fmt(p.correlation) << '\n';
  for (TailSide side : {TailSide::lower, TailSide::upper}) {
    auto& f = files.open("tail_" + side_name(side) + ".csv");
    f << "parameter,value,tau,lambda\n";
    for (const auto& p : report.points) {
      const TailCurve& c = side == TailSide::lower ? p.lower : p.upper;
      for (std::size_t i = 0; i < c.taus.size(); ++i)
        f << report.parameter << ',' << fmt(p.value) << ',' << fmt(c.taus[i]) << ','
          << fmt(c.lambdas[i]) << '\n';
    }
  }
  return finish(files, cfg, Command::taildep, out, true, log);
}

int cmd_discrepancy(const RunConfig& cfg, const fs::path& out, std::ostream& log) {
  const std::uint64_t seed = seed_of(cfg);
  const SampleMatrix data = load_data(cfg);
  const DiscrepancyTable table = run_discrepancy(data, cfg.discrepancy, cfg.marginal_fit,
                                                 cfg.joint_fit, seed, threads_of(cfg));
  const auto& labels = table.fit.labels;
  report_fit(table.fit, log);
  OutputSet files;
  add_fit_outputs(files, table.fit);

  // models x pairs, one D per cell
  auto& d = files.open("discrepancy.csv");
  d << "model";
  for (const auto& p : table.pairs) d << ',' << labels[p.i] << '-' << labels[p.j];
  d << '\n';
  const std::size_t n_models = table.pairs.empty() ? 0 : table.pairs.front().rows.size();
  for (std::size_t r = 0; r < n_models; ++r) {
    d << table.pairs.front().rows[r].model;
    for (const auto& p : table.pairs) d << ',' << fmt(p.rows[r].discrepancy);
    d << '\n';
  }

  auto& cop = files.open("copulas.csv");
  cop << "first,second,family,rho,dof,theta\n";
  for (const auto& p : table.pairs) {
    const std::string pair_name = "pair_" + std::to_string(p.i + 1) + "_" + std::to_string(p.j + 1);
    for (const auto& row : p.rows) {
      if (!row.copula) continue;
      const CopulaSpec& c = *row.copula;
      cop << labels[p.i] << ',' << labels[p.j] << ',' << to_string(c.family) << ','
          << fmt(c.rho) << ',' << fmt(c.dof) << ',' << fmt(c.theta) << '\n';
    }
    for (TailSide side : {TailSide::lower, TailSide::upper}) {
      auto& f = files.open("discrepancy_" + pair_name + "_" + side_name(side) + ".csv");
      f << "first,second,model,tau,tau_star_model,tau_star_data\n";
      for (const auto& row : p.rows)
        for (const auto& q : row.report.rows)
          if (side_for_tau(q.tau) == side)
            f << labels[p.i] << ',' << labels[p.j] << ',' << row.model << ',' << fmt(q.tau)
              << ',' << fmt(q.tau_star_model) << ',' << fmt(q.tau_star_data) << '\n';
    }
  }
  return finish(files, cfg, Command::discrepancy, out, table.fit.all_converged(), log);
}

int run_command(Command command, const GlobalOptions& opts, std::ostream& log) {
  try {
    RunConfig cfg = opts.config ? load_run_config(*opts.config) : RunConfig{};
    if (opts.seed) cfg.seed = opts.seed;
    if (opts.data) cfg.data = opts.data->string();
    // --threads, then HEAVYTAIL_THREADS, then the config value
    if (opts.threads && *opts.threads > 0) cfg.threads = *opts.threads;
    else if (std::getenv("HEAVYTAIL_THREADS")) cfg.threads = resolve_thread_count(0);

    std::error_code ec;
    fs::create_directories(opts.out, ec);
    if (ec || !fs::is_directory(opts.out))
      throw ConfigError("cannot create output directory " + opts.out.string());

    switch (command) {
      case Command::sample: return cmd_sample(cfg, opts.out, log);
      case Command::fit: return cmd_fit(cfg, opts.out, log);
      case Command::convergence: return cmd_convergence(cfg, opts.out, log);
      case Command::taildep: return cmd_taildep(cfg, opts.out, log);
      case Command::discrepancy: return cmd_discrepancy(cfg, opts.out, log);
    }
    return kUsageError;
  } catch (const ConfigError& e) {
    log << "error: " << e.what() << '\n';
    return kUsageError;
  } catch (const Error& e) {
    log << "error: " << e.what() << '\n';
    return kInvalidInput;
  } catch (const std::exception& e) {
    log << "error: " << e.what() << '\n';
    return kInvalidInput;
  }
}

}  // namespace heavytail::cli
