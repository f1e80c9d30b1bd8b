#include <CLI11.hpp>
#include <iostream>
#include <string>

#include "commands.hpp"

int main(int argc, char** argv) {
  using heavytail::cli::Command;

  CLI::App app{"heavytail: multivariate heavy-tail model sampling, fitting and diagnostics"};
  app.require_subcommand(1);

  heavytail::cli::GlobalOptions opts;
  std::string config, data, out = ".";
  std::uint64_t seed = 0;
  unsigned threads = 0;

  const std::pair<Command, const char*> commands[] = {
      {Command::sample, "draw samples from the model in the config"},
      {Command::fit, "fit marginal and pairwise joint parameters to a CSV"},
      {Command::convergence, "parameter recovery error against sample size"},
      {Command::taildep, "correlation and tail-dependence sweeps over one parameter"},
      {Command::discrepancy, "joint-quantile discrepancy of our model and copula benchmarks"},
  };
  std::vector<std::pair<Command, CLI::App*>> subs;
  for (const auto& [command, help] : commands) {
    CLI::App* sub = app.add_subcommand(heavytail::cli::to_string(command), help);
    sub->add_option("--config", config, "JSON run configuration")->check(CLI::ExistingFile);
    sub->add_option("--data", data, "input CSV with a header row");
    sub->add_option("--out", out, "output directory (created if missing)");
    sub->add_option("--seed", seed, "master seed (overrides the config)");
    sub->add_option("--threads", threads, "worker threads (overrides HEAVYTAIL_THREADS)");
    subs.emplace_back(command, sub);
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : heavytail::cli::kUsageError;
  }

  for (const auto& [command, sub] : subs) {
    if (!sub->parsed()) continue;
    if (sub->count("--config")) opts.config = config;
    if (sub->count("--data")) opts.data = data;
    if (sub->count("--seed")) opts.seed = seed;
    if (sub->count("--threads")) opts.threads = threads;
    opts.out = out;
    return heavytail::cli::run_command(command, opts, std::cerr);
  }
  return heavytail::cli::kUsageError;
}
