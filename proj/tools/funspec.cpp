#include <CLI11.hpp>

#include <cstdlib>
#include <iostream>

#include "funspec/commands.hpp"
#include "funspec/parallel.hpp"

int main(int argc, char** argv) {
  using funspec::cli::CommandOptions;

  CLI::App app{"Spectral analysis and simulation of functional time series"};
  app.require_subcommand(1);
  app.set_version_flag("--version", "funspec 0.1.0");

  CommandOptions opts;
  std::string config, out;
  std::uint64_t seed = 0;
  double tol = 0;
  int threads = 0;
  std::vector<std::string> inputs;

  struct Sub {
    const char* name;
    const char* help;
    const char* positional;
  };
  const Sub subs[] = {
      {"simulate", "Simulate a series from a model config by spectral synthesis", nullptr},
      {"estimate", "Estimate the spectral measure, eigenvalues and atoms of a series", "series"},
      {"roundtrip", "Check lag covariances -> spectral measure -> lag covariances", nullptr},
      {"hfpca", "Harmonic functional PCA: optimal rank-reduced series and its error", "series"},
      {"report", "Summarise the outputs in a directory", "dir"},
  };
  for (const auto& s : subs) {
    auto* sub = app.add_subcommand(s.name, s.help);
    sub->add_option("--config", config, "Run configuration (JSON)");
    sub->add_option("--out", out, "Output directory");
    sub->add_option("--seed", seed, "Random seed (overrides the config)");
    sub->add_option("--tol", tol, "Tolerance for pass/fail checks")->check(CLI::PositiveNumber);
    sub->add_option("--threads", threads, "Worker threads (FUNSPEC_THREADS when unset)")->check(CLI::PositiveNumber);
    if (s.positional) sub->add_option(s.positional, inputs, "Input path")->expected(0, 1);
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : funspec::cli::kInputError;
  }

  CLI::App* sub = app.get_subcommands().front();
  if (!config.empty()) opts.config = config;
  if (!out.empty()) opts.out = out;
  if (sub->count("--seed")) opts.seed = seed;
  if (sub->count("--tol")) opts.tol = tol;
  for (const auto& p : inputs) opts.inputs.emplace_back(p);
  if (threads > 0) funspec::set_num_threads(threads);

  return funspec::cli::run_command(sub->get_name(), opts, std::cout, std::cerr);
}
