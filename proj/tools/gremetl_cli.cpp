// SPDX-License-Identifier: Apache-2.0
// gremetl: command-line front end over the C API.
//
//   gremetl meta-train   --config cfg.json [--seed N] [--out DIR] [--p-explore P]
//   gremetl grid-search  --config cfg.json [--lo 0] [--hi 1] [--step 0.1]
//   gremetl make-domains --config cfg.json [--out DIR]
//   gremetl eval DIR
//   gremetl report DIR... [--out report.csv]
//
// The output directory is taken from --out, then GREMETL_OUT_DIR, then the
// config. Exit status: 0 success, 1 validation error, 2 runtime failure.

#include <cstdint>
#include <cstdlib>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "gremetl/gremetl.h"

namespace {

constexpr int kExitValidation = 1;
constexpr int kExitRuntime = 2;

int exit_code(gremetl_status s) {
  switch (s) {
  case GREMETL_OK:
    return 0;
  case GREMETL_ERR_VALIDATION:
  case GREMETL_ERR_PARSE:
  case GREMETL_ERR_INVALID_ARGUMENT:
    return kExitValidation;
  default:
    return kExitRuntime;
  }
}

int report_failure(gremetl_status s) {
  std::cerr << "gremetl: " << gremetl_last_error() << "\n";
  return exit_code(s);
}

struct Owned {
  char *s = nullptr;
  ~Owned() { gremetl_string_free(s); }
};

struct Experiment {
  gremetl_experiment *h = nullptr;
  ~Experiment() { gremetl_experiment_free(h); }
};

struct Options {
  std::string config;
  std::optional<std::uint64_t> seed;
  std::optional<std::string> out;
  std::optional<double> p_explore;
  double lo = 0.0;
  double hi = 1.0;
  double step = 0.1;
  std::string run_dir;
  std::vector<std::string> run_dirs;
};

gremetl_status open_experiment(const Options &opt, Experiment &exp) {
  gremetl_status s = gremetl_experiment_from_file(opt.config.c_str(), &exp.h);
  if (s != GREMETL_OK)
    return s;
  if (opt.seed && (s = gremetl_experiment_set_seed(exp.h, *opt.seed)) != GREMETL_OK)
    return s;
  if (opt.p_explore &&
      (s = gremetl_experiment_set_p_explore(exp.h, *opt.p_explore)) != GREMETL_OK)
    return s;
  std::optional<std::string> dir = opt.out;
  if (!dir)
    if (const char *env = std::getenv("GREMETL_OUT_DIR"); env && *env)
      dir = env;
  if (dir)
    s = gremetl_experiment_set_output_dir(exp.h, dir->c_str());
  return s;
}

void add_experiment_flags(CLI::App *cmd, Options &opt) {
  cmd->add_option("--config", opt.config, "Experiment configuration (JSON)")
    ->required()
    ->check(CLI::ExistingFile);
  cmd->add_option("--seed", opt.seed, "Replace the configured seeds with this one");
  cmd->add_option("--out", opt.out, "Output directory");
  cmd->add_option("--p-explore", opt.p_explore, "Override meta_policy.p_explore");
}

int run_command(const std::string &name, const Options &opt) {
  if (name == "eval") {
    Owned out;
    const auto s = gremetl_eval(opt.run_dir.c_str(), &out.s);
    if (s != GREMETL_OK)
      return report_failure(s);
    std::cout << out.s << "\n";
    return 0;
  }
  if (name == "report") {
    std::vector<const char *> dirs;
    for (const auto &d : opt.run_dirs)
      dirs.push_back(d.c_str());
    Owned out;
    const auto s = gremetl_report(dirs.data(), dirs.size(),
                                  opt.out ? opt.out->c_str() : nullptr, &out.s);
    if (s != GREMETL_OK)
      return report_failure(s);
    std::cout << out.s;
    return 0;
  }

  Experiment exp;
  if (const auto s = open_experiment(opt, exp); s != GREMETL_OK)
    return report_failure(s);
  Owned out;
  gremetl_status s = GREMETL_OK;
  if (name == "meta-train")
    s = gremetl_meta_train(exp.h, &out.s);
  else if (name == "grid-search")
    s = gremetl_grid_search(exp.h, opt.lo, opt.hi, opt.step, &out.s);
  else
    s = gremetl_make_domains(exp.h, &out.s);
  if (s != GREMETL_OK)
    return report_failure(s);
  std::cout << out.s << "\n";
  return 0;
}

} // namespace

int main(int argc, char **argv) {
  CLI::App app{"Meta-learned gradient scaling and hyperparameter selection"};
  app.set_version_flag("--version", std::string(gremetl_version()));
  app.require_subcommand(1);

  Options opt;
  auto *train = app.add_subcommand("meta-train", "Run meta-training for every combination and seed");
  add_experiment_flags(train, opt);

  auto *grid = app.add_subcommand("grid-search", "Grid-search p_explore");
  add_experiment_flags(grid, opt);
  grid->add_option("--lo", opt.lo, "Lower end of the grid")->capture_default_str();
  grid->add_option("--hi", opt.hi, "Upper end of the grid")->capture_default_str();
  grid->add_option("--step", opt.step, "Grid spacing")->capture_default_str();

  auto *domains = app.add_subcommand("make-domains", "Cluster LETOR queries into pseudo-domains");
  add_experiment_flags(domains, opt);

  auto *eval = app.add_subcommand("eval", "Re-train greedily from a stored policy");
  eval->add_option("run_dir", opt.run_dir, "Run directory")->required();

  auto *report = app.add_subcommand("report", "Tabulate mean and 99% CI across runs");
  report->add_option("run_dirs", opt.run_dirs, "Run directories")->required();
  report->add_option("--out", opt.out, "Write the table as CSV to this file");

  try {
    app.parse(argc, argv);
  } catch (const CLI::Success &e) {
    return app.exit(e);
  } catch (const CLI::ParseError &e) {
    app.exit(e);
    return kExitValidation;
  }
  return run_command(app.get_subcommands().front()->get_name(), opt);
}
