#include <CLI11.hpp>
#include <string>

#include "sgflow/cli.hpp"

namespace {

void add_common_flags(CLI::App* sub, sgflow::cli::RunConfig& cfg) {
  sub->add_option("--problem", cfg.problem, "builtin problem name");
  sub->add_option("--config", cfg.config_path, "problem config JSON file");
  sub->add_option("--epsilon", cfg.epsilon, "gradient gain");
  sub->add_option("--alpha", cfg.alpha, "input-constraint gain");
  sub->add_option("--gamma", cfg.gamma, "barrier-constraint gain");
  sub->add_option("--beta", cfg.beta_override, "barrier recursion gain override");
  sub->add_option("--mode", cfg.mode, "hocbf | input_only");
  sub->add_option("--x0", cfg.x0, "initial state: 'auto' or comma list; ';' separates sweep points");
  sub->add_option("--u0", cfg.u0, "initial input: 'auto' or comma list");
  sub->add_option("--T", cfg.T, "horizon");
  sub->add_option("--dt", cfg.dt, "integration step");
  sub->add_option("--out", cfg.out_dir, "output directory");
  sub->add_option("--seed", cfg.seed, "sampling seed");
  sub->add_option("--delta", cfg.delta, "regularize: target suboptimality");
  sub->add_option("--candidates", cfg.candidates, "compare: candidate ring size");
  sub->add_option("--points", cfg.sweep_points, "sweep: default grid size");
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"feedback optimization with state constraints via safe gradient flows"};
  app.require_subcommand(1);

  sgflow::cli::RunConfig cfg;
  int rc = 0;

  auto* sim = app.add_subcommand("simulate", "integrate the closed loop and write trajectory CSV");
  add_common_flags(sim, cfg);
  sim->callback([&] { rc = sgflow::cli::cmd_simulate(cfg); });

  auto* cmp = app.add_subcommand("compare",
                                 "find a start where the input-only baseline violates the state "
                                 "constraint and the barrier controller does not");
  add_common_flags(cmp, cfg);
  cmp->callback([&] { rc = sgflow::cli::cmd_compare(cfg); });

  auto* swp = app.add_subcommand("sweep", "integrate from a grid of initial conditions");
  add_common_flags(swp, cfg);
  swp->callback([&] { rc = sgflow::cli::cmd_sweep(cfg); });

  auto* chk = app.add_subcommand("check",
                                 "relative-degree, feasibility-certificate, constraint-"
                                 "qualification and KKT diagnostics");
  add_common_flags(chk, cfg);
  chk->callback([&] { rc = sgflow::cli::cmd_check(cfg); });

  auto* reg = app.add_subcommand("regularize", "sweep the interior-regularization grid");
  add_common_flags(reg, cfg);
  reg->callback([&] { rc = sgflow::cli::cmd_regularize(cfg); });

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return e.get_exit_code() == 0 ? 0 : sgflow::cli::kExitUsage;
  }
  return rc;
}
