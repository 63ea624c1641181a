// ndde: stability criteria and simulation for scalar neutral delay equations.

#include <iostream>
#include <string>

#include <CLI11.hpp>

#include "ndde/harness.hpp"

int main(int argc, char** argv) {
  CLI::App app{"Stability tests and simulation for scalar linear neutral delay differential equations"};
  app.require_subcommand(1);

  ndde::RunConfig cfg;
  std::string range, grid, criteria;
  double t_end = 0.0, dt = 0.0;

  auto add_sim_options = [&](CLI::App* sub) {
    sub->add_option("--t-end", t_end, "Integration horizon (default 200 max(1, max lag))");
    sub->add_option("--dt", dt, "Step size (default min(1e-3, min lag/100), lag-aligned)");
  };

  auto* check = app.add_subcommand("check", "Evaluate the stability criteria on a spec file");
  check->add_option("spec", cfg.eq_path, "Equation spec (JSON)")->required();
  check->add_option("--criteria", criteria, "Comma-separated criterion ids (default: all)");
  check->add_option("--out", cfg.out, "Write verdicts to this file");
  check->add_option("--format", cfg.format, "json or csv")->check(CLI::IsMember({"json", "csv"}));

  auto* simulate = app.add_subcommand("simulate", "Integrate a spec and estimate its decay");
  simulate->add_option("spec", cfg.eq_path, "Equation spec (JSON)")->required();
  add_sim_options(simulate);
  simulate->add_option("--out", cfg.out, "Write t,x,xdot CSV (plus a .decay.json sidecar)");

  auto* threshold = app.add_subcommand("threshold", "Bisect a parameter for the stability transition");
  threshold->add_option("spec", cfg.eq_path, "Base equation spec (JSON)")->required();
  threshold->add_option("--param", cfg.param, "tau, sigma, a, b, lambda, mu, t0 or a JSON pointer")->required();
  threshold->add_option("--range", range, "lo:hi")->required();
  threshold->add_option("--oracle", cfg.oracle, "simulate, a criterion id, or ids joined by '+'")->required();
  threshold->add_option("--tol", cfg.tol, "Bracket width at which to stop");
  add_sim_options(threshold);

  auto* sweep = app.add_subcommand("sweep", "Evaluate verdicts over a parameter grid");
  sweep->add_option("spec", cfg.eq_path, "Base equation spec (JSON)")->required();
  sweep->add_option("--grid", grid, "param=lo:hi:n[,param2=lo:hi:n]")->required();
  sweep->add_option("--oracle", cfg.oracle, "Comma-separated criterion ids and/or 'simulate' (default: all criteria)");
  sweep->add_option("--criteria", criteria, "Additional comma-separated criterion ids");
  sweep->add_option("--out", cfg.out, "Write the table here instead of stdout");
  sweep->add_option("--format", cfg.format, "csv or json")->check(CLI::IsMember({"json", "csv"}));
  add_sim_options(sweep);

  auto* reproduce = app.add_subcommand("reproduce", "Print the worked comparison tables");
  reproduce->add_option("which", cfg.which, "example1 or example2")->required()->check(
      CLI::IsMember({"example1", "example2"}));

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 1;
  }

  cfg.command = app.get_subcommands().front()->get_name();
  try {
    if (t_end > 0.0) cfg.t_end = t_end;
    if (dt > 0.0) cfg.dt = dt;
    if (!criteria.empty()) cfg.criteria = ndde::split(criteria, ',');
    if (!range.empty()) std::tie(cfg.lo, cfg.hi) = ndde::parse_range(range);
    if (!grid.empty()) cfg.grid = ndde::parse_grid(grid);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return ndde::run(cfg, std::cout, std::cerr);
}
