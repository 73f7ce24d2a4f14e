// curveflow: command-line front end for the elastic-energy-preserving flow.

#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>

#include "curveflow/curveflow.hpp"

int main(int argc, char** argv) {
  using namespace curveflow;

  CLI::App app{"Elastic-energy-preserving curvature flow between locally convex curves"};
  app.require_subcommand(1);

  std::string config_path;
  ConfigOverrides overrides;
  double tolerance = 0.0, dt = 0.0, t_end = 0.0;
  int n = 0;
  std::string out_dir;

  const std::pair<const char*, const char*> commands[] = {
      {"simulate", "run the flow and write snapshots, frames and metrics"},
      {"table", "tabulate L/(2 pi m), rho_min, rho_max and energy at configured times"},
      {"homotopy", "rescale the target to the initial energy and record the deformation"},
      {"verify", "run the invariant property suite"},
      {"analyze", "run the flow and print the convergence report"},
  };
  for (const auto& [name, help] : commands) {
    auto* sub = app.add_subcommand(name, help);
    sub->add_option("--config", config_path, "configuration file (JSON)")->required();
    sub->add_option("--out", out_dir, "output directory");
    sub->add_option("--tolerance", tolerance, "relative tolerance for table comparison");
    sub->add_option("--dt", dt, "time step");
    sub->add_option("--n", n, "sample count");
    sub->add_option("--t-end", t_end, "final time");
  }

  CLI11_PARSE(app, argc, argv);
  const auto* sub = app.get_subcommands().front();
  if (sub->count("--out")) overrides.out_dir = out_dir;
  if (sub->count("--tolerance")) overrides.tolerance = tolerance;
  if (sub->count("--dt")) overrides.dt = dt;
  if (sub->count("--n")) overrides.n = n;
  if (sub->count("--t-end")) overrides.t_end = t_end;

  SimulationConfig config;
  try {
    config = load_config(config_path);
    config.mode = *mode_from_string(sub->get_name());
    apply_overrides(config, overrides);
  } catch (const Error& e) {
    std::cerr << "validation error: " << e.what() << '\n';
    return kExitValidation;
  }
  return dispatch(config);
}
