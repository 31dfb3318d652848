#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>

#include "halfcar/app.hpp"

int main(int argc, char** argv) {
  CLI::App app{"Half-car active suspension MPC batch runner"};
  app.require_subcommand(1);

  std::string config_path;
  std::optional<std::uint64_t> seed_override;
  std::optional<std::string> out_override;

  CLI::App* run = app.add_subcommand("run", "run the configured controller comparison");
  run->add_option("config", config_path, "configuration file")->required();
  run->add_option("--seed", seed_override, "override the run seed");
  run->add_option("--out", out_override, "override the output directory");

  CLI::App* validate = app.add_subcommand("validate", "check a configuration file");
  validate->add_option("config", config_path, "configuration file")->required();

  CLI11_PARSE(app, argc, argv);

  if (app.got_subcommand(run)) {
    return halfcar::run_app(config_path,
                            halfcar::RunOverrides{seed_override, out_override},
                            std::cout, std::cerr);
  }
  return halfcar::validate_app(config_path, std::cout);
}
