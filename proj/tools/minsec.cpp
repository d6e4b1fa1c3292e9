#include <iostream>
#include <string>

#include <CLI11.hpp>

#include "minsec/runner.hpp"

int main(int argc, char** argv) {
  CLI::App app{"mass-minimizing circle-valued sections of circle bundles"};
  app.require_subcommand(1);

  std::string config_path, mesh_path;
  CLI::App* cmd_run =
      app.add_subcommand("run", "run the full pipeline from a config file");
  cmd_run->add_option("config", config_path, "path to the INI-style config")
      ->required();
  CLI::App* cmd_verify = app.add_subcommand(
      "verify-oracles", "check discrete energies against reference values");
  CLI::App* cmd_info =
      app.add_subcommand("mesh-info", "print statistics for a mesh file");
  cmd_info->add_option("meshfile", mesh_path, "path to a mesh file")
      ->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  if (cmd_run->parsed()) return minsec::run_command(config_path);
  if (cmd_verify->parsed()) return minsec::verify_oracles_command();
  if (cmd_info->parsed()) return minsec::mesh_info_command(mesh_path);
  std::cerr << "error: no subcommand given\n";
  return 2;
}
