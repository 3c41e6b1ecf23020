#include <iostream>
#include <string>

#include <CLI11.hpp>

#include <estqvi/cli.hpp>

int main(int argc, char** argv) {
  CLI::App app{"Stationary optimal switching growth models: closed forms, QVI solver, simulation"};
  std::string subcommand, config, out_dir;
  app.add_option("subcommand", subcommand, "validate | analytic | solve | simulate | compare")
      ->required()
      ->check(CLI::IsMember({"validate", "analytic", "solve", "simulate", "compare"}));
  app.add_option("--config", config, "JSON run configuration")->required();
  app.add_option("--out-dir", out_dir, "output directory (default ./out)");
  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return estqvi::cli::parse_failure;
  }
  return estqvi::cli::run(subcommand, config, out_dir, {std::cout, std::cerr});
}
