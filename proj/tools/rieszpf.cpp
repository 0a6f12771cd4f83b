// rieszpf <subcommand> --config <path> [--seed N] [--output DIR]

#include <iostream>
#include <string>

#include "CLI11.hpp"
#include "rieszpf/experiment.hpp"

int main(int argc, char** argv) {
  CLI::App app{"Riesz-particle SMC and pseudo-marginal MH experiments"};
  app.require_subcommand(1, 1);

  std::string config_path;
  std::uint64_t seed = 0;
  std::string output;
  for (const char* name : {"generate-points", "filter-lgss", "pmh-lgss", "pmh-sv", "diagnostics"}) {
    auto* sub = app.add_subcommand(name, std::string("run the ") + name + " experiment");
    sub->add_option("--config", config_path, "JSON experiment config")->required();
    sub->add_option("--seed", seed, "override the config seed");
    sub->add_option("--output", output, "override the output directory");
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    std::cerr << rieszpf::json{{"error", "ConfigError"}, {"message", e.what()}, {"exit_code", 2}}.dump() << '\n';
    return 2;
  }

  auto* sub = app.get_subcommands().front();
  rieszpf::CliOverrides overrides;
  if (sub->count("--seed") > 0) overrides.seed = seed;
  if (sub->count("--output") > 0) overrides.output_dir = output;

  rieszpf::ExperimentConfig cfg;
  try {
    cfg = rieszpf::parse_config(rieszpf::read_json_file(config_path), sub->get_name(), overrides);
  } catch (const rieszpf::Error& e) {
    std::cerr << rieszpf::json{{"error", rieszpf::to_string(e.code())},
                               {"message", e.what()},
                               {"exit_code", rieszpf::exit_code(e.code())}}
                     .dump()
              << '\n';
    return rieszpf::exit_code(e.code());
  }
  return rieszpf::run_experiment(cfg, std::cerr);
}
