// Command-line front end: config-driven experiment runs, the bundled scenario
// catalog, and the seeded selfcheck suite. Worker count comes from the
// OSELEDETS_WORKERS environment variable (default: available cores).
//
// Exit codes: 0 success / all declared oracle checks pass, 1 an oracle or
// selfcheck failure, 2 configuration or usage errors.

#include <cstdint>
#include <iostream>
#include <string>

#include <CLI11.hpp>

#include <oseledets/experiment.hpp>

int main(int argc, char** argv) {
  CLI::App app{
      "Lyapunov spectra, Oseledets filtrations, and splittings of linear cocycles "
      "on finite-dimensional l^p spaces"};
  app.require_subcommand(1);

  auto* cmd_run = app.add_subcommand("run", "Run an experiment described by a JSON config");
  std::string config_path;
  cmd_run->add_option("config", config_path, "Path to the config JSON file")->required();
  bool quiet = false;
  cmd_run->add_flag("--quiet", quiet, "Suppress the report on stdout (files are still written)");

  auto* cmd_list =
      app.add_subcommand("list-scenarios", "List bundled scenarios and their declared oracles");

  auto* cmd_self = app.add_subcommand("selfcheck", "Run the seeded self-verification suite");
  std::uint64_t seed = 0;
  cmd_self->add_option("--seed", seed, "Seed for the random operator sweep (default 0)");
  double corrupt = 0.0;
  cmd_self
      ->add_option("--inject-tolerance-corruption", corrupt,
                   "Test hook: tighten every inequality by this relative margin")
      ->group("");  // hidden

  CLI11_PARSE(app, argc, argv);

  try {
    if (cmd_run->parsed()) {
      const oseledets::ExperimentConfig cfg = oseledets::load_config(config_path);
      const oseledets::RunReport rep = oseledets::run_experiment(cfg);
      oseledets::write_report_files(rep);
      if (!quiet) std::cout << oseledets::report_to_json(rep).dump(2) << "\n";
      return rep.all_oracles_pass ? 0 : 1;
    }
    if (cmd_list->parsed()) {
      for (const auto& s : oseledets::list_scenarios()) {
        std::cout << s.name << "  [" << s.oracle_type << "]\n";
        std::cout << "    " << s.description << "\n";
        std::cout << "    oracle: " << s.oracle_detail << "\n";
      }
      return 0;
    }
    if (cmd_self->parsed()) {
      const oseledets::SelfcheckReport rep = oseledets::selfcheck(seed, corrupt);
      std::cout << oseledets::selfcheck_to_json(rep).dump(2) << "\n";
      return rep.all_pass ? 0 : 1;
    }
  } catch (const oseledets::ConfigError& e) {
    std::cerr << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
  return 2;
}
