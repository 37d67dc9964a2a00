// projlab: command-line front end.
//
//   projlab <command> [--config FILE] [--key value ...]
//
// Settings from --config are applied first; flags override them.

#include <iostream>
#include <map>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "projlab/cli.hpp"

int main(int argc, char** argv) {
  CLI::App app{"Discretized projection and additive-combinatorics experiments"};
  app.set_help_all_flag("--help-all");

  std::string command;
  app.add_option("command", command, "generate | project-sweep | kaufman | product-experiment | bsg | plunnecke | two-scale | verify")
      ->required()
      ->check(CLI::IsMember(projlab::command_names()));

  std::string config_path;
  app.add_option("--config", config_path, "key=value settings file (flags override it)");

  // Every settable key becomes a --key flag.
  std::vector<std::string> keys{"delta", "input", "output", "directions", "left", "right", "triples", "kind"};
  for (const auto& [k, v] : projlab::config_defaults()) keys.push_back(k);
  std::map<std::string, std::string> flag_values;
  std::map<std::string, CLI::Option*> flags;
  for (const auto& k : keys) {
    auto it = projlab::config_defaults().find(k);
    const std::string help = it == projlab::config_defaults().end() ? "" : "default " + it->second;
    flags[k] = app.add_option("--" + k, flag_values[k], help);
  }
  std::vector<std::string> params;
  app.add_option("--param", params, "generator parameter NAME=VALUE (repeatable)");

  CLI11_PARSE(app, argc, argv);

  projlab::ExperimentConfig cfg;
  try {
    if (!config_path.empty()) projlab::load_config_file(cfg, config_path);
    cfg.set("command", command);
    for (const auto& [k, opt] : flags) {
      if (opt->count() > 0) cfg.set(k, flag_values[k]);
    }
    for (const auto& p : params) {
      const auto eq = p.find('=');
      if (eq == std::string::npos) throw std::invalid_argument("--param expects NAME=VALUE, got '" + p + "'");
      cfg.set("param." + p.substr(0, eq), p.substr(eq + 1));
    }
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return projlab::run(cfg);
}
