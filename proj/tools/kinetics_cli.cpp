#include <iostream>
#include <memory>
#include <string>
#include <utility>
#include <vector>

#include "CLI11.hpp"

#include "kinetics/runner.hpp"

namespace {

std::string dashed(std::string key) {
  for (auto& ch : key)
    if (ch == '_') ch = '-';
  return "--" + key;
}

}  // namespace

int main(int argc, char** argv) {
  using namespace kinetics;
  CLI::App app{"Periodic kinetic slab solver"};
  app.require_subcommand(1);

  std::string config_path;
  app.add_option("--config", config_path, "Flat JSON config file; flags override its values");

  // Every config key is a flag; a few short aliases follow the documented interface.
  const std::vector<std::pair<std::string, std::string>> aliases{
      {"--tol", "tol_fix"}, {"--T0", "cycle_t0"}, {"--k", "cycle_k"}, {"--samples", "cycle_samples"}};
  struct Flag {
    CLI::Option* option;
    std::string key;
    std::string text;
  };
  std::vector<std::unique_ptr<Flag>> flags;
  auto add = [&](const std::string& name, const std::string& key, const std::string& help) {
    auto flag = std::make_unique<Flag>(Flag{nullptr, key, {}});
    flag->option = app.add_option(name, flag->text, help);
    flags.push_back(std::move(flag));
  };
  const auto defaults = to_json(RunConfig{});
  for (const auto& [key, value] : defaults.items()) add(dashed(key), key, "config key " + key);
  for (const auto& [flag, key] : aliases) add(flag, key, "same as " + dashed(key));

  const std::vector<std::pair<std::string, std::string>> subcommands{
      {"steady", "Solve for the time-periodic state"},
      {"stability", "March a perturbation of the periodic state and fit its decay"},
      {"verify", "Run a property suite (--suite trivial|derived|paper|all)"},
      {"kernels", "Dump collision-frequency and kernel samples as CSV"},
      {"cycles", "Monte-Carlo estimate of the stochastic-cycle measure"},
      {"print-config", "Print the effective configuration"}};
  for (const auto& [name, help] : subcommands) app.add_subcommand(name, help)->fallthrough();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : exit_config;
  }

  RunConfig config;
  try {
    if (!config_path.empty()) config = load_config(config_path);
    for (const auto& flag : flags)
      if (flag->option->count() > 0) apply_override(config, flag->key, flag->text);
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return exit_config;
  }
  const std::string subcommand = app.get_subcommands().front()->get_name();
  return run_guarded(subcommand, config, std::cout);
}
