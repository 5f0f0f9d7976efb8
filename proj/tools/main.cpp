#include <CLI11.hpp>

#include <iostream>

#include "app/commands.hpp"
#include "app/config.hpp"

namespace app = cmsm::app;

int main(int argc, char **argv) {
  CLI::App cli{"Self-supervised parallel MRI reconstruction from undersampled multi-coil k-space.\n"};
  cli.require_subcommand(1);
  cli.footer("\n" + app::describe_keys() + "\nExit codes: 0 success, 2 config error, 3 data error, 4 numeric failure.");

  std::filesystem::path config_path;
  std::uint64_t seed = 0;
  std::filesystem::path out_path, resume_path;
  std::vector<std::filesystem::path> inputs;

  auto add_common = [&](CLI::App *sub) {
    sub->add_option("--config", config_path, "key = value configuration file; omitted keys keep their defaults")
        ->check(CLI::ExistingFile);
    sub->add_option("--seed", seed, "override the seed this command uses");
    sub->add_option("--out", out_path, "override the command's output path");
  };
  auto *simulate = cli.add_subcommand("simulate", "write train.cmsd and test.cmsd into paths.data_dir");
  auto *train = cli.add_subcommand("train", "fit the denoiser and coil map networks on train.cmsd");
  auto *reconstruct = cli.add_subcommand("reconstruct", "zero-filled, TV and C-MSM reconstructions of test.cmsd");
  auto *evaluate = cli.add_subcommand("evaluate", "aggregate metric CSVs into mean ± std per method and R");
  for (auto *sub : {simulate, train, reconstruct, evaluate}) add_common(sub);
  train->add_option("--resume", resume_path, "continue from this checkpoint")->check(CLI::ExistingFile);
  evaluate->add_option("csv", inputs, "metric CSVs (default paths.metrics)");

  try {
    cli.parse(argc, argv);
  } catch (CLI::CallForHelp const &e) {
    return cli.exit(e);
  } catch (CLI::CallForAllHelp const &e) {
    return cli.exit(e);
  } catch (CLI::ParseError const &e) {
    cli.exit(e);
    return 2;
  }

  try {
    app::RunConfig config = config_path.empty() ? app::RunConfig{} : app::load_config(config_path);
    app::Overrides overrides;
    for (auto *sub : {simulate, train, reconstruct, evaluate}) {
      if (sub->count("--seed")) overrides.seed = seed;
      if (sub->count("--out")) overrides.out = out_path;
    }
    if (simulate->parsed()) {
      app::cmd_simulate(app::apply_overrides(config, app::Command::simulate, overrides), std::cout);
    } else if (train->parsed()) {
      std::optional<std::filesystem::path> resume;
      if (train->count("--resume")) resume = resume_path;
      app::cmd_train(app::apply_overrides(config, app::Command::train, overrides), resume, std::cout);
    } else if (reconstruct->parsed()) {
      app::cmd_reconstruct(app::apply_overrides(config, app::Command::reconstruct, overrides), std::cout);
    } else {
      app::cmd_evaluate(app::apply_overrides(config, app::Command::evaluate, overrides), inputs, std::cout);
    }
  } catch (std::exception const &e) {
    std::cerr << "error: " << e.what() << '\n';
    return app::exit_code(e);
  }
  return 0;
}
