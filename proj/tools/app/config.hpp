#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "cmsm/baselines.hpp"
#include "cmsm/phantom.hpp"
#include "cmsm/sampling.hpp"
#include "cmsm/training.hpp"

namespace cmsm::app {

struct ConfigError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct DataSettings {
  SimulationSpec spec;
  int train_records = 200;
  int test_records = 10;
  std::uint64_t seed = 1;
};

struct EvalSettings {
  std::vector<double> accelerations{4.0, 8.0};
  TvOptions tv;
  std::uint64_t seed = 1000;
};

struct PathSettings {
  std::filesystem::path data_dir = "data";
  std::filesystem::path checkpoint = "model.cmsm";
  std::filesystem::path train_log = "train_log.csv";
  std::filesystem::path recon_dir = "recon";
  std::filesystem::path metrics = "recon/metrics.csv";
  std::filesystem::path summary = "summary.csv";

  [[nodiscard]] std::filesystem::path train_set() const { return data_dir / "train.cmsd"; }
  [[nodiscard]] std::filesystem::path test_set() const { return data_dir / "test.cmsd"; }
};

struct RunConfig {
  DataSettings sim;
  TrainConfig train;
  int model_width = 32;
  SamplerConfig sample;
  EvalSettings eval;
  PathSettings paths;

  void validate() const;
};

struct ConfigKey {
  std::string name;
  std::string help;
  std::function<void(RunConfig &, std::string_view)> set;
  std::function<std::string(RunConfig const &)> get;
};

/// Every recognised key, in documentation order.
[[nodiscard]] std::vector<ConfigKey> const &config_keys();

/// Applies `key = value` lines on top of `base`. Unknown keys, malformed
/// values and repeated keys raise ConfigError naming the line.
[[nodiscard]] RunConfig parse_config(std::string_view text, RunConfig base = {});
[[nodiscard]] RunConfig load_config(std::filesystem::path const &path);

/// One line per key with its default, for --help.
[[nodiscard]] std::string describe_keys();

}  // namespace cmsm::app
