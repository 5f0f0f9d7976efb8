#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "cmsm/metrics.hpp"
#include "cmsm/models.hpp"
#include "config.hpp"

namespace cmsm::app {

struct Overrides {
  std::optional<std::uint64_t> seed;
  std::optional<std::filesystem::path> out;
};

enum class Command { simulate, train, reconstruct, evaluate };

/// --seed and --out land on the keys the command consumes.
[[nodiscard]] RunConfig apply_overrides(RunConfig config, Command command, Overrides const &overrides);

/// Worker count after applying the CMSM_THREADS cap.
[[nodiscard]] int thread_cap(int requested);

[[nodiscard]] Model<float> initial_model(RunConfig const &config);

void cmd_simulate(RunConfig const &config, std::ostream &out);
void cmd_train(RunConfig const &config, std::optional<std::filesystem::path> const &resume, std::ostream &out);
void cmd_reconstruct(RunConfig const &config, std::ostream &out);
void cmd_evaluate(RunConfig const &config, std::vector<std::filesystem::path> const &inputs, std::ostream &out);

struct AggregateRow {
  std::string method;
  double acceleration = 0;
  std::size_t count = 0;
  double psnr_mean = 0, psnr_std = 0;
  double ssim_mean = 0, ssim_std = 0;
};

inline constexpr char const *kInputMethod = "Input";
inline constexpr char const *kTvMethod = "TV";
inline constexpr char const *kCmsmMethod = "C-MSM";

/// Groups by (method, R); population standard deviation. Ordered by R, then
/// Input, TV, C-MSM, then any other method by name.
[[nodiscard]] std::vector<AggregateRow> aggregate(std::vector<MetricReport> const &reports);
[[nodiscard]] std::string aggregate_table(std::vector<AggregateRow> const &rows);
[[nodiscard]] std::string aggregate_csv(std::vector<AggregateRow> const &rows);

/// Exit status for an exception escaping a command: 2 config, 3 data, 4 numeric, 1 otherwise.
[[nodiscard]] int exit_code(std::exception const &e);

}  // namespace cmsm::app
