#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "cmsm/models.hpp"
#include "cmsm/params.hpp"

namespace cmsm {

inline constexpr char kCheckpointMagic[4] = {'C', 'M', 'S', 'M'};
inline constexpr std::uint32_t kCheckpointVersion = 1;

struct NamedTensor {
  std::string name;
  std::vector<std::uint32_t> dims;
  std::vector<float> data;

  bool operator==(NamedTensor const &) const = default;
};

/// Flat list of named f32 tensors. Layout (little-endian): "CMSM", u32 version,
/// u32 tensor count; per tensor u16 name length, name bytes, u8 ndims, u32 dims[ndims],
/// f32 data.
struct Checkpoint {
  std::vector<NamedTensor> tensors;

  [[nodiscard]] NamedTensor const *find(std::string const &name) const;
  [[nodiscard]] NamedTensor const &get(std::string const &name) const;
  void add(std::string name, std::vector<std::uint32_t> dims, std::vector<float> data);
  /// Scalars keep full double precision: the two f32 slots carry the raw bits of the double.
  void add_scalar(std::string name, double value);
  [[nodiscard]] double scalar(std::string const &name) const;

  bool operator==(Checkpoint const &) const = default;
};

[[nodiscard]] std::vector<std::uint8_t> encode_checkpoint(Checkpoint const &ckpt);
[[nodiscard]] Checkpoint decode_checkpoint(std::vector<std::uint8_t> bytes);
void save_checkpoint(Checkpoint const &ckpt, std::filesystem::path const &path);
[[nodiscard]] Checkpoint load_checkpoint(std::filesystem::path const &path);

/// Model weights and architecture, schedule constants, and optionally the optimizer
/// state and iteration counter needed to resume training.
struct TrainState {
  Model<float> model;
  std::optional<AdamState<float>> adam;
  std::int64_t iteration = 0;
};

[[nodiscard]] Checkpoint make_checkpoint(Model<float> const &model, AdamState<float> const *adam = nullptr,
                                         std::int64_t iteration = 0);
/// Throws DataError when the checkpoint is missing architecture or weight tensors.
[[nodiscard]] TrainState restore_checkpoint(Checkpoint const &ckpt);

}  // namespace cmsm
