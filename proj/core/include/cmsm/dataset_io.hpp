#pragma once

#include <cstdint>
#include <filesystem>
#include <vector>

#include "cmsm/phantom.hpp"

namespace cmsm {

inline constexpr char kDatasetMagic[4] = {'C', 'M', 'S', 'D'};
inline constexpr std::uint32_t kDatasetVersion = 1;

/// CMSD layout (little-endian): "CMSD", u32 version, u32 record count; per record
/// u32 H, u32 W, u32 n_coils, f32 eta, ground truth, true maps and z as interleaved
/// re/im f32, ceil(W/8) bytes of packed column bits (LSB first), u32 acs_width.
[[nodiscard]] std::vector<std::uint8_t> encode_dataset(std::vector<DatasetRecord> const &records);
[[nodiscard]] std::vector<DatasetRecord> decode_dataset(std::vector<std::uint8_t> bytes);

void save_dataset(std::vector<DatasetRecord> const &records, std::filesystem::path const &path);
[[nodiscard]] std::vector<DatasetRecord> load_dataset(std::filesystem::path const &path);

}  // namespace cmsm
