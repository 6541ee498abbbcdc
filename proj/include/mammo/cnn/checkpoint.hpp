#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <vector>

#include "mammo/cnn/network.hpp"

namespace mammo::cnn {

// Little-endian container:
//   magic "MAMMOCNN" | u32 version
//   u32 input_size | u32 num_classes | u32 feature_dim | u32 layer_count
//   per layer: u8 kind | u32 channels | u32 kernel | u32 stride | u32 padding
//   u32 tensor_count
//   per tensor: u32 name_len | name | u32 rank | u64 extents[rank] | f64 data[]
inline constexpr char kCheckpointMagic[8] = {'M', 'A', 'M', 'M', 'O', 'C', 'N', 'N'};
inline constexpr std::uint32_t kCheckpointVersion = 1;

std::vector<std::uint8_t> save_checkpoint(Network& model);
Network load_checkpoint(std::span<const std::uint8_t> bytes);

void save_checkpoint_file(Network& model, const std::filesystem::path& path);
Network load_checkpoint_file(const std::filesystem::path& path);

}  // namespace mammo::cnn
