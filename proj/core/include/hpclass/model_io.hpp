#pragma once

#include <filesystem>

#include "hpclass/cnn.hpp"

namespace hpc {

/// HPCM model file, version 1. Layout, all integers little-endian:
///   "HPCM"                                       4 bytes
///   version                                      u32 (= 1)
///   input_side, K, F, conv stride,
///   pool_size, pool_stride, n_in, n_out          8 x u32
///   class count, then per class u32 length + UTF-8 bytes
///   conv filters, conv biases,
///   dense weights, dense biases                  f32 each, row-major
///   CRC-32 of all preceding bytes                u32
void save_model(const CnnModel& model, const std::filesystem::path& path);

/// Errors: BadMagic, UnsupportedVersion, ShapeInconsistent (file size does
/// not match the header dims), ChecksumMismatch.
CnnModel load_model(const std::filesystem::path& path);

}  // namespace hpc
