#pragma once

#include <cstddef>
#include <vector>

#include "hpclass/error.hpp"
#include "hpclass/pcap.hpp"

namespace hpc {

/// Square matrix of normalized byte values in [0,1]; the classifier input.
struct ByteMatrix {
    std::size_t side = 0;
    std::vector<double> values;  // side*side, row-major

    ByteMatrix() = default;
    explicit ByteMatrix(std::size_t s) : side(s), values(s * s, 0.0) {}

    double& at(std::size_t i, std::size_t j) { return values[i * side + j]; }
    double at(std::size_t i, std::size_t j) const { return values[i * side + j]; }
};

struct EncoderConfig {
    std::size_t target_bytes = 1500;
    std::size_t full_side = 39;
    std::size_t reduced_side = 20;
    /// When set, drop a 14-byte Ethernet header before encoding. The
    /// link-layer type itself is not inspected.
    bool strip_link_layer = false;

    void validate() const;
};

/// Full-size encoding: optional link-layer strip, truncate/zero-pad to
/// target_bytes, zero-pad to full_side^2, divide by 255, fill row-major.
ByteMatrix encode_full(const RawPacket& packet, const EncoderConfig& config);

/// Reduced-size encoding: downsample(encode_full(packet), reduced_side).
ByteMatrix encode_reduced(const RawPacket& packet, const EncoderConfig& config);

/// Corner-aligned bilinear interpolation to target_side x target_side.
/// Output cell (i,j) samples source coordinate (i*(S-1)/(T-1), j*(S-1)/(T-1)).
ByteMatrix downsample(const ByteMatrix& matrix, std::size_t target_side);

}  // namespace hpc
