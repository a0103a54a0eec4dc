#include "hpclass/encoder.hpp"

#include <algorithm>
#include <cmath>

namespace hpc {

namespace {
constexpr std::size_t kEthernetHeaderLen = 14;
}

void EncoderConfig::validate() const {
    if (target_bytes == 0) throw Error("target_bytes must be positive");
    if (full_side * full_side < target_bytes)
        throw Error("full_side^2 must cover target_bytes");
    if (reduced_side < 2 || reduced_side >= full_side)
        throw Error("reduced_side must be in [2, full_side)");
}

ByteMatrix encode_full(const RawPacket& packet, const EncoderConfig& config) {
    config.validate();
    const std::uint8_t* begin = packet.bytes.data();
    std::size_t len = packet.bytes.size();
    if (config.strip_link_layer) {
        const std::size_t strip = std::min(len, kEthernetHeaderLen);
        begin += strip;
        len -= strip;
    }
    len = std::min(len, config.target_bytes);

    ByteMatrix out(config.full_side);
    for (std::size_t i = 0; i < len; ++i)
        out.values[i] = static_cast<double>(begin[i]) / 255.0;
    return out;
}

ByteMatrix encode_reduced(const RawPacket& packet, const EncoderConfig& config) {
    return downsample(encode_full(packet, config), config.reduced_side);
}

ByteMatrix downsample(const ByteMatrix& matrix, std::size_t target_side) {
    if (target_side < 2 || target_side > matrix.side)
        throw InvalidTarget("downsample target must be in [2, source side]");

    const std::size_t s = matrix.side;
    const std::size_t t = target_side;
    const double scale = static_cast<double>(s - 1) / static_cast<double>(t - 1);

    ByteMatrix out(t);
    for (std::size_t i = 0; i < t; ++i) {
        const double y = static_cast<double>(i) * scale;
        const auto y0 = static_cast<std::size_t>(std::floor(y));
        const std::size_t y1 = std::min(y0 + 1, s - 1);
        const double fy = y - static_cast<double>(y0);
        for (std::size_t j = 0; j < t; ++j) {
            const double x = static_cast<double>(j) * scale;
            const auto x0 = static_cast<std::size_t>(std::floor(x));
            const std::size_t x1 = std::min(x0 + 1, s - 1);
            const double fx = x - static_cast<double>(x0);
            out.at(i, j) = (1.0 - fy) * ((1.0 - fx) * matrix.at(y0, x0) + fx * matrix.at(y0, x1)) +
                           fy * ((1.0 - fx) * matrix.at(y1, x0) + fx * matrix.at(y1, x1));
        }
    }
    return out;
}

}  // namespace hpc
