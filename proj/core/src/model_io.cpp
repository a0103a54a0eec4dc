#include "hpclass/model_io.hpp"

#include <cstring>
#include <fstream>
#include <vector>

#include "hpclass/error.hpp"
#include "hpclass/hash.hpp"

namespace hpc {

namespace {

constexpr char kMagic[4] = {'H', 'P', 'C', 'M'};
constexpr std::uint32_t kVersion = 1;

void put_u32(std::vector<std::uint8_t>& out, std::uint32_t v) {
    out.push_back(static_cast<std::uint8_t>(v));
    out.push_back(static_cast<std::uint8_t>(v >> 8));
    out.push_back(static_cast<std::uint8_t>(v >> 16));
    out.push_back(static_cast<std::uint8_t>(v >> 24));
}

void put_f32(std::vector<std::uint8_t>& out, double v) {
    const auto f = static_cast<float>(v);
    std::uint32_t bits;
    std::memcpy(&bits, &f, 4);
    put_u32(out, bits);
}

std::uint32_t get_u32(const std::uint8_t* p) {
    return static_cast<std::uint32_t>(p[0]) | static_cast<std::uint32_t>(p[1]) << 8 |
           static_cast<std::uint32_t>(p[2]) << 16 | static_cast<std::uint32_t>(p[3]) << 24;
}

double get_f32(const std::uint8_t* p) {
    const std::uint32_t bits = get_u32(p);
    float f;
    std::memcpy(&f, &bits, 4);
    return static_cast<double>(f);
}

}  // namespace

void save_model(const CnnModel& model, const std::filesystem::path& path) {
    model.validate();

    std::vector<std::uint8_t> buf;
    buf.insert(buf.end(), kMagic, kMagic + 4);
    put_u32(buf, kVersion);
    put_u32(buf, static_cast<std::uint32_t>(model.input_side));
    put_u32(buf, static_cast<std::uint32_t>(model.conv.num_filters));
    put_u32(buf, static_cast<std::uint32_t>(model.conv.filter_side));
    put_u32(buf, static_cast<std::uint32_t>(model.conv.stride));
    put_u32(buf, static_cast<std::uint32_t>(model.pool_size));
    put_u32(buf, static_cast<std::uint32_t>(model.pool_stride));
    put_u32(buf, static_cast<std::uint32_t>(model.dense.n_in));
    put_u32(buf, static_cast<std::uint32_t>(model.dense.n_out));
    put_u32(buf, static_cast<std::uint32_t>(model.class_names.size()));
    for (const auto& name : model.class_names) {
        put_u32(buf, static_cast<std::uint32_t>(name.size()));
        buf.insert(buf.end(), name.begin(), name.end());
    }
    for (double w : model.conv.filters) put_f32(buf, w);
    for (double w : model.conv.biases) put_f32(buf, w);
    for (double w : model.dense.weights) put_f32(buf, w);
    for (double w : model.dense.biases) put_f32(buf, w);
    put_u32(buf, crc32(buf.data(), buf.size()));

    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot write model file: " + path.string());
    out.write(reinterpret_cast<const char*>(buf.data()),
              static_cast<std::streamsize>(buf.size()));
    if (!out) throw IoError("short write to model file: " + path.string());
}

CnnModel load_model(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open model file: " + path.string());
    std::vector<std::uint8_t> buf((std::istreambuf_iterator<char>(in)),
                                  std::istreambuf_iterator<char>());

    if (buf.size() < 4 || std::memcmp(buf.data(), kMagic, 4) != 0)
        throw BadMagic("not an HPCM model file: " + path.string());
    if (buf.size() < 8)
        throw ShapeInconsistent("model file shorter than its fixed header");
    const std::uint32_t version = get_u32(buf.data() + 4);
    if (version != kVersion)
        throw UnsupportedVersion("unsupported HPCM version " + std::to_string(version));
    if (buf.size() < 44)
        throw ShapeInconsistent("model file shorter than its fixed header");

    CnnModel m;
    const std::uint8_t* p = buf.data() + 8;
    m.input_side = get_u32(p + 0);
    m.conv.num_filters = get_u32(p + 4);
    m.conv.filter_side = get_u32(p + 8);
    m.conv.stride = get_u32(p + 12);
    m.pool_size = get_u32(p + 16);
    m.pool_stride = get_u32(p + 20);
    m.dense.n_in = get_u32(p + 24);
    m.dense.n_out = get_u32(p + 28);
    const std::uint32_t n_names = get_u32(p + 32);
    std::size_t pos = 44;

    for (std::uint32_t i = 0; i < n_names; ++i) {
        if (buf.size() - pos < 4)
            throw ShapeInconsistent("class-name block truncated");
        const std::uint32_t len = get_u32(buf.data() + pos);
        pos += 4;
        if (buf.size() - pos < len)
            throw ShapeInconsistent("class-name block truncated");
        m.class_names.emplace_back(reinterpret_cast<const char*>(buf.data() + pos), len);
        pos += len;
    }

    const std::size_t n_weights =
        m.conv.num_filters * m.conv.filter_side * m.conv.filter_side +
        m.conv.num_filters + m.dense.n_out * m.dense.n_in + m.dense.n_out;
    const std::size_t expected_size = pos + 4 * n_weights + 4;
    if (buf.size() != expected_size)
        throw ShapeInconsistent("weight payload length does not match header dims");

    const std::uint32_t stored_crc = get_u32(buf.data() + buf.size() - 4);
    if (crc32(buf.data(), buf.size() - 4) != stored_crc)
        throw ChecksumMismatch("model file CRC-32 mismatch");

    auto take = [&](std::vector<double>& dst, std::size_t count) {
        dst.resize(count);
        for (std::size_t i = 0; i < count; ++i, pos += 4)
            dst[i] = get_f32(buf.data() + pos);
    };
    take(m.conv.filters, m.conv.num_filters * m.conv.filter_side * m.conv.filter_side);
    take(m.conv.biases, m.conv.num_filters);
    take(m.dense.weights, m.dense.n_out * m.dense.n_in);
    take(m.dense.biases, m.dense.n_out);

    m.validate();
    return m;
}

}  // namespace hpc
