#include "hpclass/dataset_io.hpp"

#include <cstring>
#include <fstream>

#include "hpclass/error.hpp"

namespace hpc {

namespace {

constexpr char kMagic[4] = {'H', 'P', 'D', 'S'};
constexpr std::uint32_t kVersion = 1;

void put_u32(std::vector<std::uint8_t>& out, std::uint32_t v) {
    out.push_back(static_cast<std::uint8_t>(v));
    out.push_back(static_cast<std::uint8_t>(v >> 8));
    out.push_back(static_cast<std::uint8_t>(v >> 16));
    out.push_back(static_cast<std::uint8_t>(v >> 24));
}

void put_f32(std::vector<std::uint8_t>& out, float v) {
    std::uint32_t bits;
    std::memcpy(&bits, &v, 4);
    put_u32(out, bits);
}

class Reader {
public:
    Reader(const std::uint8_t* data, std::size_t len) : p_(data), end_(data + len) {}

    std::uint32_t u32() {
        need(4);
        std::uint32_t v = static_cast<std::uint32_t>(p_[0]) |
                          static_cast<std::uint32_t>(p_[1]) << 8 |
                          static_cast<std::uint32_t>(p_[2]) << 16 |
                          static_cast<std::uint32_t>(p_[3]) << 24;
        p_ += 4;
        return v;
    }

    float f32() {
        std::uint32_t bits = u32();
        float v;
        std::memcpy(&v, &bits, 4);
        return v;
    }

    std::string str(std::size_t len) {
        need(len);
        std::string s(reinterpret_cast<const char*>(p_), len);
        p_ += len;
        return s;
    }

    std::size_t remaining() const { return static_cast<std::size_t>(end_ - p_); }

private:
    void need(std::size_t n) const {
        if (remaining() < n) throw ShapeInconsistent("dataset file truncated");
    }
    const std::uint8_t* p_;
    const std::uint8_t* end_;
};

}  // namespace

ByteMatrix EncodedDataset::matrix(std::size_t record) const {
    ByteMatrix m(side);
    const auto& src = matrices[record];
    for (std::size_t i = 0; i < src.size(); ++i)
        m.values[i] = static_cast<double>(src[i]);
    return m;
}

std::vector<std::size_t> EncodedDataset::class_counts() const {
    std::vector<std::size_t> counts(class_names.size(), 0);
    for (std::uint32_t c : labels) counts[c]++;
    return counts;
}

EncodedDataset encode_dataset(const LabeledDataset& dataset, const EncoderConfig& config,
                              EncodeSize size) {
    config.validate();
    EncodedDataset out;
    out.encoder = config;
    out.side = size == EncodeSize::Full ? config.full_side : config.reduced_side;
    out.class_names = dataset.class_names;
    out.labels.reserve(dataset.size());
    out.matrices.reserve(dataset.size());

    for (const auto& pkt : dataset.packets) {
        std::size_t c = dataset.class_index(pkt.label);
        if (c == LabeledDataset::npos)
            throw Error("packet label not present in class_names: " + pkt.label);
        out.labels.push_back(static_cast<std::uint32_t>(c));
        ByteMatrix m = size == EncodeSize::Full ? encode_full(pkt, config)
                                                : encode_reduced(pkt, config);
        std::vector<float> q(m.values.size());
        for (std::size_t i = 0; i < q.size(); ++i)
            q[i] = static_cast<float>(m.values[i]);
        out.matrices.push_back(std::move(q));
    }
    return out;
}

EncodedSplit split_encoded(const EncodedDataset& dataset, const SplitSpec& spec) {
    StratifiedSelection sel =
        stratified_selection(dataset.labels, dataset.class_names.size(), spec);

    EncodedSplit result;
    for (std::size_t c : sel.degenerate_classes)
        result.degenerate_classes.push_back(dataset.class_names[c]);
    for (auto* side : {&result.train, &result.test}) {
        side->side = dataset.side;
        side->encoder = dataset.encoder;
        side->class_names = dataset.class_names;
    }
    for (std::size_t i = 0; i < dataset.size(); ++i) {
        EncodedDataset& side = sel.to_train[i] ? result.train : result.test;
        side.labels.push_back(dataset.labels[i]);
        side.matrices.push_back(dataset.matrices[i]);
    }
    return result;
}

void save_dataset(const EncodedDataset& dataset, const std::filesystem::path& path) {
    std::vector<std::uint8_t> buf;
    buf.insert(buf.end(), kMagic, kMagic + 4);
    put_u32(buf, kVersion);
    put_u32(buf, static_cast<std::uint32_t>(dataset.encoder.target_bytes));
    put_u32(buf, static_cast<std::uint32_t>(dataset.encoder.full_side));
    put_u32(buf, static_cast<std::uint32_t>(dataset.encoder.reduced_side));
    put_u32(buf, dataset.encoder.strip_link_layer ? 1 : 0);
    put_u32(buf, static_cast<std::uint32_t>(dataset.side));
    put_u32(buf, static_cast<std::uint32_t>(dataset.class_names.size()));
    for (const auto& name : dataset.class_names) {
        put_u32(buf, static_cast<std::uint32_t>(name.size()));
        buf.insert(buf.end(), name.begin(), name.end());
    }
    put_u32(buf, static_cast<std::uint32_t>(dataset.size()));
    for (std::size_t r = 0; r < dataset.size(); ++r) {
        put_u32(buf, dataset.labels[r]);
        for (float v : dataset.matrices[r]) put_f32(buf, v);
    }

    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot write dataset file: " + path.string());
    out.write(reinterpret_cast<const char*>(buf.data()),
              static_cast<std::streamsize>(buf.size()));
    if (!out) throw IoError("short write to dataset file: " + path.string());
}

EncodedDataset load_dataset(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open dataset file: " + path.string());
    std::vector<std::uint8_t> buf((std::istreambuf_iterator<char>(in)),
                                  std::istreambuf_iterator<char>());

    if (buf.size() < 4 || std::memcmp(buf.data(), kMagic, 4) != 0)
        throw BadMagic("not an HPDS dataset file: " + path.string());
    Reader r(buf.data() + 4, buf.size() - 4);
    const std::uint32_t version = r.u32();
    if (version != kVersion)
        throw UnsupportedVersion("unsupported HPDS version " + std::to_string(version));

    EncodedDataset ds;
    ds.encoder.target_bytes = r.u32();
    ds.encoder.full_side = r.u32();
    ds.encoder.reduced_side = r.u32();
    ds.encoder.strip_link_layer = r.u32() != 0;
    ds.side = r.u32();
    const std::uint32_t n_classes = r.u32();
    for (std::uint32_t i = 0; i < n_classes; ++i) {
        const std::uint32_t len = r.u32();
        ds.class_names.push_back(r.str(len));
    }
    const std::uint32_t n_records = r.u32();
    const std::size_t cells = ds.side * ds.side;
    ds.labels.reserve(n_records);
    ds.matrices.reserve(n_records);
    for (std::uint32_t rec = 0; rec < n_records; ++rec) {
        const std::uint32_t label = r.u32();
        if (label >= n_classes)
            throw ShapeInconsistent("record label index out of range");
        ds.labels.push_back(label);
        std::vector<float> m(cells);
        for (std::size_t i = 0; i < cells; ++i) m[i] = r.f32();
        ds.matrices.push_back(std::move(m));
    }
    if (r.remaining() != 0)
        throw ShapeInconsistent("trailing bytes after last dataset record");
    return ds;
}

}  // namespace hpc
