#include "hpclass/pcap.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <fstream>
#include <sstream>
#include <unordered_map>

#include "hpclass/rng.hpp"

namespace hpc {

namespace {

constexpr std::uint32_t kMagicNative = 0xa1b2c3d4u;
constexpr std::uint32_t kMagicSwapped = 0xd4c3b2a1u;
constexpr std::size_t kGlobalHeaderLen = 24;
constexpr std::size_t kRecordHeaderLen = 16;

std::uint32_t read_u32(const std::uint8_t* p, bool swap) {
    std::uint32_t v;
    std::memcpy(&v, p, 4);
    if (swap) v = __builtin_bswap32(v);
    return v;
}

}  // namespace

std::size_t LabeledDataset::class_index(const std::string& name) const {
    for (std::size_t i = 0; i < class_names.size(); ++i)
        if (class_names[i] == name) return i;
    return npos;
}

LabeledDataset parse_pcap_buffer(const std::uint8_t* data, std::size_t len,
                                 const std::string& label) {
    if (len < kGlobalHeaderLen)
        throw MalformedHeader("pcap shorter than the 24-byte global header");

    std::uint32_t magic;
    std::memcpy(&magic, data, 4);
    bool swap;
    if (magic == kMagicNative)
        swap = false;
    else if (magic == kMagicSwapped)
        swap = true;
    else {
        std::ostringstream os;
        os << "bad pcap magic 0x" << std::hex << magic;
        throw MalformedHeader(os.str());
    }

    LabeledDataset out;
    out.link_type = read_u32(data + 20, swap);
    out.class_names.push_back(label);
    out.counts.push_back(0);

    std::size_t pos = kGlobalHeaderLen;
    while (pos < len) {
        if (len - pos < kRecordHeaderLen)
            throw TruncatedRecord("partial record header at end of capture");
        RawPacket pkt;
        pkt.ts_sec = read_u32(data + pos + 0, swap);
        pkt.ts_usec = read_u32(data + pos + 4, swap);
        const std::uint32_t incl_len = read_u32(data + pos + 8, swap);
        pkt.orig_len = read_u32(data + pos + 12, swap);
        pos += kRecordHeaderLen;
        if (len - pos < incl_len)
            throw TruncatedRecord("record claims more bytes than remain in file");
        pkt.bytes.assign(data + pos, data + pos + incl_len);
        pos += incl_len;
        // some writers leave orig_len zero; keep the invariant orig_len >= caplen
        pkt.orig_len = std::max(pkt.orig_len, incl_len);
        pkt.label = label;
        out.packets.push_back(std::move(pkt));
    }
    out.counts[0] = out.packets.size();
    return out;
}

LabeledDataset parse_pcap(const std::filesystem::path& file, const std::string& label) {
    std::ifstream in(file, std::ios::binary);
    if (!in) throw IoError("cannot open pcap file: " + file.string());
    std::vector<std::uint8_t> buf((std::istreambuf_iterator<char>(in)),
                                  std::istreambuf_iterator<char>());
    return parse_pcap_buffer(buf.data(), buf.size(), label);
}

LabeledDataset merge(const std::vector<LabeledDataset>& datasets) {
    LabeledDataset out;
    bool first = true;
    for (const auto& ds : datasets) {
        if (first) {
            out.link_type = ds.link_type;
            first = false;
        } else if (out.link_type != ds.link_type) {
            out.link_type = 0xffffffffu;
        }
        for (std::size_t c = 0; c < ds.class_names.size(); ++c) {
            std::size_t idx = out.class_index(ds.class_names[c]);
            if (idx == LabeledDataset::npos) {
                out.class_names.push_back(ds.class_names[c]);
                out.counts.push_back(ds.counts[c]);
            } else {
                out.counts[idx] += ds.counts[c];
            }
        }
        out.packets.insert(out.packets.end(), ds.packets.begin(), ds.packets.end());
    }
    return out;
}

StratifiedSelection stratified_selection(const std::vector<std::uint32_t>& class_of,
                                         std::size_t num_classes, const SplitSpec& spec) {
    if (class_of.empty()) throw EmptyDataset("cannot split an empty dataset");
    if (!(spec.train_fraction > 0.0 && spec.train_fraction < 1.0))
        throw Error("train_fraction must be in (0,1)");

    std::vector<std::vector<std::size_t>> by_class(num_classes);
    for (std::size_t i = 0; i < class_of.size(); ++i) {
        if (class_of[i] >= num_classes) throw Error("record class index out of range");
        by_class[class_of[i]].push_back(i);
    }

    StratifiedSelection sel;
    sel.to_train.assign(class_of.size(), false);
    for (std::size_t c = 0; c < num_classes; ++c) {
        auto& idx = by_class[c];
        if (idx.empty()) continue;
        if (idx.size() < 2) {
            sel.degenerate_classes.push_back(c);
            for (std::size_t i : idx) sel.to_train[i] = true;
            continue;
        }
        Rng rng(mix_seed(spec.seed, c));
        fisher_yates(idx, rng);
        const auto n_train = static_cast<std::size_t>(
            std::floor(spec.train_fraction * static_cast<double>(idx.size())));
        for (std::size_t k = 0; k < n_train; ++k) sel.to_train[idx[k]] = true;
    }
    return sel;
}

SplitResult split(const LabeledDataset& dataset, const SplitSpec& spec) {
    std::vector<std::uint32_t> class_of(dataset.packets.size());
    for (std::size_t i = 0; i < dataset.packets.size(); ++i) {
        std::size_t c = dataset.class_index(dataset.packets[i].label);
        if (c == LabeledDataset::npos)
            throw Error("packet label not present in class_names: " + dataset.packets[i].label);
        class_of[i] = static_cast<std::uint32_t>(c);
    }

    StratifiedSelection sel =
        stratified_selection(class_of, dataset.class_names.size(), spec);

    SplitResult result;
    for (std::size_t c : sel.degenerate_classes)
        result.degenerate_classes.push_back(dataset.class_names[c]);
    for (auto* side : {&result.train, &result.test}) {
        side->class_names = dataset.class_names;
        side->counts.assign(dataset.class_names.size(), 0);
        side->link_type = dataset.link_type;
    }
    for (std::size_t i = 0; i < dataset.packets.size(); ++i) {
        LabeledDataset& side = sel.to_train[i] ? result.train : result.test;
        side.packets.push_back(dataset.packets[i]);
        side.counts[class_of[i]]++;
    }
    return result;
}

std::vector<ManifestEntry> load_manifest(const std::filesystem::path& manifest) {
    std::ifstream in(manifest);
    if (!in) throw IoError("cannot open manifest: " + manifest.string());
    const auto base = manifest.parent_path();

    std::vector<ManifestEntry> entries;
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        auto hash = line.find('#');
        if (hash != std::string::npos) line.erase(hash);
        // trim
        auto b = line.find_first_not_of(" \t\r");
        if (b == std::string::npos) continue;
        auto e = line.find_last_not_of(" \t\r");
        line = line.substr(b, e - b + 1);

        auto comma = line.rfind(',');
        if (comma == std::string::npos || comma == 0 || comma + 1 >= line.size()) {
            std::ostringstream os;
            os << manifest.string() << ":" << lineno
               << ": expected \"<file_path>,<application_name>\"";
            throw IoError(os.str());
        }
        ManifestEntry entry;
        std::string path_part = line.substr(0, comma);
        auto pe = path_part.find_last_not_of(" \t");
        path_part = path_part.substr(0, pe + 1);
        std::string label_part = line.substr(comma + 1);
        auto lb = label_part.find_first_not_of(" \t");
        label_part = label_part.substr(lb);

        std::filesystem::path p(path_part);
        entry.file = p.is_absolute() ? p : base / p;
        entry.label = label_part;
        entries.push_back(std::move(entry));
    }
    return entries;
}

LabeledDataset ingest_manifest(const std::filesystem::path& manifest) {
    std::vector<LabeledDataset> parts;
    for (const auto& entry : load_manifest(manifest))
        parts.push_back(parse_pcap(entry.file, entry.label));
    return merge(parts);
}

}  // namespace hpc
