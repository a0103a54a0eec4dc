#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "hpclass/error.hpp"

namespace hpc {

/// One captured packet. `bytes` holds exactly the captured octets of the
/// pcap record; `orig_len` is the on-the-wire length.
struct RawPacket {
    std::vector<std::uint8_t> bytes;
    std::uint32_t ts_sec = 0;
    std::uint32_t ts_usec = 0;
    std::uint32_t orig_len = 0;
    std::string label;

    bool operator==(const RawPacket&) const = default;
};

/// Packets plus the ordered class table. `counts[i]` is the number of
/// packets labeled `class_names[i]`.
struct LabeledDataset {
    std::vector<RawPacket> packets;
    std::vector<std::string> class_names;
    std::vector<std::size_t> counts;
    /// Link-layer type from the pcap global header; recorded, not
    /// interpreted. 0xffffffff after merging captures of mixed types.
    std::uint32_t link_type = 0;

    std::size_t size() const { return packets.size(); }
    bool empty() const { return packets.empty(); }

    /// Index of `name` in class_names, or npos.
    std::size_t class_index(const std::string& name) const;

    static constexpr std::size_t npos = static_cast<std::size_t>(-1);
};

struct SplitSpec {
    double train_fraction = 0.4;
    std::uint64_t seed = 0;
};

struct SplitResult {
    LabeledDataset train;
    LabeledDataset test;
    /// Classes with fewer than 2 packets; their packets were forced to train.
    std::vector<std::string> degenerate_classes;
};

/// Parse a classic-format pcap file, tagging every record with `label`.
/// Both byte orders are accepted via the magic number. Zero records is an
/// empty dataset, not an error.
LabeledDataset parse_pcap(const std::filesystem::path& file, const std::string& label);

/// Parse from an in-memory buffer (same contract as the file overload).
LabeledDataset parse_pcap_buffer(const std::uint8_t* data, std::size_t len,
                                 const std::string& label);

/// Concatenate datasets; class_names is the union in first-seen order.
LabeledDataset merge(const std::vector<LabeledDataset>& datasets);

/// Stratified train/test split: each class contributes
/// floor(train_fraction * class_count) packets to train, the rest to test,
/// selected by a seed-determined permutation. Classes with fewer than 2
/// packets go to train and are reported in degenerate_classes.
SplitResult split(const LabeledDataset& dataset, const SplitSpec& spec);

/// The selection rule behind split(), shared with the encoded-dataset
/// split: records of one class are permuted by a seed-derived shuffle and
/// the first floor(train_fraction * count) flagged for train. Depends only
/// on (class_of, num_classes, spec), so any two datasets with identical
/// label sequences split into identical index sets.
struct StratifiedSelection {
    std::vector<bool> to_train;
    std::vector<std::size_t> degenerate_classes;  // class indices with < 2 records
};
StratifiedSelection stratified_selection(const std::vector<std::uint32_t>& class_of,
                                         std::size_t num_classes, const SplitSpec& spec);

struct ManifestEntry {
    std::filesystem::path file;
    std::string label;
};

/// Dataset manifest: one `<file_path>,<application_name>` per line,
/// `#` comments and blank lines allowed. Relative paths resolve against
/// the manifest's directory.
std::vector<ManifestEntry> load_manifest(const std::filesystem::path& manifest);

/// Parse and merge every capture listed in a manifest.
LabeledDataset ingest_manifest(const std::filesystem::path& manifest);

}  // namespace hpc
