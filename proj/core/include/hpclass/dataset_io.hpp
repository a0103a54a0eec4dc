#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "hpclass/encoder.hpp"
#include "hpclass/pcap.hpp"

namespace hpc {

/// Which encoding a packed dataset holds.
enum class EncodeSize { Full, Reduced };

/// Encoded-matrix cache: one fixed-side float matrix per packet plus its
/// class index. Values are stored at 32-bit precision, exactly as the
/// HPDS file carries them, so save/load is a bit-exact passthrough.
struct EncodedDataset {
    std::size_t side = 0;
    EncoderConfig encoder;
    std::vector<std::string> class_names;
    std::vector<std::uint32_t> labels;       // class index per record
    std::vector<std::vector<float>> matrices;  // side*side floats per record

    std::size_t size() const { return labels.size(); }
    bool empty() const { return labels.empty(); }

    /// Record as a double matrix for the numeric core.
    ByteMatrix matrix(std::size_t record) const;

    std::vector<std::size_t> class_counts() const;
};

/// Encode every packet of a labeled dataset at the chosen size.
EncodedDataset encode_dataset(const LabeledDataset& dataset, const EncoderConfig& config,
                              EncodeSize size);

/// Stratified split of encoded records; same selection rule and seed
/// behavior as hpc::split on raw datasets, so datasets ingested from the
/// same manifest split into aligned index sets.
struct EncodedSplit {
    EncodedDataset train;
    EncodedDataset test;
    std::vector<std::string> degenerate_classes;
};
EncodedSplit split_encoded(const EncodedDataset& dataset, const SplitSpec& spec);

/// HPDS packed dataset file.
void save_dataset(const EncodedDataset& dataset, const std::filesystem::path& path);
EncodedDataset load_dataset(const std::filesystem::path& path);

}  // namespace hpc
