#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include "hpclass/pcap.hpp"

namespace hpc {

/// Maps applications into service classes and services to DSCP codepoints.
struct Catalog {
    std::vector<std::string> services;               // declaration order
    std::map<std::string, std::string> app_to_service;
    std::map<std::string, std::uint8_t> dscp_map;    // 6-bit codepoints

    /// Applications of one service, in declaration order.
    std::vector<std::string> applications_of(const std::string& service) const;

    std::size_t service_index(const std::string& service) const;
    static constexpr std::size_t npos = static_cast<std::size_t>(-1);

    /// Throws DuplicateApplication / UnknownServiceReference / BadDscp.
    void validate() const;

private:
    friend Catalog parse_catalog_text(const std::string&, const std::string&);
    std::vector<std::string> app_order_;  // preserves file order for applications_of
};

/// Line-oriented catalog file:
///   service <name> dscp <0-63>
///   app <application_name> <service_name>
/// with `#` comments and blank lines.
Catalog load_catalog(const std::filesystem::path& path);

/// Same grammar, from an in-memory string (name used in error messages).
Catalog parse_catalog_text(const std::string& text, const std::string& name);

/// Copy of `dataset` with every packet relabeled by its service class.
/// Applications missing from the catalog raise UnknownServiceReference.
LabeledDataset relabel_by_service(const LabeledDataset& dataset, const Catalog& catalog);

}  // namespace hpc
