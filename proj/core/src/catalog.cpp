#include "hpclass/catalog.hpp"

#include <fstream>
#include <set>
#include <sstream>

#include "hpclass/error.hpp"

namespace hpc {

std::vector<std::string> Catalog::applications_of(const std::string& service) const {
    std::vector<std::string> apps;
    for (const auto& app : app_order_) {
        auto it = app_to_service.find(app);
        if (it != app_to_service.end() && it->second == service) apps.push_back(app);
    }
    return apps;
}

std::size_t Catalog::service_index(const std::string& service) const {
    for (std::size_t i = 0; i < services.size(); ++i)
        if (services[i] == service) return i;
    return npos;
}

void Catalog::validate() const {
    std::set<std::uint8_t> seen_dscp;
    for (const auto& svc : services) {
        auto it = dscp_map.find(svc);
        if (it == dscp_map.end())
            throw CatalogParseError("service without dscp codepoint: " + svc);
        if (it->second > 63)
            throw BadDscp("dscp codepoint out of range for service " + svc);
        if (!seen_dscp.insert(it->second).second)
            throw BadDscp("dscp codepoint reused by service " + svc);
    }
    for (const auto& [app, svc] : app_to_service)
        if (service_index(svc) == npos)
            throw UnknownServiceReference("application " + app +
                                          " references unknown service " + svc);
}

Catalog parse_catalog_text(const std::string& text, const std::string& name) {
    Catalog catalog;
    std::istringstream in(text);
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        auto hash = line.find('#');
        if (hash != std::string::npos) line.erase(hash);
        std::istringstream ls(line);
        std::string keyword;
        if (!(ls >> keyword)) continue;

        auto fail = [&](const std::string& msg) -> CatalogParseError {
            std::ostringstream os;
            os << name << ":" << lineno << ": " << msg;
            return CatalogParseError(os.str());
        };

        if (keyword == "service") {
            std::string svc, dscp_kw;
            long dscp = -1;
            if (!(ls >> svc >> dscp_kw >> dscp) || dscp_kw != "dscp")
                throw fail("expected \"service <name> dscp <0-63>\"");
            if (catalog.service_index(svc) != Catalog::npos)
                throw fail("service declared twice: " + svc);
            if (dscp < 0 || dscp > 63)
                throw BadDscp(name + ":" + std::to_string(lineno) +
                              ": dscp codepoint out of range: " + std::to_string(dscp));
            catalog.services.push_back(svc);
            catalog.dscp_map[svc] = static_cast<std::uint8_t>(dscp);
        } else if (keyword == "app") {
            std::string app, svc;
            if (!(ls >> app >> svc))
                throw fail("expected \"app <application_name> <service_name>\"");
            if (catalog.app_to_service.count(app))
                throw DuplicateApplication(name + ":" + std::to_string(lineno) +
                                           ": application mapped twice: " + app);
            if (catalog.service_index(svc) == Catalog::npos)
                throw UnknownServiceReference(name + ":" + std::to_string(lineno) +
                                              ": unknown service: " + svc);
            catalog.app_to_service[app] = svc;
            catalog.app_order_.push_back(app);
        } else {
            throw fail("unknown keyword: " + keyword);
        }
    }
    catalog.validate();
    return catalog;
}

Catalog load_catalog(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open catalog file: " + path.string());
    std::ostringstream buf;
    buf << in.rdbuf();
    return parse_catalog_text(buf.str(), path.filename().string());
}

LabeledDataset relabel_by_service(const LabeledDataset& dataset, const Catalog& catalog) {
    LabeledDataset out;
    out.link_type = dataset.link_type;
    out.class_names = catalog.services;
    out.counts.assign(catalog.services.size(), 0);
    out.packets.reserve(dataset.size());
    for (const auto& pkt : dataset.packets) {
        auto it = catalog.app_to_service.find(pkt.label);
        if (it == catalog.app_to_service.end())
            throw UnknownServiceReference("application not in catalog: " + pkt.label);
        RawPacket copy = pkt;
        copy.label = it->second;
        out.counts[catalog.service_index(it->second)]++;
        out.packets.push_back(std::move(copy));
    }
    return out;
}

}  // namespace hpc
