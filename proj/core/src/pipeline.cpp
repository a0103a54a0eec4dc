#include "hpclass/pipeline.hpp"

#include <algorithm>
#include <chrono>

#include "hpclass/error.hpp"

namespace hpc {

namespace {
using Clock = std::chrono::steady_clock;

std::int64_t ns_between(Clock::time_point a, Clock::time_point b) {
    return std::chrono::duration_cast<std::chrono::nanoseconds>(b - a).count();
}
}  // namespace

std::size_t argmax_lowest(const Tensor& probs) {
    std::size_t best = 0;
    for (std::size_t i = 1; i < probs.size(); ++i)
        if (probs.data[i] > probs.data[best]) best = i;
    return best;
}

HierarchicalClassifier HierarchicalClassifier::make(
    CnnModel service_model, std::map<std::string, CnnModel> app_models, Catalog catalog,
    EncoderConfig encoder) {
    encoder.validate();
    catalog.validate();
    service_model.validate();
    if (service_model.class_names != catalog.services)
        throw ClassMismatch("service model classes do not match catalog services");
    if (service_model.input_side != encoder.reduced_side)
        throw ClassMismatch("service model expects reduced-size input");

    for (const auto& [svc, model] : app_models) {
        model.validate();
        if (catalog.service_index(svc) == Catalog::npos)
            throw UnknownServiceReference("app model registered for unknown service " + svc);
        if (model.input_side != encoder.full_side)
            throw ClassMismatch("app model for " + svc + " expects full-size input");
        const auto apps = catalog.applications_of(svc);
        for (const auto& cls : model.class_names)
            if (std::find(apps.begin(), apps.end(), cls) == apps.end())
                throw ClassMismatch("app model class " + cls +
                                    " is not an application of service " + svc);
    }

    HierarchicalClassifier h;
    h.service_model_ = std::move(service_model);
    h.app_models_ = std::move(app_models);
    h.catalog_ = std::move(catalog);
    h.encoder_ = encoder;
    return h;
}

const CnnModel* HierarchicalClassifier::app_model(const std::string& service) const {
    auto it = app_models_.find(service);
    return it == app_models_.end() ? nullptr : &it->second;
}

std::pair<std::string, double> HierarchicalClassifier::classify_service(
    const RawPacket& packet) const {
    const ByteMatrix m = encode_reduced(packet, encoder_);
    const ForwardResult fwd = forward(service_model_, m);
    const std::size_t idx = argmax_lowest(fwd.probs);
    return {service_model_.class_names[idx], fwd.probs.data[idx]};
}

PacketVerdict HierarchicalClassifier::classify_full(const RawPacket& packet) const {
    PacketVerdict verdict;

    const auto t0 = Clock::now();
    auto [service, prob] = classify_service(packet);
    const auto t1 = Clock::now();
    verdict.service = service;
    verdict.service_prob = prob;
    verdict.service_ns = ns_between(t0, t1);
    verdict.dscp = catalog_.dscp_map.at(service);

    if (const CnnModel* model = app_model(service)) {
        const auto t2 = Clock::now();
        const ByteMatrix m = encode_full(packet, encoder_);
        const ForwardResult fwd = forward(*model, m);
        const std::size_t idx = argmax_lowest(fwd.probs);
        const auto t3 = Clock::now();
        verdict.application = model->class_names[idx];
        verdict.app_prob = fwd.probs.data[idx];
        verdict.app_ns = ns_between(t2, t3);
    }
    return verdict;
}

HierarchicalClassifier::BatchResult HierarchicalClassifier::classify_batch(
    const std::vector<RawPacket>& packets) const {
    BatchResult result;
    result.verdicts.reserve(packets.size());
    const auto t0 = Clock::now();
    for (std::size_t i = 0; i < packets.size(); ++i) {
        try {
            result.verdicts.push_back(classify_full(packets[i]));
        } catch (const Error& e) {
            result.errors.emplace_back(i, e.what());
            result.verdicts.emplace_back();  // placeholder keeps input order
        }
    }
    const auto t1 = Clock::now();
    result.wall_seconds = std::chrono::duration<double>(t1 - t0).count();
    return result;
}

}  // namespace hpc
