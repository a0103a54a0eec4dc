#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "hpclass/catalog.hpp"
#include "hpclass/cnn.hpp"
#include "hpclass/encoder.hpp"

namespace hpc {

/// Result of the two-stage classification of one packet.
struct PacketVerdict {
    std::string service;
    double service_prob = 0.0;
    /// Present only when an application model is registered for the service.
    std::optional<std::string> application;
    double app_prob = 0.0;
    std::uint8_t dscp = 0;
    std::int64_t service_ns = 0;  // encode + inference, service stage
    std::int64_t app_ns = 0;      // encode + inference, application stage
};

/// Service-aware classifier (reduced-size input) that dispatches to
/// per-service application-aware classifiers (full-size input). Immutable
/// after construction; classify_* are safe for concurrent callers.
class HierarchicalClassifier {
public:
    /// Validates: service model classes == catalog services (ordered);
    /// every app model's classes are applications of its service; service
    /// model consumes reduced-size input, app models full-size.
    static HierarchicalClassifier make(CnnModel service_model,
                                       std::map<std::string, CnnModel> app_models,
                                       Catalog catalog, EncoderConfig encoder);

    const Catalog& catalog() const { return catalog_; }
    const CnnModel& service_model() const { return service_model_; }
    const EncoderConfig& encoder_config() const { return encoder_; }
    const CnnModel* app_model(const std::string& service) const;

    /// Reduced-size encode, service model forward, argmax (ties to the
    /// lowest class index).
    std::pair<std::string, double> classify_service(const RawPacket& packet) const;

    /// Full two-stage verdict with DSCP codepoint and per-stage timings.
    /// A missing application model is not an error; the verdict carries
    /// the service stage only.
    PacketVerdict classify_full(const RawPacket& packet) const;

    struct BatchResult {
        std::vector<PacketVerdict> verdicts;  // input order
        std::vector<std::pair<std::size_t, std::string>> errors;  // index, message
        double wall_seconds = 0.0;
    };

    /// Verdicts in input order; per-packet failures are collected, not fatal.
    BatchResult classify_batch(const std::vector<RawPacket>& packets) const;

private:
    HierarchicalClassifier() = default;

    CnnModel service_model_;
    std::map<std::string, CnnModel> app_models_;
    Catalog catalog_;
    EncoderConfig encoder_;
};

/// Index of the largest probability; ties resolved to the lowest index.
std::size_t argmax_lowest(const Tensor& probs);

}  // namespace hpc
