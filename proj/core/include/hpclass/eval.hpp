#pragma once

#include <cstdint>
#include <functional>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "hpclass/catalog.hpp"
#include "hpclass/cnn.hpp"
#include "hpclass/dataset_io.hpp"
#include "hpclass/pipeline.hpp"

namespace hpc {

/// Row-major N x N counts, rows = true class, columns = predicted.
struct ConfusionMatrix {
    std::vector<std::string> class_names;
    std::vector<std::uint64_t> counts;

    ConfusionMatrix() = default;
    explicit ConfusionMatrix(std::vector<std::string> names)
        : class_names(std::move(names)),
          counts(class_names.size() * class_names.size(), 0) {}

    std::size_t size() const { return class_names.size(); }
    std::uint64_t& at(std::size_t t, std::size_t p) { return counts[t * size() + p]; }
    std::uint64_t at(std::size_t t, std::size_t p) const { return counts[t * size() + p]; }
    std::uint64_t row_sum(std::size_t t) const;
    std::uint64_t total() const;
    std::uint64_t diagonal() const;
};

/// How each evaluation trial draws its sample.
struct TrialSampling {
    enum class Mode {
        Balanced,  // equal per-class count, seed-determined random choice
        All        // the entire test set, no sampling
    };
    Mode mode = Mode::Balanced;
    /// Per-class sample size for Balanced; 0 means the minimum class count.
    std::size_t per_class = 0;
};

struct ClassificationReport {
    std::vector<std::string> class_names;
    std::size_t trials = 0;
    std::size_t samples_per_trial = 0;
    /// Counts summed over all trials; divide by `trials` for the mean
    /// (fractional) matrix.
    ConfusionMatrix total_confusion;
    std::vector<double> per_class_mean, per_class_max, per_class_min;
    double overall_mean = 0.0, overall_max = 0.0, overall_min = 0.0;
    double wall_seconds = 0.0;       // classification time across all trials
    double per_packet_seconds = 0.0;
    std::string fingerprint;

    double mean_count(std::size_t t, std::size_t p) const {
        return static_cast<double>(total_confusion.at(t, p)) / static_cast<double>(trials);
    }
};

/// Repeated-trial evaluation of a single model over an encoded test set.
/// Each of `trials` runs draws a seed-determined sample (seed + trial
/// index), classifies it, and contributes one confusion matrix; the
/// report aggregates max/mean/min accuracies and the pooled counts.
ClassificationReport evaluate(const CnnModel& model, const EncodedDataset& test_set,
                              std::size_t trials, const TrialSampling& sampling,
                              std::uint64_t seed);

/// Service-level evaluation of the hierarchical classifier over raw
/// packets. Packet labels may be service names or application names (the
/// catalog maps them).
ClassificationReport evaluate(const HierarchicalClassifier& classifier,
                              const LabeledDataset& test_set, std::size_t trials,
                              const TrialSampling& sampling, std::uint64_t seed);

struct BenchReport {
    std::size_t packets = 0;
    std::size_t repetitions = 0;
    double encode_full_seconds = 0.0;     // one encoding pass per size
    double encode_reduced_seconds = 0.0;
    double infer_full_seconds = 0.0;      // mean inference pass wall clock
    double infer_reduced_seconds = 0.0;
    /// 1 - reduced/full over inference only, and with encoding included.
    double saving_inference = 0.0;
    double saving_with_encode = 0.0;
    std::string fingerprint;
};

/// Timing comparison of full-size vs reduced-size classification on the
/// same packets. Each model consumes the packets at its own input side
/// (full encoding, downsampled when smaller), so passing one model twice
/// measures a saving of zero up to clock noise. Encoding is timed
/// separately from inference; inference is repeated `repetitions` times
/// and averaged.
BenchReport bench_timing(const CnnModel& model_full, const CnnModel& model_reduced,
                         const LabeledDataset& test_set, const EncoderConfig& encoder,
                         std::size_t repetitions);

struct AppAccuracyRow {
    std::string application;
    std::size_t test_count = 0;
    double accuracy_full = 0.0;
    double accuracy_reduced = 0.0;
};

struct AppComparison {
    std::vector<AppAccuracyRow> rows;
    std::vector<std::string> warnings;  // e.g. applications absent from the test set
    std::string fingerprint;
};

/// Per-application accuracy of the full-size per-service model vs the
/// reduced-size all-application model, over the same packets. The two
/// datasets must come from the same ingest order (identical label
/// sequences); rows follow the full model's class order.
AppComparison compare_app_level(const CnnModel& full_model, const CnnModel& reduced_model,
                                const EncodedDataset& full_test,
                                const EncodedDataset& reduced_test);

/// CSV emission, schema `section,row,col,value` with `#`-prefixed header
/// comments carrying the fingerprint. Evaluation CSVs contain no wall
/// clock values, so identical seeds give byte-identical files.
void write_report_csv(const ClassificationReport& report, std::ostream& out);
void write_bench_csv(const BenchReport& report, std::ostream& out);
void write_compare_csv(const AppComparison& cmp, std::ostream& out);

/// Human-readable table mirroring the CSV content.
void write_report_text(const ClassificationReport& report, std::ostream& out);

/// FNV-1a hash of a canonical settings string, rendered as 16 hex digits.
std::string fingerprint_hex(const std::string& canonical);

/// Canonical fingerprint input for (encoder, model, split) settings.
std::string canonical_settings(const EncoderConfig& encoder, const CnnModel* model,
                               const SplitSpec* split, const std::string& extra);

/// Deterministic float formatting used by every report writer.
std::string fmt_double(double v);

}  // namespace hpc
