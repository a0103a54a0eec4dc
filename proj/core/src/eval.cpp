#include "hpclass/eval.hpp"

#include <algorithm>
#include <chrono>
#include <cstdio>
#include <limits>
#include <ostream>
#include <sstream>

#include "hpclass/error.hpp"
#include "hpclass/hash.hpp"
#include "hpclass/rng.hpp"

namespace hpc {

namespace {
using Clock = std::chrono::steady_clock;

/// Shared trial loop: `true_class[i]` is record i's class in report space,
/// `predict(i)` its predicted class. Sampling and aggregation are common
/// to the model and hierarchy paths.
ClassificationReport run_trials(const std::vector<std::uint32_t>& true_class,
                                std::vector<std::string> class_names,
                                const std::function<std::size_t(std::size_t)>& predict,
                                std::size_t trials, const TrialSampling& sampling,
                                std::uint64_t seed, std::string fingerprint) {
    if (true_class.empty()) throw EmptyTestSet("evaluation test set is empty");
    if (trials == 0) throw Error("trials must be positive");

    const std::size_t n_classes = class_names.size();
    std::vector<std::vector<std::size_t>> by_class(n_classes);
    for (std::size_t i = 0; i < true_class.size(); ++i)
        by_class[true_class[i]].push_back(i);

    std::size_t per_class = 0;
    if (sampling.mode == TrialSampling::Mode::Balanced) {
        std::size_t min_count = std::numeric_limits<std::size_t>::max();
        for (const auto& members : by_class)
            if (!members.empty()) min_count = std::min(min_count, members.size());
        per_class = sampling.per_class == 0 ? min_count
                                            : std::min(sampling.per_class, min_count);
        if (per_class == 0) throw EmptyTestSet("balanced sampling found an empty class");
    }

    ClassificationReport report;
    report.class_names = class_names;
    report.trials = trials;
    report.total_confusion = ConfusionMatrix(class_names);
    report.per_class_mean.assign(n_classes, 0.0);
    report.per_class_max.assign(n_classes, 0.0);
    report.per_class_min.assign(n_classes, 0.0);
    report.fingerprint = std::move(fingerprint);

    std::vector<double> class_acc_sum(n_classes, 0.0);
    std::vector<double> class_acc_max(n_classes, -1.0);
    std::vector<double> class_acc_min(n_classes, 2.0);
    double overall_sum = 0.0;
    double overall_max = -1.0;
    double overall_min = 2.0;
    double wall = 0.0;
    std::size_t classified = 0;

    std::vector<std::size_t> sample;
    for (std::size_t trial = 0; trial < trials; ++trial) {
        sample.clear();
        if (sampling.mode == TrialSampling::Mode::All) {
            for (std::size_t i = 0; i < true_class.size(); ++i) sample.push_back(i);
        } else {
            // per-trial seed = seed + trial index, so trials are independent
            // of execution order
            Rng rng(mix_seed(seed + trial, 0x7u));
            for (auto& members : by_class) {
                if (members.empty()) continue;
                // partial Fisher-Yates: the first per_class entries form the draw
                for (std::size_t k = 0; k < per_class; ++k) {
                    const std::size_t j = k + static_cast<std::size_t>(
                                                  rng.below(members.size() - k));
                    std::swap(members[k], members[j]);
                    sample.push_back(members[k]);
                }
            }
        }

        ConfusionMatrix trial_matrix(class_names);
        const auto t0 = Clock::now();
        for (std::size_t rec : sample) {
            const std::size_t pred = predict(rec);
            trial_matrix.at(true_class[rec], pred)++;
        }
        const auto t1 = Clock::now();
        wall += std::chrono::duration<double>(t1 - t0).count();
        classified += sample.size();

        double diag = 0.0;
        for (std::size_t c = 0; c < n_classes; ++c) {
            const std::uint64_t row = trial_matrix.row_sum(c);
            if (row == 0) continue;
            const double acc = static_cast<double>(trial_matrix.at(c, c)) /
                               static_cast<double>(row);
            class_acc_sum[c] += acc;
            class_acc_max[c] = std::max(class_acc_max[c], acc);
            class_acc_min[c] = std::min(class_acc_min[c], acc);
            diag += static_cast<double>(trial_matrix.at(c, c));
        }
        const double overall = diag / static_cast<double>(sample.size());
        overall_sum += overall;
        overall_max = std::max(overall_max, overall);
        overall_min = std::min(overall_min, overall);

        for (std::size_t i = 0; i < trial_matrix.counts.size(); ++i)
            report.total_confusion.counts[i] += trial_matrix.counts[i];
        if (trial == 0) report.samples_per_trial = sample.size();
    }

    const auto n_trials = static_cast<double>(trials);
    for (std::size_t c = 0; c < n_classes; ++c) {
        report.per_class_mean[c] = class_acc_sum[c] / n_trials;
        report.per_class_max[c] = std::max(class_acc_max[c], 0.0);
        report.per_class_min[c] = class_acc_min[c] > 1.5 ? 0.0 : class_acc_min[c];
    }
    report.overall_mean = overall_sum / n_trials;
    report.overall_max = overall_max;
    report.overall_min = overall_min;
    report.wall_seconds = wall;
    report.per_packet_seconds =
        classified == 0 ? 0.0 : wall / static_cast<double>(classified);
    return report;
}

/// Map every dataset label into the model's class order by name.
std::vector<std::uint32_t> map_to_model_classes(const EncodedDataset& ds,
                                                const CnnModel& model) {
    std::vector<std::uint32_t> remap(ds.class_names.size());
    for (std::size_t c = 0; c < ds.class_names.size(); ++c) {
        auto it = std::find(model.class_names.begin(), model.class_names.end(),
                            ds.class_names[c]);
        if (it == model.class_names.end()) {
            // tolerate unused class-table entries as long as no record uses them
            remap[c] = std::numeric_limits<std::uint32_t>::max();
        } else {
            remap[c] =
                static_cast<std::uint32_t>(it - model.class_names.begin());
        }
    }
    std::vector<std::uint32_t> out(ds.size());
    for (std::size_t i = 0; i < ds.size(); ++i) {
        const std::uint32_t mapped = remap[ds.labels[i]];
        if (mapped == std::numeric_limits<std::uint32_t>::max())
            throw ClassMismatch("test label " + ds.class_names[ds.labels[i]] +
                                " is not a model class");
        out[i] = mapped;
    }
    return out;
}

}  // namespace

std::uint64_t ConfusionMatrix::row_sum(std::size_t t) const {
    std::uint64_t sum = 0;
    for (std::size_t p = 0; p < size(); ++p) sum += at(t, p);
    return sum;
}

std::uint64_t ConfusionMatrix::total() const {
    std::uint64_t sum = 0;
    for (std::uint64_t c : counts) sum += c;
    return sum;
}

std::uint64_t ConfusionMatrix::diagonal() const {
    std::uint64_t sum = 0;
    for (std::size_t i = 0; i < size(); ++i) sum += at(i, i);
    return sum;
}

ClassificationReport evaluate(const CnnModel& model, const EncodedDataset& test_set,
                              std::size_t trials, const TrialSampling& sampling,
                              std::uint64_t seed) {
    model.validate();
    if (test_set.empty()) throw EmptyTestSet("evaluation test set is empty");
    if (test_set.side != model.input_side)
        throw ClassMismatch("test set matrix side does not match model input");

    const std::vector<std::uint32_t> true_class = map_to_model_classes(test_set, model);

    std::ostringstream extra;
    extra << "eval;trials=" << trials << ";mode="
          << (sampling.mode == TrialSampling::Mode::All ? "all" : "balanced")
          << ";per_class=" << sampling.per_class << ";seed=" << seed;
    std::string fp =
        fingerprint_hex(canonical_settings(test_set.encoder, &model, nullptr, extra.str()));

    ByteMatrix scratch(test_set.side);
    auto predict = [&](std::size_t rec) {
        const auto& src = test_set.matrices[rec];
        for (std::size_t i = 0; i < src.size(); ++i)
            scratch.values[i] = static_cast<double>(src[i]);
        return argmax_lowest(forward(model, scratch).probs);
    };
    return run_trials(true_class, model.class_names, predict, trials, sampling, seed,
                      std::move(fp));
}

ClassificationReport evaluate(const HierarchicalClassifier& classifier,
                              const LabeledDataset& test_set, std::size_t trials,
                              const TrialSampling& sampling, std::uint64_t seed) {
    if (test_set.empty()) throw EmptyTestSet("evaluation test set is empty");
    const Catalog& catalog = classifier.catalog();

    std::vector<std::uint32_t> true_class(test_set.size());
    for (std::size_t i = 0; i < test_set.size(); ++i) {
        const std::string& label = test_set.packets[i].label;
        std::size_t svc = catalog.service_index(label);
        if (svc == Catalog::npos) {
            auto it = catalog.app_to_service.find(label);
            if (it == catalog.app_to_service.end())
                throw ClassMismatch("packet label " + label +
                                    " is neither a service nor a cataloged application");
            svc = catalog.service_index(it->second);
        }
        true_class[i] = static_cast<std::uint32_t>(svc);
    }

    std::ostringstream extra;
    extra << "eval-hier;trials=" << trials << ";seed=" << seed;
    std::string fp = fingerprint_hex(canonical_settings(
        classifier.encoder_config(), &classifier.service_model(), nullptr, extra.str()));

    auto predict = [&](std::size_t rec) {
        auto [service, prob] = classifier.classify_service(test_set.packets[rec]);
        (void)prob;
        return catalog.service_index(service);
    };
    return run_trials(true_class, catalog.services, predict, trials, sampling, seed,
                      std::move(fp));
}

BenchReport bench_timing(const CnnModel& model_full, const CnnModel& model_reduced,
                         const LabeledDataset& test_set, const EncoderConfig& encoder,
                         std::size_t repetitions) {
    model_full.validate();
    model_reduced.validate();
    encoder.validate();
    if (test_set.empty()) throw EmptyTestSet("bench test set is empty");
    if (repetitions == 0) throw Error("repetitions must be positive");
    for (const auto* m : {&model_full, &model_reduced})
        if (m->input_side > encoder.full_side || m->input_side < 2)
            throw ClassMismatch("bench model side exceeds the encoder's full side");

    BenchReport report;
    report.packets = test_set.size();
    report.repetitions = repetitions;

    // each model sees the packets at its own side: the full encoding, or
    // its downsampling when the model is smaller
    auto encode_for = [&](const CnnModel& model, const RawPacket& pkt) {
        ByteMatrix full = encode_full(pkt, encoder);
        if (model.input_side == encoder.full_side) return full;
        return downsample(full, model.input_side);
    };

    std::vector<ByteMatrix> full_mats, reduced_mats;
    full_mats.reserve(test_set.size());
    reduced_mats.reserve(test_set.size());

    auto t0 = Clock::now();
    for (const auto& pkt : test_set.packets)
        full_mats.push_back(encode_for(model_full, pkt));
    auto t1 = Clock::now();
    report.encode_full_seconds = std::chrono::duration<double>(t1 - t0).count();

    t0 = Clock::now();
    for (const auto& pkt : test_set.packets)
        reduced_mats.push_back(encode_for(model_reduced, pkt));
    t1 = Clock::now();
    report.encode_reduced_seconds = std::chrono::duration<double>(t1 - t0).count();

    volatile std::size_t sink = 0;  // keep the passes from being optimized out
    auto pass = [&](const CnnModel& model, const std::vector<ByteMatrix>& mats) {
        const auto start = Clock::now();
        std::size_t acc = 0;
        for (const auto& m : mats) acc += argmax_lowest(forward(model, m).probs);
        sink = sink + acc;
        return std::chrono::duration<double>(Clock::now() - start).count();
    };

    double full_total = 0.0, reduced_total = 0.0;
    for (std::size_t rep = 0; rep < repetitions; ++rep) {
        full_total += pass(model_full, full_mats);
        reduced_total += pass(model_reduced, reduced_mats);
    }
    report.infer_full_seconds = full_total / static_cast<double>(repetitions);
    report.infer_reduced_seconds = reduced_total / static_cast<double>(repetitions);
    report.saving_inference = 1.0 - report.infer_reduced_seconds / report.infer_full_seconds;
    const double full_with_encode = report.infer_full_seconds + report.encode_full_seconds;
    const double reduced_with_encode =
        report.infer_reduced_seconds + report.encode_reduced_seconds;
    report.saving_with_encode = 1.0 - reduced_with_encode / full_with_encode;

    std::ostringstream extra;
    extra << "bench;packets=" << test_set.size() << ";reps=" << repetitions;
    report.fingerprint =
        fingerprint_hex(canonical_settings(encoder, &model_full, nullptr, extra.str()));
    return report;
}

AppComparison compare_app_level(const CnnModel& full_model, const CnnModel& reduced_model,
                                const EncodedDataset& full_test,
                                const EncodedDataset& reduced_test) {
    full_model.validate();
    reduced_model.validate();
    if (full_test.size() != reduced_test.size())
        throw ClassMismatch("full and reduced test sets differ in record count");
    for (std::size_t i = 0; i < full_test.size(); ++i)
        if (full_test.class_names[full_test.labels[i]] !=
            reduced_test.class_names[reduced_test.labels[i]])
            throw ClassMismatch("full and reduced test sets disagree on record labels");
    if (full_test.side != full_model.input_side ||
        reduced_test.side != reduced_model.input_side)
        throw ClassMismatch("test set sides do not match the models");
    for (const auto& app : full_model.class_names)
        if (std::find(reduced_model.class_names.begin(), reduced_model.class_names.end(),
                      app) == reduced_model.class_names.end())
            throw ClassMismatch("application " + app + " missing from the reduced model");

    AppComparison cmp;
    ByteMatrix scratch_full(full_test.side), scratch_reduced(reduced_test.side);
    auto predict = [](const CnnModel& model, const EncodedDataset& ds, std::size_t rec,
                      ByteMatrix& scratch) {
        const auto& src = ds.matrices[rec];
        for (std::size_t i = 0; i < src.size(); ++i)
            scratch.values[i] = static_cast<double>(src[i]);
        return model.class_names[argmax_lowest(forward(model, scratch).probs)];
    };

    for (const auto& app : full_model.class_names) {
        AppAccuracyRow row;
        row.application = app;
        std::size_t hits_full = 0, hits_reduced = 0;
        for (std::size_t i = 0; i < full_test.size(); ++i) {
            if (full_test.class_names[full_test.labels[i]] != app) continue;
            row.test_count++;
            if (predict(full_model, full_test, i, scratch_full) == app) hits_full++;
            if (predict(reduced_model, reduced_test, i, scratch_reduced) == app)
                hits_reduced++;
        }
        if (row.test_count == 0) {
            cmp.warnings.push_back("application absent from test set: " + app);
            continue;
        }
        row.accuracy_full = static_cast<double>(hits_full) / static_cast<double>(row.test_count);
        row.accuracy_reduced =
            static_cast<double>(hits_reduced) / static_cast<double>(row.test_count);
        cmp.rows.push_back(std::move(row));
    }

    std::ostringstream extra;
    extra << "compare-app;records=" << full_test.size();
    cmp.fingerprint = fingerprint_hex(
        canonical_settings(full_test.encoder, &full_model, nullptr, extra.str()));
    return cmp;
}

std::string fmt_double(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.12g", v);
    return buf;
}

std::string fingerprint_hex(const std::string& canonical) {
    return to_hex(fnv1a64(canonical));
}

std::string canonical_settings(const EncoderConfig& encoder, const CnnModel* model,
                               const SplitSpec* split, const std::string& extra) {
    std::ostringstream os;
    os << "enc=" << encoder.target_bytes << "/" << encoder.full_side << "/"
       << encoder.reduced_side << "/" << (encoder.strip_link_layer ? 1 : 0);
    if (model) {
        os << ";arch=" << model->input_side << "/" << model->conv.num_filters << "/"
           << model->conv.filter_side << "/" << model->conv.stride << "/"
           << model->pool_size << "/" << model->pool_stride << "/" << model->dense.n_in
           << "/" << model->dense.n_out << ";classes=";
        for (std::size_t i = 0; i < model->class_names.size(); ++i) {
            if (i) os << ",";
            os << model->class_names[i];
        }
    }
    if (split) os << ";split=" << fmt_double(split->train_fraction) << "@" << split->seed;
    if (!extra.empty()) os << ";" << extra;
    return os.str();
}

void write_report_csv(const ClassificationReport& report, std::ostream& out) {
    out << "# fingerprint: " << report.fingerprint << "\n";
    out << "section,row,col,value\n";
    const std::size_t n = report.class_names.size();
    for (std::size_t t = 0; t < n; ++t)
        for (std::size_t p = 0; p < n; ++p)
            out << "confusion_mean," << report.class_names[t] << ","
                << report.class_names[p] << "," << fmt_double(report.mean_count(t, p))
                << "\n";
    for (std::size_t c = 0; c < n; ++c) {
        out << "per_class_accuracy," << report.class_names[c] << ",mean,"
            << fmt_double(report.per_class_mean[c]) << "\n";
        out << "per_class_accuracy," << report.class_names[c] << ",max,"
            << fmt_double(report.per_class_max[c]) << "\n";
        out << "per_class_accuracy," << report.class_names[c] << ",min,"
            << fmt_double(report.per_class_min[c]) << "\n";
    }
    out << "overall_accuracy,,mean," << fmt_double(report.overall_mean) << "\n";
    out << "overall_accuracy,,max," << fmt_double(report.overall_max) << "\n";
    out << "overall_accuracy,,min," << fmt_double(report.overall_min) << "\n";
    out << "meta,trials,," << report.trials << "\n";
    out << "meta,samples_per_trial,," << report.samples_per_trial << "\n";
}

void write_bench_csv(const BenchReport& report, std::ostream& out) {
    out << "# fingerprint: " << report.fingerprint << "\n";
    out << "section,row,col,value\n";
    out << "timing,encode,full," << fmt_double(report.encode_full_seconds) << "\n";
    out << "timing,encode,reduced," << fmt_double(report.encode_reduced_seconds) << "\n";
    out << "timing,inference,full," << fmt_double(report.infer_full_seconds) << "\n";
    out << "timing,inference,reduced," << fmt_double(report.infer_reduced_seconds) << "\n";
    out << "timing,saving,inference," << fmt_double(report.saving_inference) << "\n";
    out << "timing,saving,with_encode," << fmt_double(report.saving_with_encode) << "\n";
    out << "meta,packets,," << report.packets << "\n";
    out << "meta,repetitions,," << report.repetitions << "\n";
}

void write_compare_csv(const AppComparison& cmp, std::ostream& out) {
    out << "# fingerprint: " << cmp.fingerprint << "\n";
    for (const auto& w : cmp.warnings) out << "# warning: " << w << "\n";
    out << "section,row,col,value\n";
    for (const auto& row : cmp.rows) {
        out << "app_accuracy," << row.application << ",full,"
            << fmt_double(row.accuracy_full) << "\n";
        out << "app_accuracy," << row.application << ",reduced,"
            << fmt_double(row.accuracy_reduced) << "\n";
        out << "app_accuracy," << row.application << ",test_count," << row.test_count
            << "\n";
    }
}

void write_report_text(const ClassificationReport& report, std::ostream& out) {
    out << "classes: ";
    for (std::size_t i = 0; i < report.class_names.size(); ++i)
        out << (i ? ", " : "") << report.class_names[i];
    out << "\ntrials: " << report.trials
        << "  samples/trial: " << report.samples_per_trial << "\n";
    out << "accuracy (per class, max/mean/min):\n";
    for (std::size_t c = 0; c < report.class_names.size(); ++c)
        out << "  " << report.class_names[c] << ": " << fmt_double(report.per_class_max[c])
            << " / " << fmt_double(report.per_class_mean[c]) << " / "
            << fmt_double(report.per_class_min[c]) << "\n";
    out << "overall (max/mean/min): " << fmt_double(report.overall_max) << " / "
        << fmt_double(report.overall_mean) << " / " << fmt_double(report.overall_min)
        << "\n";
    out << "mean confusion (rows = true):\n";
    for (std::size_t t = 0; t < report.class_names.size(); ++t) {
        out << "  " << report.class_names[t] << ":";
        for (std::size_t p = 0; p < report.class_names.size(); ++p)
            out << " " << fmt_double(report.mean_count(t, p));
        out << "\n";
    }
    out << "wall: " << fmt_double(report.wall_seconds) << " s ("
        << fmt_double(report.per_packet_seconds * 1e6) << " us/packet)\n";
}

}  // namespace hpc
