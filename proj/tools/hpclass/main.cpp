// hpclass: hierarchical encrypted packet classification toolkit.
//
// Subcommands: ingest, train, classify, evaluate, bench, compare-app.
// Exit codes: 0 success, 1 usage error, 2 data error.

#include <fstream>
#include <iostream>
#include <memory>
#include <optional>
#include <sstream>

#include "CLI11.hpp"
#include "hpclass/catalog.hpp"
#include "hpclass/dataset_io.hpp"
#include "hpclass/eval.hpp"
#include "hpclass/model_io.hpp"
#include "hpclass/pipeline.hpp"
#include "hpclass/trainer.hpp"

namespace {

struct EncoderFlags {
    std::size_t target_bytes = 1500;
    std::size_t full_side = 39;
    std::size_t reduced_side = 20;
    bool strip_link_layer = false;

    void attach(CLI::App* cmd) {
        cmd->add_option("--target-bytes", target_bytes, "Packet bytes kept per matrix");
        cmd->add_option("--full-side", full_side, "Full-size matrix side");
        cmd->add_option("--reduced-side", reduced_side, "Reduced-size matrix side");
        cmd->add_flag("--strip-link-layer", strip_link_layer,
                      "Drop the 14-byte Ethernet header before encoding");
    }

    hpc::EncoderConfig config() const {
        hpc::EncoderConfig cfg;
        cfg.target_bytes = target_bytes;
        cfg.full_side = full_side;
        cfg.reduced_side = reduced_side;
        cfg.strip_link_layer = strip_link_layer;
        cfg.validate();
        return cfg;
    }
};

std::ofstream open_out(const std::string& path) {
    std::ofstream out(path, std::ios::trunc);
    if (!out) throw hpc::IoError("cannot write output file: " + path);
    return out;
}

void run_ingest(const std::string& manifest, const std::string& out_path,
                const std::string& size, const EncoderFlags& enc,
                const std::string& catalog_path, bool service_labels) {
    auto dataset = hpc::ingest_manifest(manifest);
    if (service_labels) {
        if (catalog_path.empty())
            throw hpc::Error("--service-labels requires --catalog");
        dataset = hpc::relabel_by_service(dataset, hpc::load_catalog(catalog_path));
    }
    const auto mode = size == "reduced" ? hpc::EncodeSize::Reduced : hpc::EncodeSize::Full;
    auto encoded = hpc::encode_dataset(dataset, enc.config(), mode);
    hpc::save_dataset(encoded, out_path);

    std::cout << "ingested " << dataset.size() << " packets, " << encoded.class_names.size()
              << " classes, side " << encoded.side << " -> " << out_path << "\n";
    for (std::size_t c = 0; c < dataset.class_names.size(); ++c)
        std::cout << "  " << dataset.class_names[c] << ": " << dataset.counts[c] << "\n";
}

hpc::EncodedDataset load_side(const std::string& dataset_path, bool no_split,
                              bool train_side, double train_frac, std::uint64_t seed) {
    auto dataset = hpc::load_dataset(dataset_path);
    if (no_split) return dataset;
    auto parts = hpc::split_encoded(dataset, hpc::SplitSpec{train_frac, seed});
    for (const auto& name : parts.degenerate_classes)
        std::cerr << "warning: class " << name
                  << " has fewer than 2 records; kept in train\n";
    return train_side ? std::move(parts.train) : std::move(parts.test);
}

void run_train(const std::string& dataset_path, const std::string& out_path,
               const hpc::TrainConfig& cfg, double train_frac, bool no_split) {
    auto train_set = load_side(dataset_path, no_split, true, train_frac, cfg.seed);
    auto result = hpc::train(train_set, cfg, &std::cout);
    hpc::save_model(result.model, out_path);
    std::cout << "trained on " << train_set.size() << " records ("
              << train_set.class_names.size() << " classes) -> " << out_path << "\n";
}

void run_evaluate(const std::string& model_path, const std::string& dataset_path,
                  std::size_t trials, std::uint64_t seed, double train_frac,
                  bool no_split, const std::string& sample_mode, std::size_t sample_n,
                  const std::string& out_path) {
    auto model = hpc::load_model(model_path);
    auto test_set = load_side(dataset_path, no_split, false, train_frac, seed);

    hpc::TrialSampling sampling;
    sampling.mode = sample_mode == "all" ? hpc::TrialSampling::Mode::All
                                         : hpc::TrialSampling::Mode::Balanced;
    sampling.per_class = sample_n;

    auto report = hpc::evaluate(model, test_set, trials, sampling, seed);
    hpc::write_report_text(report, std::cout);
    std::cout << "fingerprint: " << report.fingerprint << "\n";
    if (!out_path.empty()) {
        auto out = open_out(out_path);
        hpc::write_report_csv(report, out);
        std::cout << "report -> " << out_path << "\n";
    }
}

void run_classify(const std::string& service_model_path,
                  const std::vector<std::string>& app_model_specs,
                  const std::string& catalog_path, const std::string& pcap_path,
                  const EncoderFlags& enc, const std::string& out_path) {
    auto catalog = hpc::load_catalog(catalog_path);
    auto service_model = hpc::load_model(service_model_path);
    std::map<std::string, hpc::CnnModel> app_models;
    for (const auto& spec : app_model_specs) {
        auto eq = spec.find('=');
        if (eq == std::string::npos)
            throw hpc::Error("--app-model expects <service>=<model-file>: " + spec);
        app_models.emplace(spec.substr(0, eq), hpc::load_model(spec.substr(eq + 1)));
    }
    auto classifier = hpc::HierarchicalClassifier::make(
        std::move(service_model), std::move(app_models), std::move(catalog), enc.config());

    auto dataset = hpc::parse_pcap(pcap_path, "");
    auto batch = classifier.classify_batch(dataset.packets);
    for (const auto& [index, message] : batch.errors)
        std::cerr << "packet " << index << ": " << message << "\n";

    std::ostream* out = &std::cout;
    std::ofstream file;
    if (!out_path.empty()) {
        file = open_out(out_path);
        out = &file;
    }
    const std::string fp = hpc::fingerprint_hex(hpc::canonical_settings(
        classifier.encoder_config(), &classifier.service_model(), nullptr, "classify"));
    (*out) << "# fingerprint: " << fp << "\n";
    (*out) << "index,service,service_prob,application,app_prob,dscp,service_ns,app_ns\n";
    for (std::size_t i = 0; i < batch.verdicts.size(); ++i) {
        const auto& v = batch.verdicts[i];
        (*out) << i << "," << v.service << "," << hpc::fmt_double(v.service_prob) << ","
               << (v.application ? *v.application : "") << ","
               << (v.application ? hpc::fmt_double(v.app_prob) : "") << ","
               << static_cast<unsigned>(v.dscp) << "," << v.service_ns << "," << v.app_ns
               << "\n";
    }
    std::cerr << "classified " << batch.verdicts.size() << " packets in "
              << hpc::fmt_double(batch.wall_seconds) << " s\n";
}

void run_bench(const std::string& full_model_path, const std::string& reduced_model_path,
               const std::string& manifest, const EncoderFlags& enc, std::size_t reps,
               bool include_encode, const std::string& out_path) {
    auto model_full = hpc::load_model(full_model_path);
    auto model_reduced = hpc::load_model(reduced_model_path);
    auto packets = hpc::ingest_manifest(manifest);

    auto report = hpc::bench_timing(model_full, model_reduced, packets, enc.config(), reps);
    std::cout << "packets: " << report.packets << "  repetitions: " << report.repetitions
              << "\n";
    std::cout << "encode   full " << hpc::fmt_double(report.encode_full_seconds)
              << " s, reduced " << hpc::fmt_double(report.encode_reduced_seconds) << " s\n";
    std::cout << "inference full " << hpc::fmt_double(report.infer_full_seconds)
              << " s, reduced " << hpc::fmt_double(report.infer_reduced_seconds) << " s\n";
    const double headline =
        include_encode ? report.saving_with_encode : report.saving_inference;
    std::cout << "saving (" << (include_encode ? "with encode" : "inference only")
              << "): " << hpc::fmt_double(headline * 100.0) << "%\n";
    std::cout << "fingerprint: " << report.fingerprint << "\n";
    if (!out_path.empty()) {
        auto out = open_out(out_path);
        hpc::write_bench_csv(report, out);
    }
}

void run_compare_app(const std::string& full_model_path,
                     const std::string& reduced_model_path,
                     const std::string& full_dataset, const std::string& reduced_dataset,
                     double train_frac, std::uint64_t seed, bool no_split,
                     const std::string& out_path) {
    auto full_model = hpc::load_model(full_model_path);
    auto reduced_model = hpc::load_model(reduced_model_path);
    auto full_test = load_side(full_dataset, no_split, false, train_frac, seed);
    auto reduced_test = load_side(reduced_dataset, no_split, false, train_frac, seed);

    auto cmp = hpc::compare_app_level(full_model, reduced_model, full_test, reduced_test);
    for (const auto& warning : cmp.warnings) std::cerr << "warning: " << warning << "\n";
    std::cout << "application          full     reduced  (n)\n";
    for (const auto& row : cmp.rows) {
        std::cout << row.application;
        for (std::size_t pad = row.application.size(); pad < 21; ++pad) std::cout << ' ';
        std::cout << hpc::fmt_double(row.accuracy_full) << "   "
                  << hpc::fmt_double(row.accuracy_reduced) << "   (" << row.test_count
                  << ")\n";
    }
    std::cout << "fingerprint: " << cmp.fingerprint << "\n";
    if (!out_path.empty()) {
        auto out = open_out(out_path);
        hpc::write_compare_csv(cmp, out);
    }
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"hierarchical encrypted packet classification toolkit"};
    app.require_subcommand(1);

    // ingest
    auto* ingest = app.add_subcommand("ingest", "Encode captures listed in a manifest");
    auto ingest_enc = std::make_shared<EncoderFlags>();
    auto ingest_manifest_path = std::make_shared<std::string>();
    auto ingest_out = std::make_shared<std::string>();
    auto ingest_size = std::make_shared<std::string>("full");
    auto ingest_catalog = std::make_shared<std::string>();
    auto ingest_service_labels = std::make_shared<bool>(false);
    ingest->add_option("--manifest", *ingest_manifest_path,
                       "Manifest file: <pcap_path>,<application> per line")
        ->required();
    ingest->add_option("--out", *ingest_out, "Output dataset file (HPDS)")->required();
    ingest->add_option("--size", *ingest_size, "Matrix size to encode")
        ->check(CLI::IsMember({"full", "reduced"}));
    ingest->add_option("--catalog", *ingest_catalog, "Catalog file (for --service-labels)");
    ingest->add_flag("--service-labels", *ingest_service_labels,
                     "Relabel packets with their catalog service class");
    ingest_enc->attach(ingest);
    ingest->callback([=] {
        run_ingest(*ingest_manifest_path, *ingest_out, *ingest_size, *ingest_enc,
                   *ingest_catalog, *ingest_service_labels);
    });

    // train
    auto* train_cmd = app.add_subcommand("train", "Train a classifier on a dataset");
    auto train_dataset = std::make_shared<std::string>();
    auto train_out = std::make_shared<std::string>();
    auto train_cfg = std::make_shared<hpc::TrainConfig>();
    auto train_frac = std::make_shared<double>(0.4);
    auto train_no_split = std::make_shared<bool>(false);
    train_cmd->add_option("--dataset", *train_dataset, "Dataset file (HPDS)")->required();
    train_cmd->add_option("--out", *train_out, "Output model file (HPCM)")->required();
    train_cmd->add_option("--epochs", train_cfg->epochs, "Training epochs");
    train_cmd->add_option("--batch", train_cfg->batch_size, "Mini-batch size");
    train_cmd->add_option("--lr", train_cfg->learning_rate, "Learning rate");
    train_cmd->add_option("--filters", train_cfg->num_filters, "Convolution filters");
    train_cmd->add_option("--kernel", train_cfg->filter_side, "Filter side");
    train_cmd->add_option("--stride", train_cfg->stride, "Convolution stride");
    train_cmd->add_option("--pool-size", train_cfg->pool_size, "Pooling window side");
    train_cmd->add_option("--pool-stride", train_cfg->pool_stride, "Pooling step");
    train_cmd->add_option("--seed", train_cfg->seed, "Seed for init, shuffles and split");
    train_cmd->add_option("--train-frac", *train_frac, "Stratified train fraction");
    train_cmd->add_flag("--no-split", *train_no_split, "Train on the whole dataset");
    train_cmd->callback([=] {
        run_train(*train_dataset, *train_out, *train_cfg, *train_frac, *train_no_split);
    });

    // evaluate
    auto* eval_cmd = app.add_subcommand("evaluate", "Repeated-trial accuracy report");
    auto eval_model = std::make_shared<std::string>();
    auto eval_dataset = std::make_shared<std::string>();
    auto eval_trials = std::make_shared<std::size_t>(100);
    auto eval_seed = std::make_shared<std::uint64_t>(0);
    auto eval_frac = std::make_shared<double>(0.4);
    auto eval_no_split = std::make_shared<bool>(false);
    auto eval_sample = std::make_shared<std::string>("balanced");
    auto eval_sample_n = std::make_shared<std::size_t>(0);
    auto eval_out = std::make_shared<std::string>();
    eval_cmd->add_option("--model", *eval_model, "Model file (HPCM)")->required();
    eval_cmd->add_option("--dataset", *eval_dataset, "Dataset file (HPDS)")->required();
    eval_cmd->add_option("--trials", *eval_trials, "Independent evaluation trials");
    eval_cmd->add_option("--seed", *eval_seed, "Seed for split and per-trial sampling");
    eval_cmd->add_option("--train-frac", *eval_frac,
                         "Train fraction used when reproducing the split");
    eval_cmd->add_flag("--no-split", *eval_no_split, "Evaluate on the whole dataset");
    eval_cmd->add_option("--sample", *eval_sample, "Per-trial sampling")
        ->check(CLI::IsMember({"balanced", "all"}));
    eval_cmd->add_option("--sample-n", *eval_sample_n,
                         "Per-class sample size (0 = minimum class count)");
    eval_cmd->add_option("--out", *eval_out, "CSV report path");
    eval_cmd->callback([=] {
        run_evaluate(*eval_model, *eval_dataset, *eval_trials, *eval_seed, *eval_frac,
                     *eval_no_split, *eval_sample, *eval_sample_n, *eval_out);
    });

    // classify
    auto* classify = app.add_subcommand("classify", "Two-stage verdicts for a capture");
    auto cls_service = std::make_shared<std::string>();
    auto cls_apps = std::make_shared<std::vector<std::string>>();
    auto cls_catalog = std::make_shared<std::string>();
    auto cls_pcap = std::make_shared<std::string>();
    auto cls_out = std::make_shared<std::string>();
    auto cls_enc = std::make_shared<EncoderFlags>();
    classify->add_option("--service-model", *cls_service, "Service-level model (reduced)")
        ->required();
    classify->add_option("--app-model", *cls_apps,
                         "Application model, <service>=<model-file> (repeatable)");
    classify->add_option("--catalog", *cls_catalog, "Catalog file")->required();
    classify->add_option("--pcap", *cls_pcap, "Capture to classify")->required();
    classify->add_option("--out", *cls_out, "Verdict CSV path (default stdout)");
    cls_enc->attach(classify);
    classify->callback([=] {
        run_classify(*cls_service, *cls_apps, *cls_catalog, *cls_pcap, *cls_enc, *cls_out);
    });

    // bench
    auto* bench = app.add_subcommand("bench", "Full vs reduced timing comparison");
    auto bench_full = std::make_shared<std::string>();
    auto bench_reduced = std::make_shared<std::string>();
    auto bench_manifest = std::make_shared<std::string>();
    auto bench_reps = std::make_shared<std::size_t>(3);
    auto bench_include_encode = std::make_shared<bool>(false);
    auto bench_out = std::make_shared<std::string>();
    auto bench_enc = std::make_shared<EncoderFlags>();
    bench->add_option("--full-model", *bench_full, "Full-size model")->required();
    bench->add_option("--reduced-model", *bench_reduced, "Reduced-size model")->required();
    bench->add_option("--manifest", *bench_manifest, "Capture manifest")->required();
    bench->add_option("--reps", *bench_reps, "Inference passes per model");
    bench->add_flag("--include-encode", *bench_include_encode,
                    "Fold encoding time into the headline saving");
    bench->add_option("--out", *bench_out, "CSV report path");
    bench_enc->attach(bench);
    bench->callback([=] {
        run_bench(*bench_full, *bench_reduced, *bench_manifest, *bench_enc, *bench_reps,
                  *bench_include_encode, *bench_out);
    });

    // compare-app
    auto* cmp = app.add_subcommand("compare-app",
                                   "Per-application accuracy, full vs reduced models");
    auto cmp_full = std::make_shared<std::string>();
    auto cmp_reduced = std::make_shared<std::string>();
    auto cmp_full_ds = std::make_shared<std::string>();
    auto cmp_reduced_ds = std::make_shared<std::string>();
    auto cmp_frac = std::make_shared<double>(0.4);
    auto cmp_seed = std::make_shared<std::uint64_t>(0);
    auto cmp_no_split = std::make_shared<bool>(false);
    auto cmp_out = std::make_shared<std::string>();
    cmp->add_option("--full-model", *cmp_full, "Per-service full-size model")->required();
    cmp->add_option("--reduced-model", *cmp_reduced, "All-application reduced model")
        ->required();
    cmp->add_option("--full-dataset", *cmp_full_ds, "Full-size dataset (HPDS)")->required();
    cmp->add_option("--reduced-dataset", *cmp_reduced_ds, "Reduced-size dataset (HPDS)")
        ->required();
    cmp->add_option("--train-frac", *cmp_frac, "Train fraction for the split");
    cmp->add_option("--seed", *cmp_seed, "Split seed");
    cmp->add_flag("--no-split", *cmp_no_split, "Use the whole datasets");
    cmp->add_option("--out", *cmp_out, "CSV report path");
    cmp->callback([=] {
        run_compare_app(*cmp_full, *cmp_reduced, *cmp_full_ds, *cmp_reduced_ds, *cmp_frac,
                        *cmp_seed, *cmp_no_split, *cmp_out);
    });

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int rc = app.exit(e);
        return rc == 0 ? 0 : 1;
    } catch (const hpc::Error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    }
    return 0;
}
