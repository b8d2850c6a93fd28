// Experiment CLI for the device-free localization pipeline.
//
// Subcommands: synth, train, eval, sweep-layers, sweep-dims, sweep-snr,
// inspect. Exit codes: 0 success, 2 config/validation error, 3 I/O error,
// 4 numerical failure.

#include <CLI11.hpp>

#include <cstdio>
#include <exception>
#include <fstream>
#include <string>
#include <vector>

#include "dfl/errors.hpp"
#include "dfl/experiment.hpp"
#include "dfl/model_io.hpp"

namespace {

constexpr int kExitConfig = 2;
constexpr int kExitIo = 3;
constexpr int kExitNumerical = 4;

dfl::ExperimentConfig effective_config(const std::string& config_path, bool seed_set,
                                       std::uint64_t seed) {
    dfl::ExperimentConfig cfg = config_path.empty() ? dfl::default_config()
                                                    : dfl::load_config(config_path);
    if (seed_set) {
        cfg.seed = seed;
    }
    return cfg;
}

void print_stage_seconds(const std::vector<std::pair<std::string, double>>& stages) {
    for (const auto& [name, secs] : stages) {
        std::printf("  %-18s %8.2fs\n", name.c_str(), secs);
    }
}

void write_text(const std::filesystem::path& path, const std::string& text) {
    std::ofstream out(path, std::ios::binary);
    if (!out) {
        throw dfl::IoError("cannot write: " + path.string());
    }
    out << text;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Device-free localization: CDBN-AE training and evaluation"};
    app.require_subcommand(1);

    std::string config_path;
    std::uint64_t seed = 0;
    bool seed_set = false;
    app.add_option("--config", config_path, "JSON experiment config")->capture_default_str();
    app.add_option("--seed", seed, "Override the config seed")
        ->each([&](const std::string&) { seed_set = true; });

    // synth
    auto* synth = app.add_subcommand("synth", "Generate a synthetic dataset file");
    std::string synth_out = "dataset.csv";
    synth->add_option("--out", synth_out, "Output path (.csv or binary)")
        ->capture_default_str();

    // train
    auto* train = app.add_subcommand("train", "Train a model and persist the bundle");
    std::string train_out = "model.bundle";
    train->add_option("--out", train_out, "Bundle output path")->capture_default_str();

    // eval
    auto* eval = app.add_subcommand("eval", "Evaluate a bundle on a dataset");
    std::string eval_bundle, eval_data, eval_out, eval_format = "json";
    eval->add_option("--bundle", eval_bundle, "Bundle path")->required();
    eval->add_option("--data", eval_data, "Dataset path")->required();
    eval->add_option("--out", eval_out, "Report output path (stdout if omitted)");
    eval->add_option("--format", eval_format, "Report format: csv|json")
        ->check(CLI::IsMember({"csv", "json"}))
        ->capture_default_str();

    // sweep-layers
    auto* sw_layers = app.add_subcommand("sweep-layers", "Accuracy vs CDBN depth");
    std::vector<int> layer_counts{1, 2, 3};
    std::string layers_out = "sweep_layers.csv";
    sw_layers->add_option("--layers", layer_counts, "Depths to train")->delimiter(',');
    sw_layers->add_option("--out", layers_out, "CSV output path")->capture_default_str();

    // sweep-dims
    auto* sw_dims = app.add_subcommand("sweep-dims", "Accuracy vs bottleneck dimension");
    std::vector<int> dims{15, 25, 50, 150};
    std::string dims_out = "sweep_dims.csv";
    std::string dims_curve_out;
    sw_dims->add_option("--dims", dims, "Bottleneck dimensions")->delimiter(',');
    sw_dims->add_option("--out", dims_out, "CSV output path")->capture_default_str();
    sw_dims->add_option("--curve-out", dims_curve_out,
                        "Training-curve CSV (default: <out> with .curve.csv)");

    // sweep-snr
    auto* sw_snr = app.add_subcommand("sweep-snr", "Accuracy vs test-time SNR");
    std::vector<double> snrs{0, 5, 10, 20};
    std::vector<int> snr_dims{25};
    std::string snr_out = "sweep_snr.csv";
    sw_snr->add_option("--snrs", snrs, "SNR values in dB")->delimiter(',');
    sw_snr->add_option("--dims", snr_dims, "Bottleneck dimensions")->delimiter(',');
    sw_snr->add_option("--out", snr_out, "CSV output path")->capture_default_str();

    // inspect
    auto* inspect = app.add_subcommand("inspect", "Print a bundle summary");
    std::string inspect_bundle;
    inspect->add_option("--bundle", inspect_bundle, "Bundle path")->required();

    CLI11_PARSE(app, argc, argv);

    try {
        if (synth->parsed()) {
            dfl::ExperimentConfig cfg = effective_config(config_path, seed_set, seed);
            dfl::SynthConfig sc = cfg.synth;
            sc.seed = dfl::stage_seed(cfg.seed, dfl::Stage::synth);
            const dfl::DflDataset ds = dfl::synth_scenario(sc);
            dfl::write_dataset(ds, synth_out, dfl::format_for_path(synth_out));
            std::printf("wrote %zu samples (%u anchors, %u cells) to %s\n",
                        ds.samples.size(), ds.n_aps, ds.n_cells, synth_out.c_str());
        } else if (train->parsed()) {
            dfl::ExperimentConfig cfg = effective_config(config_path, seed_set, seed);
            const dfl::TrainResult res = dfl::run_train(cfg, dfl::Method::cdbn_ae,
                                                        train_out);
            std::printf("bundle: %s\n", train_out.c_str());
            std::printf("train accuracy: %.4f\n", res.train_accuracy);
            std::printf("test accuracy:  %.4f  (%zu samples)\n",
                        res.test_report.accuracy, res.test_report.n_samples);
            print_stage_seconds(res.stage_seconds);
        } else if (eval->parsed()) {
            const dfl::ModelBundle bundle = dfl::load_bundle(eval_bundle);
            const dfl::DflDataset ds =
                dfl::load_dataset(eval_data, dfl::format_for_path(eval_data));
            const dfl::EvalReport report = dfl::run_eval(bundle, ds);
            const std::string text = eval_format == "json" ? dfl::report_to_json(report)
                                                           : dfl::report_to_csv(report);
            if (eval_out.empty()) {
                std::printf("%s\n", text.c_str());
            } else {
                write_text(eval_out, text);
                std::printf("accuracy %.4f, report written to %s\n", report.accuracy,
                            eval_out.c_str());
            }
        } else if (sw_layers->parsed()) {
            dfl::ExperimentConfig cfg = effective_config(config_path, seed_set, seed);
            const auto rows = dfl::sweep_layers(cfg, layer_counts);
            dfl::write_layer_sweep_csv(rows, layers_out);
            for (const auto& r : rows) {
                std::printf("layers=%d accuracy=%.4f\n", r.layers, r.accuracy);
            }
            std::printf("wrote %s\n", layers_out.c_str());
        } else if (sw_dims->parsed()) {
            dfl::ExperimentConfig cfg = effective_config(config_path, seed_set, seed);
            const auto result = dfl::sweep_dims(cfg, dims);
            std::filesystem::path curve = dims_curve_out.empty()
                                              ? std::filesystem::path(dims_out)
                                                    .replace_extension(".curve.csv")
                                              : std::filesystem::path(dims_curve_out);
            dfl::write_dim_sweep_csv(result, dims_out, curve);
            for (const auto& r : result.rows) {
                std::printf("method=%s dim=%d accuracy=%.4f\n", r.method.c_str(), r.dim,
                            r.accuracy);
            }
            std::printf("wrote %s and %s\n", dims_out.c_str(), curve.string().c_str());
        } else if (sw_snr->parsed()) {
            dfl::ExperimentConfig cfg = effective_config(config_path, seed_set, seed);
            const auto rows = dfl::sweep_snr(cfg, snrs, snr_dims);
            dfl::write_snr_sweep_csv(rows, snr_out);
            for (const auto& r : rows) {
                std::printf("method=%s snr=%.1f dim=%d accuracy=%.4f\n", r.method.c_str(),
                            r.snr_db, r.dim, r.accuracy);
            }
            std::printf("wrote %s\n", snr_out.c_str());
        } else if (inspect->parsed()) {
            const dfl::ModelBundle b = dfl::load_bundle(inspect_bundle);
            std::printf("config fingerprint: %016llx\n",
                        static_cast<unsigned long long>(b.config_fingerprint));
            std::printf("normalization dim:  %zu\n", b.normalization.mean.size());
            std::printf("cdbn layers:        %zu (input side %zu)\n",
                        b.stack.layers.size(), b.stack.input_side);
            for (std::size_t l = 0; l < b.stack.layers.size(); ++l) {
                const auto& c = b.stack.layers[l];
                std::printf("  layer %zu: %zu groups, %zux%zu kernels, %zu channels, "
                            "pool %zu, side %zu -> %zu\n",
                            l + 1, c.groups(), c.kernel_side, c.kernel_side, c.channels,
                            c.pool_block, c.input_side, c.pooled_side());
            }
            std::printf("autoencoder layers: %zu encoder / %zu decoder\n",
                        b.net.encoder.size(), b.net.decoder.size());
            if (!b.net.encoder.empty()) {
                std::printf("  input %zu -> code %zu\n", b.net.input_dim(), b.net.code_dim());
            }
            std::printf("softmax head:       %zu -> %zu classes\n", b.head.in_dim(),
                        b.head.n_classes());
        }
    } catch (const dfl::ConfigError& e) {
        std::fprintf(stderr, "config error: %s\n", e.what());
        return kExitConfig;
    } catch (const std::invalid_argument& e) {
        std::fprintf(stderr, "validation error: %s\n", e.what());
        return kExitConfig;
    } catch (const dfl::IoError& e) {
        std::fprintf(stderr, "io error: %s\n", e.what());
        return kExitIo;
    } catch (const dfl::NumericalError& e) {
        std::fprintf(stderr, "numerical error: %s\n", e.what());
        return kExitNumerical;
    } catch (const std::exception& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 1;
    }
    return 0;
}
