#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <utility>
#include <vector>

#include "dfl/autoencoder.hpp"
#include "dfl/cdbn.hpp"
#include "dfl/dataset.hpp"
#include "dfl/model_io.hpp"

namespace dfl {

/// Full experiment description. Every hyperparameter has the documented
/// default; a JSON config file may override any subset.
struct ExperimentConfig {
    std::uint64_t seed = 1;

    std::string dataset_path;  // empty: generate synthetically
    std::string dataset_format = "auto";  // csv | binary | auto (by extension)
    SynthConfig synth;

    double train_fraction = 25.0 / 30.0;

    CdbnConfig cdbn;

    std::vector<std::size_t> ae_hidden{64, 25};  // last entry is the bottleneck d
    PretrainSpec ae_pretrain;
    int ae_epochs = 60;
    double ae_learning_rate = 0.01;
    std::size_t ae_batch_size = 20;

    int softmax_epochs = 400;
    double softmax_learning_rate = 0.1;
    std::size_t softmax_batch_size = 20;

    std::vector<double> snr_list{0.0, 5.0, 10.0, 20.0};
};

ExperimentConfig default_config();

/// Reads a JSON config file; unspecified fields keep their defaults.
/// Throws ConfigError on unparseable or inconsistent input.
ExperimentConfig load_config(const std::filesystem::path& path);

/// Canonical JSON rendering with all defaults materialized; two configs
/// with equal canonical forms behave identically.
std::string canonical_config_json(const ExperimentConfig& cfg);

/// FNV-1a 64 hash of the canonical JSON; stored in bundles.
std::uint64_t config_fingerprint(const ExperimentConfig& cfg);

/// Every stochastic stage runs on its own stream derived from the one
/// user-facing seed: stage k uses seed XOR (k * 0x9E3779B97F4A7C15).
enum class Stage : std::uint64_t {
    synth = 1,
    split = 2,
    cdbn = 3,
    ae_init = 4,
    finetune = 5,
    softmax = 6,
    eval_noise = 7,
};

std::uint64_t stage_seed(std::uint64_t seed, Stage stage);

/// Which parts of the pipeline to use. The baselines mirror the comparison
/// methods of the dimension/SNR sweeps.
enum class Method { cdbn_ae, ae_only, cdbn_only };

std::string method_name(Method m);

struct EvalReport {
    double accuracy = 0.0;
    std::vector<std::vector<std::uint32_t>> confusion;  // [true][predicted]
    std::size_t n_samples = 0;
    std::vector<std::pair<std::string, double>> stage_seconds;
};

struct TrainResult {
    ModelBundle bundle;
    EvalReport test_report;
    double train_accuracy = 0.0;
    std::vector<double> softmax_train_curve;  // per-epoch training accuracy
    std::vector<std::pair<std::string, double>> stage_seconds;
};

/// Full training pipeline: load/generate, split, fit normalization on the
/// train side only, pretrain the CDBN, extract features, build and
/// fine-tune the autoencoder, train the softmax head, then evaluate on the
/// held-out test split. When `persist_to` is non-empty the bundle is saved
/// there before evaluation.
TrainResult run_train(const ExperimentConfig& cfg, Method method = Method::cdbn_ae,
                      const std::filesystem::path& persist_to = {});

/// Same pipeline on a caller-supplied dataset (bypasses the dataset stage).
TrainResult run_train_on_dataset(const ExperimentConfig& cfg, const DflDataset& full,
                                 Method method = Method::cdbn_ae,
                                 const std::filesystem::path& persist_to = {});

/// Applies the bundle's stored normalization and model chain to a raw
/// dataset and scores it.
EvalReport run_eval(const ModelBundle& bundle, const DflDataset& raw);

std::string report_to_json(const EvalReport& r);
std::string report_to_csv(const EvalReport& r);

struct LayerSweepRow {
    int layers = 0;
    double accuracy = 0.0;
};

/// One full training run per CDBN depth (prefix of the configured layers).
std::vector<LayerSweepRow> sweep_layers(const ExperimentConfig& cfg,
                                        const std::vector<int>& layer_counts);

struct DimSweepRow {
    std::string method;
    int dim = 0;
    double accuracy = 0.0;
};

struct DimCurveRow {
    int dim = 0;
    int epoch = 0;
    double train_acc = 0.0;
};

struct DimSweepResult {
    std::vector<DimSweepRow> rows;     // cdbn_ae + both baselines per dim
    std::vector<DimCurveRow> curve;    // cdbn_ae training curves
};

/// Accuracy per bottleneck dimension, plus the autoencoder-only and
/// CDBN-only comparison rows.
DimSweepResult sweep_dims(const ExperimentConfig& cfg, const std::vector<int>& dims);

struct SnrSweepRow {
    std::string method;
    double snr_db = 0.0;
    int dim = 0;
    double accuracy = 0.0;
};

/// Trains on clean data, corrupts the test split at each SNR, and scores
/// per (snr, dim); includes the autoencoder-only baseline.
std::vector<SnrSweepRow> sweep_snr(const ExperimentConfig& cfg,
                                   const std::vector<double>& snrs,
                                   const std::vector<int>& dims);

void write_layer_sweep_csv(const std::vector<LayerSweepRow>& rows,
                           const std::filesystem::path& path);
void write_dim_sweep_csv(const DimSweepResult& result, const std::filesystem::path& path,
                         const std::filesystem::path& curve_path);
void write_snr_sweep_csv(const std::vector<SnrSweepRow>& rows,
                         const std::filesystem::path& path);

}  // namespace dfl
