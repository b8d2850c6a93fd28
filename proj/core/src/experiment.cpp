#include "dfl/experiment.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <stdexcept>

#include <json.hpp>

#include "dfl/errors.hpp"

namespace dfl {

using nlohmann::json;

ExperimentConfig default_config() {
    ExperimentConfig cfg;
    cfg.cdbn.layers = {{28, 3, 2}, {36, 3, 2}, {36, 3, 2}};
    cfg.cdbn.epochs = {10, 20, 20};
    cfg.cdbn.learning_rate = 0.05;
    cfg.cdbn.cd_steps = 1;
    cfg.cdbn.target_sparsity = 0.05;
    cfg.cdbn.sparsity_rate = 0.1 * cfg.cdbn.learning_rate;
    cfg.cdbn.batch_size = 20;
    cfg.ae_epochs = 60;
    cfg.softmax_epochs = 400;
    return cfg;
}

std::uint64_t stage_seed(std::uint64_t seed, Stage stage) {
    return seed ^ (static_cast<std::uint64_t>(stage) * 0x9E3779B97F4A7C15ULL);
}

std::string method_name(Method m) {
    switch (m) {
        case Method::cdbn_ae: return "cdbn_ae";
        case Method::ae_only: return "autoencoder";
        case Method::cdbn_only: return "cdbn";
    }
    return "?";
}

namespace {

json config_json(const ExperimentConfig& cfg) {
    json layers = json::array();
    for (const auto& l : cfg.cdbn.layers) {
        layers.push_back({{"groups", l.groups}, {"kernel", l.kernel_side},
                          {"pool", l.pool_block}});
    }
    return json{
        {"seed", cfg.seed},
        {"dataset",
         {{"path", cfg.dataset_path},
          {"format", cfg.dataset_format},
          {"synth",
           {{"n_aps_per_side", cfg.synth.n_aps_per_side},
            {"n_cells_per_side", cfg.synth.n_cells_per_side},
            {"trials_per_cell", cfg.synth.trials_per_cell},
            {"shadow_depth_db", cfg.synth.shadow_depth_db},
            {"shadow_width", cfg.synth.shadow_width},
            {"jitter_std_db", cfg.synth.jitter_std_db}}}}},
        {"split", {{"train_fraction", cfg.train_fraction}}},
        {"cdbn",
         {{"layers", layers},
          {"epochs", cfg.cdbn.epochs},
          {"learning_rate", cfg.cdbn.learning_rate},
          {"cd_steps", cfg.cdbn.cd_steps},
          {"target_sparsity", cfg.cdbn.target_sparsity},
          {"sparsity_rate", cfg.cdbn.sparsity_rate},
          {"batch_size", cfg.cdbn.batch_size}}},
        {"autoencoder",
         {{"hidden_sizes", cfg.ae_hidden},
          {"epochs", cfg.ae_epochs},
          {"learning_rate", cfg.ae_learning_rate},
          {"batch_size", cfg.ae_batch_size},
          {"pretrain",
           {{"enabled", cfg.ae_pretrain.enabled},
            {"epochs", cfg.ae_pretrain.epochs},
            {"learning_rate", cfg.ae_pretrain.learning_rate},
            {"cd_steps", cfg.ae_pretrain.cd_steps},
            {"batch_size", cfg.ae_pretrain.batch_size}}}}},
        {"softmax",
         {{"epochs", cfg.softmax_epochs},
          {"learning_rate", cfg.softmax_learning_rate},
          {"batch_size", cfg.softmax_batch_size}}},
        {"noise", {{"snr_list", cfg.snr_list}}},
    };
}

template <typename T>
void maybe(const json& j, const char* key, T& out) {
    if (j.contains(key)) {
        out = j.at(key).get<T>();
    }
}

void validate_config(const ExperimentConfig& cfg) {
    if (cfg.cdbn.layers.empty()) {
        throw ConfigError("config: cdbn.layers must not be empty");
    }
    if (cfg.cdbn.epochs.size() != cfg.cdbn.layers.size()) {
        throw ConfigError("config: cdbn.epochs length must match cdbn.layers");
    }
    for (int e : cfg.cdbn.epochs) {
        if (e < 0) {
            throw ConfigError("config: negative epoch count");
        }
    }
    if (cfg.ae_hidden.empty()) {
        throw ConfigError("config: autoencoder.hidden_sizes must not be empty");
    }
    if (!(cfg.train_fraction > 0.0 && cfg.train_fraction < 1.0)) {
        throw ConfigError("config: split.train_fraction must be in (0,1)");
    }
    if (cfg.ae_epochs < 0 || cfg.softmax_epochs < 0 || cfg.ae_pretrain.epochs < 0) {
        throw ConfigError("config: negative epoch count");
    }
    if (cfg.cdbn.cd_steps < 1 || cfg.ae_pretrain.cd_steps < 1) {
        throw ConfigError("config: cd_steps must be >= 1");
    }
    if (cfg.dataset_format != "auto" && cfg.dataset_format != "csv" &&
        cfg.dataset_format != "binary") {
        throw ConfigError("config: dataset.format must be csv, binary or auto");
    }
}

ExperimentConfig config_from_json(const json& j) {
    ExperimentConfig cfg = default_config();
    try {
        maybe(j, "seed", cfg.seed);
        if (j.contains("dataset")) {
            const json& d = j.at("dataset");
            maybe(d, "path", cfg.dataset_path);
            maybe(d, "format", cfg.dataset_format);
            if (d.contains("synth")) {
                const json& s = d.at("synth");
                maybe(s, "n_aps_per_side", cfg.synth.n_aps_per_side);
                maybe(s, "n_cells_per_side", cfg.synth.n_cells_per_side);
                maybe(s, "trials_per_cell", cfg.synth.trials_per_cell);
                maybe(s, "shadow_depth_db", cfg.synth.shadow_depth_db);
                maybe(s, "shadow_width", cfg.synth.shadow_width);
                maybe(s, "jitter_std_db", cfg.synth.jitter_std_db);
            }
        }
        if (j.contains("split")) {
            maybe(j.at("split"), "train_fraction", cfg.train_fraction);
        }
        if (j.contains("cdbn")) {
            const json& c = j.at("cdbn");
            if (c.contains("layers")) {
                cfg.cdbn.layers.clear();
                for (const auto& l : c.at("layers")) {
                    CdbnLayerSpec spec;
                    maybe(l, "groups", spec.groups);
                    maybe(l, "kernel", spec.kernel_side);
                    maybe(l, "pool", spec.pool_block);
                    cfg.cdbn.layers.push_back(spec);
                }
            }
            if (c.contains("epochs")) {
                if (c.at("epochs").is_array()) {
                    cfg.cdbn.epochs = c.at("epochs").get<std::vector<int>>();
                } else {
                    cfg.cdbn.epochs.assign(cfg.cdbn.layers.size(), c.at("epochs").get<int>());
                }
            } else if (cfg.cdbn.epochs.size() != cfg.cdbn.layers.size()) {
                cfg.cdbn.epochs.assign(cfg.cdbn.layers.size(),
                                       cfg.cdbn.epochs.empty() ? 10 : cfg.cdbn.epochs[0]);
            }
            maybe(c, "learning_rate", cfg.cdbn.learning_rate);
            maybe(c, "cd_steps", cfg.cdbn.cd_steps);
            maybe(c, "target_sparsity", cfg.cdbn.target_sparsity);
            if (c.contains("sparsity_rate")) {
                cfg.cdbn.sparsity_rate = c.at("sparsity_rate").get<double>();
            } else {
                cfg.cdbn.sparsity_rate = 0.1 * cfg.cdbn.learning_rate;
            }
            maybe(c, "batch_size", cfg.cdbn.batch_size);
        }
        if (j.contains("autoencoder")) {
            const json& a = j.at("autoencoder");
            maybe(a, "hidden_sizes", cfg.ae_hidden);
            maybe(a, "epochs", cfg.ae_epochs);
            maybe(a, "learning_rate", cfg.ae_learning_rate);
            maybe(a, "batch_size", cfg.ae_batch_size);
            if (a.contains("pretrain")) {
                const json& p = a.at("pretrain");
                maybe(p, "enabled", cfg.ae_pretrain.enabled);
                maybe(p, "epochs", cfg.ae_pretrain.epochs);
                maybe(p, "learning_rate", cfg.ae_pretrain.learning_rate);
                maybe(p, "cd_steps", cfg.ae_pretrain.cd_steps);
                maybe(p, "batch_size", cfg.ae_pretrain.batch_size);
            }
        }
        if (j.contains("softmax")) {
            const json& s = j.at("softmax");
            maybe(s, "epochs", cfg.softmax_epochs);
            maybe(s, "learning_rate", cfg.softmax_learning_rate);
            maybe(s, "batch_size", cfg.softmax_batch_size);
        }
        if (j.contains("noise")) {
            maybe(j.at("noise"), "snr_list", cfg.snr_list);
        }
    } catch (const json::exception& e) {
        throw ConfigError(std::string("config: ") + e.what());
    }
    validate_config(cfg);
    return cfg;
}

}  // namespace

ExperimentConfig load_config(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) {
        throw IoError("cannot open config: " + path.string());
    }
    json j;
    try {
        in >> j;
    } catch (const json::exception& e) {
        throw ConfigError(path.string() + ": " + e.what());
    }
    return config_from_json(j);
}

std::string canonical_config_json(const ExperimentConfig& cfg) {
    return config_json(cfg).dump();
}

std::uint64_t config_fingerprint(const ExperimentConfig& cfg) {
    const std::string s = canonical_config_json(cfg);
    std::uint64_t h = 0xCBF29CE484222325ULL;
    for (unsigned char c : s) {
        h ^= c;
        h *= 0x100000001B3ULL;
    }
    return h;
}

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) {
    return std::chrono::duration<double>(Clock::now() - t0).count();
}

DflDataset obtain_dataset(const ExperimentConfig& cfg) {
    if (!cfg.dataset_path.empty()) {
        const DatasetFormat fmt =
            cfg.dataset_format == "csv"      ? DatasetFormat::csv
            : cfg.dataset_format == "binary" ? DatasetFormat::binary
                                             : format_for_path(cfg.dataset_path);
        return load_dataset(cfg.dataset_path, fmt);
    }
    SynthConfig synth = cfg.synth;
    synth.seed = stage_seed(cfg.seed, Stage::synth);
    return synth_scenario(synth);
}

std::size_t map_side(const DflDataset& ds) {
    return ds.n_aps;
}

std::vector<Matrix2> to_maps(const DflDataset& ds) {
    std::vector<Matrix2> maps;
    maps.reserve(ds.samples.size());
    const std::size_t n = map_side(ds);
    for (const auto& s : ds.samples) {
        maps.push_back(devectorize(s.features, n).values);
    }
    return maps;
}

void check_finite(const std::vector<std::vector<double>>& vs, const char* what) {
    for (const auto& v : vs) {
        for (double x : v) {
            if (!std::isfinite(x)) {
                throw NumericalError(std::string(what) + ": non-finite value");
            }
        }
    }
}

FeatureStats fit_stats(const std::vector<std::vector<double>>& vs) {
    const std::size_t dim = vs.front().size();
    FeatureStats stats;
    stats.mean.assign(dim, 0.0);
    stats.stddev.assign(dim, 0.0);
    for (const auto& v : vs) {
        for (std::size_t i = 0; i < dim; ++i) {
            stats.mean[i] += v[i];
        }
    }
    for (double& m : stats.mean) {
        m /= static_cast<double>(vs.size());
    }
    for (const auto& v : vs) {
        for (std::size_t i = 0; i < dim; ++i) {
            const double d = v[i] - stats.mean[i];
            stats.stddev[i] += d * d;
        }
    }
    for (double& s : stats.stddev) {
        s = std::max(std::sqrt(s / static_cast<double>(vs.size())), 1e-8);
    }
    return stats;
}

void apply_stats(std::vector<double>& v, const FeatureStats& stats) {
    for (std::size_t i = 0; i < v.size(); ++i) {
        v[i] = (v[i] - stats.mean[i]) / stats.stddev[i];
    }
}

// Shared pipeline state so sweeps can reuse expensive prefixes.
struct StagedRun {
    ExperimentConfig cfg;
    DflDataset train_raw, test_raw;
    FeatureStats stats;
    std::vector<std::vector<double>> train_norm;  // normalized feature vectors
    std::vector<std::uint32_t> labels;
    std::uint32_t n_cells = 0;

    CdbnStack stack;  // empty for ae_only
    FeatureStats feature_stats;  // CDBN feature standardization (train-fitted)
    std::vector<std::vector<double>> model_inputs;  // what the AE/head consume

    std::vector<std::pair<std::string, double>> stage_seconds;
};

StagedRun stage_data(const ExperimentConfig& cfg, const DflDataset* supplied) {
    StagedRun run;
    run.cfg = cfg;
    auto t0 = Clock::now();
    DflDataset full = supplied != nullptr ? *supplied : obtain_dataset(cfg);
    run.stage_seconds.emplace_back("dataset", seconds_since(t0));

    t0 = Clock::now();
    auto [train, test] = split(full, cfg.train_fraction, stage_seed(cfg.seed, Stage::split));
    run.n_cells = full.n_cells;
    run.test_raw = std::move(test);
    auto [train_norm_ds, stats] = normalize_fit(train);
    run.stats = std::move(stats);
    run.train_raw = std::move(train);
    run.labels.reserve(train_norm_ds.samples.size());
    run.train_norm.reserve(train_norm_ds.samples.size());
    for (auto& s : train_norm_ds.samples) {
        run.labels.push_back(s.label);
        run.train_norm.push_back(std::move(s.features));
    }
    run.stage_seconds.emplace_back("split_normalize", seconds_since(t0));
    return run;
}

// CDBN pretraining + feature extraction for the train split.
void stage_cdbn(StagedRun& run, std::size_t n_layers) {
    const ExperimentConfig& cfg = run.cfg;
    CdbnConfig cdbn = cfg.cdbn;
    cdbn.layers.resize(n_layers);
    cdbn.epochs.resize(n_layers);

    auto t0 = Clock::now();
    const std::size_t side = run.train_raw.n_aps;
    std::vector<Matrix2> maps;
    maps.reserve(run.train_norm.size());
    for (const auto& f : run.train_norm) {
        maps.push_back(devectorize(f, side).values);
    }
    RngStream rng(stage_seed(cfg.seed, Stage::cdbn));
    run.stack = pretrain_greedy(cdbn, maps, rng);
    run.stage_seconds.emplace_back("cdbn_pretrain", seconds_since(t0));

    t0 = Clock::now();
    run.model_inputs.clear();
    run.model_inputs.reserve(maps.size());
    for (const auto& m : maps) {
        run.model_inputs.push_back(features(run.stack, m));
    }
    check_finite(run.model_inputs, "cdbn features");
    // Standardize the extracted features (train-fitted); the autoencoder's
    // scaling conventions assume unit-variance inputs.
    run.feature_stats = fit_stats(run.model_inputs);
    for (auto& f : run.model_inputs) {
        apply_stats(f, run.feature_stats);
    }
    run.stage_seconds.emplace_back("cdbn_features", seconds_since(t0));
}

void stage_raw_inputs(StagedRun& run) {
    run.stack = CdbnStack{};
    run.feature_stats = FeatureStats{};
    run.model_inputs = run.train_norm;
}

struct HeadsResult {
    ModelBundle bundle;
    double train_accuracy = 0.0;
    std::vector<double> softmax_curve;
    std::vector<std::pair<std::string, double>> stage_seconds;
};

// Autoencoder (unless cdbn_only) and softmax head on top of model_inputs.
HeadsResult stage_heads(const StagedRun& run, Method method, int bottleneck_override) {
    const ExperimentConfig& cfg = run.cfg;
    HeadsResult res;
    res.bundle.normalization = run.stats;
    res.bundle.feature_normalization = run.feature_stats;
    res.bundle.stack = run.stack;
    res.bundle.config_fingerprint = config_fingerprint(cfg);

    const std::size_t in_dim = run.model_inputs.front().size();
    std::vector<std::vector<double>> codes;

    auto t0 = Clock::now();
    if (method == Method::cdbn_only) {
        codes = run.model_inputs;
    } else {
        std::vector<std::size_t> hidden = cfg.ae_hidden;
        if (bottleneck_override > 0) {
            hidden.back() = static_cast<std::size_t>(bottleneck_override);
        }
        RngStream init_rng(stage_seed(cfg.seed, Stage::ae_init));
        res.bundle.net = init_from_pretraining(in_dim, hidden, run.model_inputs,
                                               cfg.ae_pretrain, init_rng);
        RngStream ft_rng(stage_seed(cfg.seed, Stage::finetune));
        finetune(res.bundle.net, run.model_inputs, cfg.ae_epochs, cfg.ae_learning_rate,
                 cfg.ae_batch_size, ft_rng);
        codes.reserve(run.model_inputs.size());
        for (const auto& f : run.model_inputs) {
            codes.push_back(encode(res.bundle.net, f));
        }
        check_finite(codes, "autoencoder codes");
    }
    res.stage_seconds.emplace_back("autoencoder", seconds_since(t0));

    t0 = Clock::now();
    res.bundle.head = make_head(codes.front().size(), run.n_cells);
    RngStream sm_rng(stage_seed(cfg.seed, Stage::softmax));
    train_softmax(res.bundle.head, codes, run.labels, cfg.softmax_epochs,
                  cfg.softmax_learning_rate, cfg.softmax_batch_size, sm_rng,
                  &res.softmax_curve);
    res.stage_seconds.emplace_back("softmax", seconds_since(t0));

    std::size_t correct = 0;
    for (std::size_t i = 0; i < codes.size(); ++i) {
        correct += predict(res.bundle.head, codes[i]) == run.labels[i] ? 1 : 0;
    }
    res.train_accuracy =
        static_cast<double>(correct) / static_cast<double>(codes.size());
    return res;
}

TrainResult assemble(const StagedRun& run, HeadsResult heads,
                     const std::filesystem::path& persist_to) {
    TrainResult out;
    out.bundle = std::move(heads.bundle);
    out.train_accuracy = heads.train_accuracy;
    out.softmax_train_curve = std::move(heads.softmax_curve);
    out.stage_seconds = run.stage_seconds;
    out.stage_seconds.insert(out.stage_seconds.end(), heads.stage_seconds.begin(),
                             heads.stage_seconds.end());
    if (!persist_to.empty()) {
        const auto t0 = Clock::now();
        save_bundle(out.bundle, persist_to);
        out.stage_seconds.emplace_back("persist", seconds_since(t0));
    }
    const auto t0 = Clock::now();
    out.test_report = run_eval(out.bundle, run.test_raw);
    out.stage_seconds.emplace_back("eval", seconds_since(t0));
    return out;
}

TrainResult train_impl(const ExperimentConfig& cfg, const DflDataset* supplied,
                       Method method, const std::filesystem::path& persist_to) {
    validate_config(cfg);
    StagedRun run = stage_data(cfg, supplied);
    if (method == Method::ae_only) {
        stage_raw_inputs(run);
    } else {
        stage_cdbn(run, cfg.cdbn.layers.size());
    }
    return assemble(run, stage_heads(run, method, 0), persist_to);
}

}  // namespace

TrainResult run_train(const ExperimentConfig& cfg, Method method,
                      const std::filesystem::path& persist_to) {
    return train_impl(cfg, nullptr, method, persist_to);
}

TrainResult run_train_on_dataset(const ExperimentConfig& cfg, const DflDataset& full,
                                 Method method, const std::filesystem::path& persist_to) {
    return train_impl(cfg, &full, method, persist_to);
}

EvalReport run_eval(const ModelBundle& bundle, const DflDataset& raw) {
    EvalReport report;
    report.n_samples = raw.samples.size();
    report.confusion.assign(raw.n_cells, std::vector<std::uint32_t>(raw.n_cells, 0));

    auto t0 = Clock::now();
    const DflDataset norm = normalize_apply(raw, bundle.normalization);
    report.stage_seconds.emplace_back("normalize", seconds_since(t0));

    const bool use_stack = !bundle.stack.layers.empty();
    const bool use_net = !bundle.net.encoder.empty();
    const std::size_t side = raw.n_aps;

    t0 = Clock::now();
    std::size_t correct = 0;
    for (const auto& s : norm.samples) {
        std::vector<double> f = s.features;
        if (use_stack) {
            f = features(bundle.stack, devectorize(f, side).values);
            if (!bundle.feature_normalization.mean.empty()) {
                for (std::size_t i = 0; i < f.size(); ++i) {
                    f[i] = (f[i] - bundle.feature_normalization.mean[i]) /
                           bundle.feature_normalization.stddev[i];
                }
            }
        }
        if (use_net) {
            f = encode(bundle.net, f);
        }
        const std::uint32_t pred = predict(bundle.head, f);
        if (s.label >= raw.n_cells || pred >= raw.n_cells) {
            throw std::invalid_argument("run_eval: label out of range");
        }
        ++report.confusion[s.label][pred];
        correct += pred == s.label ? 1 : 0;
    }
    report.accuracy =
        report.n_samples == 0
            ? 0.0
            : static_cast<double>(correct) / static_cast<double>(report.n_samples);
    report.stage_seconds.emplace_back("features_predict", seconds_since(t0));
    return report;
}

std::string report_to_json(const EvalReport& r) {
    json j;
    j["accuracy"] = r.accuracy;
    j["n_samples"] = r.n_samples;
    j["confusion"] = r.confusion;
    json t = json::object();
    for (const auto& [k, v] : r.stage_seconds) {
        t[k] = v;
    }
    j["stage_seconds"] = t;
    return j.dump(2);
}

std::string report_to_csv(const EvalReport& r) {
    std::string out = "metric,value\n";
    char buf[64];
    std::snprintf(buf, sizeof buf, "accuracy,%.17g\n", r.accuracy);
    out += buf;
    std::snprintf(buf, sizeof buf, "samples,%zu\n", r.n_samples);
    out += buf;
    for (const auto& [k, v] : r.stage_seconds) {
        std::snprintf(buf, sizeof buf, "seconds_%s,%.6f\n", k.c_str(), v);
        out += buf;
    }
    out += "confusion\n";
    for (const auto& row : r.confusion) {
        for (std::size_t j = 0; j < row.size(); ++j) {
            out += std::to_string(row[j]);
            out += j + 1 == row.size() ? '\n' : ',';
        }
    }
    return out;
}

std::vector<LayerSweepRow> sweep_layers(const ExperimentConfig& cfg,
                                        const std::vector<int>& layer_counts) {
    validate_config(cfg);
    std::vector<LayerSweepRow> rows;
    for (int n : layer_counts) {
        if (n < 1 || static_cast<std::size_t>(n) > cfg.cdbn.layers.size()) {
            throw ConfigError("sweep_layers: depth " + std::to_string(n) +
                              " outside configured layer list");
        }
        StagedRun run = stage_data(cfg, nullptr);
        stage_cdbn(run, static_cast<std::size_t>(n));
        TrainResult res = assemble(run, stage_heads(run, Method::cdbn_ae, 0), {});
        rows.push_back({n, res.test_report.accuracy});
    }
    return rows;
}

DimSweepResult sweep_dims(const ExperimentConfig& cfg, const std::vector<int>& dims) {
    validate_config(cfg);
    for (int d : dims) {
        if (d < 1) {
            throw ConfigError("sweep_dims: dimensions must be >= 1");
        }
    }
    DimSweepResult result;

    // CDBN prefix shared across bottleneck dimensions (identical stage seeds).
    StagedRun run = stage_data(cfg, nullptr);
    stage_cdbn(run, cfg.cdbn.layers.size());
    for (int d : dims) {
        TrainResult res = assemble(run, stage_heads(run, Method::cdbn_ae, d), {});
        result.rows.push_back({method_name(Method::cdbn_ae), d, res.test_report.accuracy});
        for (std::size_t e = 0; e < res.softmax_train_curve.size(); ++e) {
            result.curve.push_back(
                {d, static_cast<int>(e + 1), res.softmax_train_curve[e]});
        }
    }

    // CDBN-only baseline does not depend on d; score once, report per d.
    {
        TrainResult res = assemble(run, stage_heads(run, Method::cdbn_only, 0), {});
        for (int d : dims) {
            result.rows.push_back({method_name(Method::cdbn_only), d,
                                   res.test_report.accuracy});
        }
    }

    // Autoencoder-only baseline on the raw normalized features.
    StagedRun raw_run = stage_data(cfg, nullptr);
    stage_raw_inputs(raw_run);
    for (int d : dims) {
        TrainResult res = assemble(raw_run, stage_heads(raw_run, Method::ae_only, d), {});
        result.rows.push_back({method_name(Method::ae_only), d, res.test_report.accuracy});
    }
    return result;
}

std::vector<SnrSweepRow> sweep_snr(const ExperimentConfig& cfg,
                                   const std::vector<double>& snrs,
                                   const std::vector<int>& dims) {
    validate_config(cfg);
    std::vector<SnrSweepRow> rows;

    StagedRun run = stage_data(cfg, nullptr);
    stage_cdbn(run, cfg.cdbn.layers.size());
    StagedRun raw_run = stage_data(cfg, nullptr);
    stage_raw_inputs(raw_run);

    for (int d : dims) {
        const HeadsResult cdbn_heads = stage_heads(run, Method::cdbn_ae, d);
        const HeadsResult ae_heads = stage_heads(raw_run, Method::ae_only, d);
        for (std::size_t si = 0; si < snrs.size(); ++si) {
            const std::uint64_t noise_seed =
                derive_seed(stage_seed(cfg.seed, Stage::eval_noise), si);
            const AwgnResult noisy = add_awgn(run.test_raw, snrs[si], noise_seed);
            rows.push_back({method_name(Method::cdbn_ae), snrs[si], d,
                            run_eval(cdbn_heads.bundle, noisy.data).accuracy});
            rows.push_back({method_name(Method::ae_only), snrs[si], d,
                            run_eval(ae_heads.bundle, noisy.data).accuracy});
        }
    }
    return rows;
}

namespace {

std::ofstream open_csv(const std::filesystem::path& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) {
        throw IoError("cannot write csv: " + path.string());
    }
    return out;
}

}  // namespace

void write_layer_sweep_csv(const std::vector<LayerSweepRow>& rows,
                           const std::filesystem::path& path) {
    auto out = open_csv(path);
    out << "layers,accuracy\n";
    char buf[64];
    for (const auto& r : rows) {
        std::snprintf(buf, sizeof buf, "%d,%.17g\n", r.layers, r.accuracy);
        out << buf;
    }
}

void write_dim_sweep_csv(const DimSweepResult& result, const std::filesystem::path& path,
                         const std::filesystem::path& curve_path) {
    {
        auto out = open_csv(path);
        out << "method,dim,test_acc\n";
        char buf[96];
        for (const auto& r : result.rows) {
            std::snprintf(buf, sizeof buf, "%s,%d,%.17g\n", r.method.c_str(), r.dim,
                          r.accuracy);
            out << buf;
        }
    }
    if (!curve_path.empty()) {
        auto out = open_csv(curve_path);
        out << "dim,epoch,train_acc\n";
        char buf[96];
        for (const auto& r : result.curve) {
            std::snprintf(buf, sizeof buf, "%d,%d,%.17g\n", r.dim, r.epoch, r.train_acc);
            out << buf;
        }
    }
}

void write_snr_sweep_csv(const std::vector<SnrSweepRow>& rows,
                         const std::filesystem::path& path) {
    auto out = open_csv(path);
    out << "method,snr_db,dim,accuracy\n";
    char buf[96];
    for (const auto& r : rows) {
        std::snprintf(buf, sizeof buf, "%s,%.17g,%d,%.17g\n", r.method.c_str(), r.snr_db,
                      r.dim, r.accuracy);
        out << buf;
    }
}

}  // namespace dfl
