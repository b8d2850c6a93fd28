#include <doctest.h>

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <vector>

#include "dfl/errors.hpp"
#include "dfl/experiment.hpp"
#include "dfl/model_io.hpp"

using namespace dfl;

namespace {

std::filesystem::path temp_file(const char* name) {
    return std::filesystem::temp_directory_path() / name;
}

// Desk-scale config: 12 anchors, 4 cells, one small CDBN layer.
ExperimentConfig tiny_config() {
    ExperimentConfig cfg = default_config();
    cfg.seed = 7;
    cfg.synth.n_aps_per_side = 3;
    cfg.synth.n_cells_per_side = 2;
    cfg.synth.trials_per_cell = 10;
    cfg.synth.shadow_width = 0.2;
    cfg.train_fraction = 0.8;
    cfg.cdbn.layers = {{4, 3, 2}};
    cfg.cdbn.epochs = {2};
    cfg.cdbn.batch_size = 8;
    cfg.ae_hidden = {16, 4};
    cfg.ae_pretrain.epochs = 2;
    cfg.ae_epochs = 5;
    cfg.softmax_epochs = 40;
    return cfg;
}

std::vector<char> read_bytes(const std::filesystem::path& p) {
    std::ifstream in(p, std::ios::binary);
    REQUIRE(in);
    return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

}  // namespace

TEST_CASE("stage seeds follow the published rule") {
    const std::uint64_t seed = 0xDEADBEEFCAFEF00DULL;
    CHECK(stage_seed(seed, Stage::split) == (seed ^ (2ULL * 0x9E3779B97F4A7C15ULL)));
    CHECK(stage_seed(seed, Stage::softmax) == (seed ^ (6ULL * 0x9E3779B97F4A7C15ULL)));
}

TEST_CASE("config fingerprint tracks content") {
    const ExperimentConfig a = default_config();
    ExperimentConfig b = a;
    CHECK(config_fingerprint(a) == config_fingerprint(b));
    b.seed = a.seed + 1;
    CHECK(config_fingerprint(a) != config_fingerprint(b));
    ExperimentConfig c = a;
    c.cdbn.learning_rate *= 2.0;
    CHECK(config_fingerprint(a) != config_fingerprint(c));
}

TEST_CASE("config file round trip and validation errors") {
    const auto path = temp_file("dfl_test_config.json");
    {
        std::ofstream out(path);
        out << R"({"seed": 42, "cdbn": {"epochs": 3, "layers": [{"groups": 5, "kernel": 3, "pool": 2}]},
                   "autoencoder": {"hidden_sizes": [8, 3]}, "split": {"train_fraction": 0.75}})";
    }
    const ExperimentConfig cfg = load_config(path);
    CHECK(cfg.seed == 42);
    CHECK(cfg.cdbn.layers.size() == 1);
    CHECK(cfg.cdbn.layers[0].groups == 5);
    CHECK(cfg.cdbn.epochs == std::vector<int>{3});
    CHECK(cfg.ae_hidden == std::vector<std::size_t>{8, 3});
    CHECK(cfg.train_fraction == 0.75);
    // Untouched fields keep their defaults.
    CHECK(cfg.softmax_learning_rate == 0.1);
    CHECK(cfg.ae_pretrain.enabled);

    {
        std::ofstream out(path);
        out << "{ not json";
    }
    CHECK_THROWS_AS(load_config(path), ConfigError);

    {
        std::ofstream out(path);
        out << R"({"split": {"train_fraction": 1.5}})";
    }
    CHECK_THROWS_AS(load_config(path), ConfigError);

    CHECK_THROWS_AS(load_config(temp_file("dfl_missing_config.json")), IoError);
    std::filesystem::remove(path);
}

TEST_CASE("run_train is deterministic and the bundle round-trips") {
    const ExperimentConfig cfg = tiny_config();
    const auto p1 = temp_file("dfl_bundle_a.bin");
    const auto p2 = temp_file("dfl_bundle_b.bin");

    const TrainResult r1 = run_train(cfg, Method::cdbn_ae, p1);
    const TrainResult r2 = run_train(cfg, Method::cdbn_ae, p2);

    CHECK(read_bytes(p1) == read_bytes(p2));
    CHECK(r1.test_report.accuracy == r2.test_report.accuracy);
    CHECK(r1.test_report.accuracy >= 0.0);
    CHECK(r1.test_report.accuracy <= 1.0);

    // Parameter-exact round trip.
    const ModelBundle loaded = load_bundle(p1);
    CHECK(loaded.config_fingerprint == r1.bundle.config_fingerprint);
    CHECK(loaded.normalization.mean == r1.bundle.normalization.mean);
    REQUIRE(loaded.stack.layers.size() == r1.bundle.stack.layers.size());
    for (std::size_t l = 0; l < loaded.stack.layers.size(); ++l) {
        for (std::size_t k = 0; k < loaded.stack.layers[l].kernels.size(); ++k) {
            CHECK(loaded.stack.layers[l].kernels[k].data ==
                  r1.bundle.stack.layers[l].kernels[k].data);
        }
    }
    CHECK(loaded.head.weights.data == r1.bundle.head.weights.data);
    CHECK(loaded.net.encoder[0].weights.data == r1.bundle.net.encoder[0].weights.data);

    // Evaluating the loaded bundle reproduces the in-memory result.
    // (Also proves the persisted artifact is usable on its own.)
    SynthConfig synth = cfg.synth;
    synth.seed = stage_seed(cfg.seed, Stage::synth);
    const DflDataset full = synth_scenario(synth);
    const auto [train, test] = split(full, cfg.train_fraction,
                                     stage_seed(cfg.seed, Stage::split));
    const EvalReport rep = run_eval(loaded, test);
    CHECK(rep.accuracy == r1.test_report.accuracy);

    std::filesystem::remove(p1);
    std::filesystem::remove(p2);
}

TEST_CASE("zero-epoch training still yields a dimensionally valid bundle") {
    ExperimentConfig cfg = tiny_config();
    cfg.cdbn.epochs = {0};
    cfg.ae_epochs = 0;
    cfg.ae_pretrain.epochs = 0;
    cfg.softmax_epochs = 0;
    const auto path = temp_file("dfl_bundle_init_only.bin");
    const TrainResult res = run_train(cfg, Method::cdbn_ae, path);
    CHECK(res.test_report.accuracy >= 0.0);
    CHECK(res.test_report.accuracy <= 1.0);

    const ModelBundle b = load_bundle(path);
    CHECK(b.stack.layers.size() == 1);
    CHECK(b.net.code_dim() == 4);
    CHECK(b.head.n_classes() == 4);
    std::filesystem::remove(path);
}

TEST_CASE("corrupted and wrong-version bundles are rejected") {
    const ExperimentConfig cfg = tiny_config();
    const auto path = temp_file("dfl_bundle_corrupt.bin");
    run_train(cfg, Method::cdbn_ae, path);

    auto bytes = read_bytes(path);
    {
        auto flipped = bytes;
        flipped[flipped.size() / 2] ^= 0x40;
        std::ofstream out(path, std::ios::binary);
        out.write(flipped.data(), static_cast<std::streamsize>(flipped.size()));
    }
    try {
        load_bundle(path);
        FAIL("expected checksum error");
    } catch (const IoError& e) {
        CHECK(std::string(e.what()).find("checksum") != std::string::npos);
    }

    {
        auto versioned = bytes;
        versioned[8] = 9;  // future version byte
        std::ofstream out(path, std::ios::binary);
        out.write(versioned.data(), static_cast<std::streamsize>(versioned.size()));
    }
    try {
        load_bundle(path);
        FAIL("expected version error");
    } catch (const IoError& e) {
        CHECK(std::string(e.what()).find("version") != std::string::npos);
    }

    {
        std::ofstream out(path, std::ios::binary);
        out.write(bytes.data(), 20);  // truncated
    }
    CHECK_THROWS_AS(load_bundle(path), IoError);

    {
        std::ofstream out(path, std::ios::binary);
        out << "garbage garbage garbage";
    }
    CHECK_THROWS_AS(load_bundle(path), IoError);
    std::filesystem::remove(path);
}

TEST_CASE("test data never influences training") {
    const ExperimentConfig cfg = tiny_config();
    SynthConfig synth = cfg.synth;
    synth.seed = stage_seed(cfg.seed, Stage::synth);
    const DflDataset full = synth_scenario(synth);

    // Find which samples land on the test side; membership only depends on
    // labels and the split seed, not on feature values.
    const auto [train, test] = split(full, cfg.train_fraction,
                                     stage_seed(cfg.seed, Stage::split));
    DflDataset perturbed = full;
    {
        std::size_t changed = 0;
        // Mark test membership by matching feature vectors.
        for (auto& s : perturbed.samples) {
            for (const auto& t : test.samples) {
                if (s.features == t.features) {
                    for (double& x : s.features) {
                        x += 123.456;
                    }
                    ++changed;
                    break;
                }
            }
        }
        REQUIRE(changed == test.samples.size());
    }

    const auto p1 = temp_file("dfl_bundle_clean.bin");
    const auto p2 = temp_file("dfl_bundle_perturbed.bin");
    run_train_on_dataset(cfg, full, Method::cdbn_ae, p1);
    run_train_on_dataset(cfg, perturbed, Method::cdbn_ae, p2);
    CHECK(read_bytes(p1) == read_bytes(p2));
    std::filesystem::remove(p1);
    std::filesystem::remove(p2);
}

TEST_CASE("run_eval scores a forced-correct toy model") {
    ModelBundle bundle;
    bundle.normalization.mean = {0.0, 0.0, 0.0, 0.0};
    bundle.normalization.stddev = {1.0, 1.0, 1.0, 1.0};
    bundle.head = make_head(4, 2);
    bundle.head.weights(0, 1) = 10.0;  // feature 0 drives class 1

    DflDataset ds;
    ds.n_aps = 2;
    ds.n_cells = 2;
    ds.samples = {{{5.0, 0.0, 0.0, 0.0}, 1}};
    const EvalReport rep = run_eval(bundle, ds);
    CHECK(rep.accuracy == 1.0);
    CHECK(rep.n_samples == 1);
    CHECK(rep.confusion[1][1] == 1);
}

TEST_CASE("confusion matrix rows add up to the per-cell counts") {
    const ExperimentConfig cfg = tiny_config();
    const TrainResult res = run_train(cfg);
    const auto& confusion = res.test_report.confusion;
    std::size_t total = 0;
    for (const auto& row : confusion) {
        for (std::uint32_t c : row) {
            total += c;
        }
    }
    CHECK(total == res.test_report.n_samples);

    SynthConfig synth = cfg.synth;
    synth.seed = stage_seed(cfg.seed, Stage::synth);
    const DflDataset full = synth_scenario(synth);
    const auto [train, test] = split(full, cfg.train_fraction,
                                     stage_seed(cfg.seed, Stage::split));
    std::vector<std::size_t> per_cell(full.n_cells, 0);
    for (const auto& s : test.samples) {
        ++per_cell[s.label];
    }
    for (std::size_t l = 0; l < per_cell.size(); ++l) {
        std::size_t row_sum = 0;
        for (std::uint32_t c : confusion[l]) {
            row_sum += c;
        }
        CHECK(row_sum == per_cell[l]);
    }
}

TEST_CASE("report serialization formats") {
    EvalReport rep;
    rep.accuracy = 0.75;
    rep.n_samples = 4;
    rep.confusion = {{2, 1}, {0, 1}};
    rep.stage_seconds = {{"normalize", 0.001}};
    const std::string j = report_to_json(rep);
    CHECK(j.find("\"accuracy\": 0.75") != std::string::npos);
    const std::string c = report_to_csv(rep);
    CHECK(c.find("accuracy,0.75") != std::string::npos);
    CHECK(c.find("2,1") != std::string::npos);
}

TEST_CASE("sweeps cover every grid point with stable schemas") {
    ExperimentConfig cfg = tiny_config();
    cfg.cdbn.epochs = {1};
    cfg.ae_epochs = 3;
    cfg.softmax_epochs = 10;

    const auto layer_rows = sweep_layers(cfg, {1});
    REQUIRE(layer_rows.size() == 1);
    CHECK(layer_rows[0].layers == 1);
    CHECK_THROWS_AS(sweep_layers(cfg, {2}), ConfigError);

    const DimSweepResult dims = sweep_dims(cfg, {2, 3});
    // cdbn_ae, autoencoder and cdbn rows for each dim.
    REQUIRE(dims.rows.size() == 6);
    int cdbn_ae_rows = 0, ae_rows = 0, cdbn_rows = 0;
    for (const auto& r : dims.rows) {
        if (r.method == "cdbn_ae") ++cdbn_ae_rows;
        if (r.method == "autoencoder") ++ae_rows;
        if (r.method == "cdbn") ++cdbn_rows;
        CHECK((r.dim == 2 || r.dim == 3));
    }
    CHECK(cdbn_ae_rows == 2);
    CHECK(ae_rows == 2);
    CHECK(cdbn_rows == 2);
    CHECK(dims.curve.size() == 2 * 10);  // one row per (dim, epoch)

    const auto csv_path = temp_file("dfl_dims.csv");
    const auto curve_path = temp_file("dfl_dims_curve.csv");
    write_dim_sweep_csv(dims, csv_path, curve_path);
    {
        std::ifstream in(csv_path);
        std::string header;
        std::getline(in, header);
        CHECK(header == "method,dim,test_acc");
    }
    {
        std::ifstream in(curve_path);
        std::string header;
        std::getline(in, header);
        CHECK(header == "dim,epoch,train_acc");
    }
    std::filesystem::remove(csv_path);
    std::filesystem::remove(curve_path);
}

TEST_CASE("snr sweep: no-noise limit equals clean accuracy") {
    ExperimentConfig cfg = tiny_config();
    cfg.cdbn.epochs = {1};
    cfg.ae_epochs = 3;
    cfg.softmax_epochs = 10;

    const auto rows = sweep_snr(cfg, {300.0, 0.0}, {3});
    REQUIRE(rows.size() == 4);  // 2 methods x 2 snrs

    const DimSweepResult dims = sweep_dims(cfg, {3});
    double clean_cdbn_ae = -1.0, clean_ae = -1.0;
    for (const auto& r : dims.rows) {
        if (r.method == "cdbn_ae") clean_cdbn_ae = r.accuracy;
        if (r.method == "autoencoder") clean_ae = r.accuracy;
    }
    for (const auto& r : rows) {
        if (r.snr_db == 300.0 && r.method == "cdbn_ae") {
            CHECK(r.accuracy == clean_cdbn_ae);
        }
        if (r.snr_db == 300.0 && r.method == "autoencoder") {
            CHECK(r.accuracy == clean_ae);
        }
    }
}
