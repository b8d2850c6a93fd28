#include <doctest.h>

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>
#include <set>

#include "dfl/dataset.hpp"
#include "dfl/errors.hpp"

using namespace dfl;

namespace {

std::filesystem::path temp_file(const char* name) {
    return std::filesystem::temp_directory_path() / name;
}

DflDataset tiny_dataset() {
    DflDataset ds;
    ds.n_aps = 2;
    ds.n_cells = 2;
    ds.samples = {{{1.0, -2.5, 0.25, 4.0}, 0},
                  {{0.0, 3.5, -1.25, 2.0}, 1},
                  {{9.0, -0.5, 0.125, 1.0}, 1}};
    return ds;
}

}  // namespace

TEST_CASE("delta_rss subtracts elementwise and zeroes the diagonal") {
    Matrix2 target(3, 3), vacant(3, 3);
    target(1, 2) = -50.0;
    vacant(1, 2) = -47.0;
    target(0, 0) = -10.0;  // self link must be dropped
    const DeltaRssMatrix d = delta_rss(target, vacant);
    CHECK(d.values(1, 2) == -3.0);
    CHECK(d.values(0, 0) == 0.0);

    const DeltaRssMatrix z = delta_rss(target, target);
    for (double v : z.values.data) {
        CHECK(v == 0.0);
    }

    const DeltaRssMatrix ab = delta_rss(target, vacant);
    const DeltaRssMatrix ba = delta_rss(vacant, target);
    for (std::size_t i = 0; i < ab.values.data.size(); ++i) {
        CHECK(ab.values.data[i] == -ba.values.data[i]);
    }

    Matrix2 rect(2, 3);
    CHECK_THROWS_AS(delta_rss(rect, rect), std::invalid_argument);
}

TEST_CASE("vectorize and devectorize are inverse row-major maps") {
    DeltaRssMatrix m;
    m.values = Matrix2(2, 2);
    m.values(0, 0) = 1.0;
    m.values(0, 1) = 2.0;
    m.values(1, 0) = 3.0;
    m.values(1, 1) = 4.0;
    const auto v = vectorize(m);
    CHECK(v == std::vector<double>{1.0, 2.0, 3.0, 4.0});
    const DeltaRssMatrix back = devectorize(v, 2);
    CHECK(back.values.data == m.values.data);

    std::vector<double> big(28 * 28, 0.5);
    CHECK(devectorize(big, 28).values.rows == 28);
    CHECK(vectorize(devectorize(big, 28)).size() == 784);

    std::vector<double> five(5, 0.0);
    CHECK_THROWS_AS(devectorize(five, 2), std::invalid_argument);
}

TEST_CASE("csv dataset round trip") {
    const auto path = temp_file("dfl_test_roundtrip.csv");
    const DflDataset ds = tiny_dataset();
    write_dataset(ds, path, DatasetFormat::csv);
    const DflDataset back = load_dataset(path, DatasetFormat::csv);
    REQUIRE(back.samples.size() == 3);
    CHECK(back.n_aps == 2);
    CHECK(back.n_cells == 2);
    for (std::size_t i = 0; i < 3; ++i) {
        CHECK(back.samples[i].label == ds.samples[i].label);
        CHECK(back.samples[i].features == ds.samples[i].features);
    }
    std::filesystem::remove(path);
}

TEST_CASE("binary dataset round trip is bit faithful") {
    const auto path = temp_file("dfl_test_roundtrip.bin");
    DflDataset ds = tiny_dataset();
    ds.samples[0].features[0] = 0.1 + 0.2;  // not exactly representable as text
    write_dataset(ds, path, DatasetFormat::binary);
    const DflDataset back = load_dataset(path, DatasetFormat::binary);
    REQUIRE(back.samples.size() == 3);
    CHECK(back.samples[0].features == ds.samples[0].features);
    std::filesystem::remove(path);
}

TEST_CASE("csv loader reports the offending row") {
    const auto path = temp_file("dfl_test_bad.csv");
    {
        std::ofstream out(path);
        out << "#dfl,v1,n_aps=2,n_cells=2\n";
        out << "1,2,3,4,0\n";
        out << "1,2,3,4,2\n";  // label == L
    }
    try {
        load_dataset(path, DatasetFormat::csv);
        FAIL("expected IoError");
    } catch (const IoError& e) {
        const std::string msg = e.what();
        CHECK(msg.find("row 2") != std::string::npos);
        CHECK(msg.find("out of range") != std::string::npos);
    }

    {
        std::ofstream out(path);
        out << "#dfl,v1,n_aps=2,n_cells=2\n";
        out << "1,2,3,0\n";  // short row
    }
    CHECK_THROWS_AS(load_dataset(path, DatasetFormat::csv), IoError);

    {
        std::ofstream out(path);
        out << "#dfl,v1,n_aps=2,n_cells=2\n";
        out << "1,2,x,4,0\n";  // malformed number
    }
    CHECK_THROWS_AS(load_dataset(path, DatasetFormat::csv), IoError);

    CHECK_THROWS_AS(load_dataset(temp_file("dfl_no_such_file.csv"), DatasetFormat::csv),
                    IoError);
    std::filesystem::remove(path);
}

TEST_CASE("link shadow peaks on the segment and vanishes far away") {
    // Target exactly on the segment between (0,0) and (1,0).
    CHECK(link_shadow_db(0.5, 0.0, 0.0, 0.0, 1.0, 0.0, 7.5, 0.1) ==
          doctest::Approx(-7.5).epsilon(1e-12));
    // Far from the link relative to the width.
    CHECK(std::fabs(link_shadow_db(0.5, 0.9, 0.0, 0.0, 1.0, 0.0, 7.5, 0.05)) < 1e-10);
}

TEST_CASE("synth scenario produces the configured shape") {
    SynthConfig cfg;
    cfg.n_aps_per_side = 7;
    cfg.n_cells_per_side = 6;
    cfg.trials_per_cell = 30;
    cfg.seed = 11;
    const DflDataset ds = synth_scenario(cfg);
    CHECK(ds.n_aps == 28);
    CHECK(ds.n_cells == 36);
    CHECK(ds.samples.size() == 1080);
    std::map<std::uint32_t, int> counts;
    for (const auto& s : ds.samples) {
        ++counts[s.label];
        CHECK(s.features.size() == 784);
    }
    CHECK(counts.size() == 36);
    for (const auto& [label, n] : counts) {
        CHECK(n == 30);
    }

    const DflDataset again = synth_scenario(cfg);
    CHECK(again.samples[17].features == ds.samples[17].features);
}

TEST_CASE("synth scenario is label informative with jitter off") {
    SynthConfig cfg;
    cfg.n_aps_per_side = 3;
    cfg.n_cells_per_side = 3;
    cfg.trials_per_cell = 8;
    cfg.jitter_std_db = 0.0;
    cfg.seed = 3;
    const DflDataset ds = synth_scenario(cfg);
    const std::size_t dim = ds.feature_dim();
    std::vector<std::vector<double>> mean(ds.n_cells, std::vector<double>(dim, 0.0));
    for (const auto& s : ds.samples) {
        for (std::size_t i = 0; i < dim; ++i) {
            mean[s.label][i] += s.features[i] / cfg.trials_per_cell;
        }
    }
    for (std::size_t a = 0; a < mean.size(); ++a) {
        for (std::size_t b = a + 1; b < mean.size(); ++b) {
            double max_diff = 0.0;
            for (std::size_t i = 0; i < dim; ++i) {
                max_diff = std::max(max_diff, std::fabs(mean[a][i] - mean[b][i]));
            }
            CHECK(max_diff > 1e-6);
        }
    }
}

TEST_CASE("awgn hits the requested snr and is seed deterministic") {
    SynthConfig cfg;
    cfg.n_aps_per_side = 5;
    cfg.n_cells_per_side = 4;
    cfg.trials_per_cell = 5;
    cfg.seed = 21;
    const DflDataset ds = synth_scenario(cfg);  // 80 samples x 400 features

    const AwgnResult clean = add_awgn(ds, 300.0, 5);
    for (std::size_t s = 0; s < ds.samples.size(); ++s) {
        for (std::size_t i = 0; i < ds.samples[s].features.size(); ++i) {
            CHECK(std::fabs(clean.data.samples[s].features[i] -
                            ds.samples[s].features[i]) < 1e-10);
        }
    }

    const AwgnResult noisy = add_awgn(ds, 0.0, 5);
    double signal = 0.0, noise = 0.0;
    std::size_t n_values = 0;
    for (std::size_t s = 0; s < ds.samples.size(); ++s) {
        for (std::size_t i = 0; i < ds.samples[s].features.size(); ++i) {
            signal += ds.samples[s].features[i] * ds.samples[s].features[i];
            const double d =
                noisy.data.samples[s].features[i] - ds.samples[s].features[i];
            noise += d * d;
            ++n_values;
        }
    }
    REQUIRE(n_values >= 10000);
    CHECK(noise / signal == doctest::Approx(1.0).epsilon(0.05));

    const AwgnResult noisy2 = add_awgn(ds, 0.0, 5);
    CHECK(noisy2.data.samples[3].features == noisy.data.samples[3].features);

    // Self-links carry no noise.
    for (const auto& s : noisy.data.samples) {
        for (std::uint32_t i = 0; i < ds.n_aps; ++i) {
            CHECK(s.features[i * ds.n_aps + i] == 0.0);
        }
    }
}

TEST_CASE("awgn skips zero-power samples") {
    DflDataset ds = tiny_dataset();
    ds.samples[1].features = {0.0, 0.0, 0.0, 0.0};
    const AwgnResult r = add_awgn(ds, 10.0, 1);
    CHECK(r.skipped_zero_power == 1);
    CHECK(r.data.samples[1].features == std::vector<double>{0.0, 0.0, 0.0, 0.0});
}

TEST_CASE("normalization stats and idempotence") {
    DflDataset ds;
    ds.n_aps = 2;
    ds.n_cells = 1;
    ds.samples = {{{1.0, 5.0, 7.0, -1.0}, 0},
                  {{3.0, 5.0, 9.0, 0.0}, 0},
                  {{5.0, 5.0, 14.0, 1.0}, 0}};
    const auto [fitted, stats] = normalize_fit(ds);

    // Constant feature maps to 0 through the floored std.
    for (const auto& s : fitted.samples) {
        CHECK(s.features[1] == 0.0);
    }
    const std::size_t dim = 4;
    for (std::size_t i = 0; i < dim; ++i) {
        double mean = 0.0, var = 0.0;
        for (const auto& s : fitted.samples) {
            mean += s.features[i];
        }
        mean /= 3.0;
        for (const auto& s : fitted.samples) {
            var += (s.features[i] - mean) * (s.features[i] - mean);
        }
        var /= 3.0;
        CHECK(std::fabs(mean) < 1e-12);
        if (i != 1) {
            CHECK(std::sqrt(var) == doctest::Approx(1.0).epsilon(1e-9));
        }
    }

    const DflDataset applied = normalize_apply(ds, stats);
    for (std::size_t s = 0; s < ds.samples.size(); ++s) {
        CHECK(applied.samples[s].features == fitted.samples[s].features);
    }
}

TEST_CASE("stratified split matches the published counts") {
    SynthConfig cfg;
    cfg.n_aps_per_side = 2;
    cfg.n_cells_per_side = 6;
    cfg.trials_per_cell = 30;
    cfg.seed = 4;
    const DflDataset ds = synth_scenario(cfg);  // 36 cells x 30 trials

    const auto [train, test] = split(ds, 25.0 / 30.0, 99);
    CHECK(train.samples.size() == 900);
    CHECK(test.samples.size() == 180);

    const auto [half_a, half_b] = split(ds, 0.5, 99);
    std::map<std::uint32_t, int> counts;
    for (const auto& s : half_a.samples) {
        ++counts[s.label];
    }
    for (const auto& [label, n] : counts) {
        CHECK(n == 15);
    }

    // Union is the original multiset of feature vectors.
    std::multiset<double> original, recombined;
    for (const auto& s : ds.samples) {
        original.insert(s.features[1]);
    }
    for (const auto& s : half_a.samples) {
        recombined.insert(s.features[1]);
    }
    for (const auto& s : half_b.samples) {
        recombined.insert(s.features[1]);
    }
    CHECK(original == recombined);

    CHECK_THROWS_AS(split(ds, 0.001, 1), std::invalid_argument);
    CHECK_THROWS_AS(split(ds, 1.5, 1), std::invalid_argument);
}
