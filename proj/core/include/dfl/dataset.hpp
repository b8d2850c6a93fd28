#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "dfl/numerics.hpp"

namespace dfl {

/// N x N matrix of RSS differences (target-present minus vacant), in dB.
/// Square, finite, zero diagonal: an anchor does not measure its own link.
struct DeltaRssMatrix {
    Matrix2 values;

    std::size_t n_aps() const { return values.rows; }
};

struct DflSample {
    std::vector<double> features;  // length n_aps^2, row-major link matrix
    std::uint32_t label = 0;       // grid cell index in [0, n_cells)
};

struct FeatureStats {
    std::vector<double> mean;
    std::vector<double> stddev;  // floored at 1e-8
};

struct DflDataset {
    std::vector<DflSample> samples;
    std::uint32_t n_aps = 0;
    std::uint32_t n_cells = 0;
    std::uint32_t trials_per_cell = 0;  // informational; 0 when irregular
    std::optional<FeatureStats> normalization;

    std::size_t feature_dim() const {
        return static_cast<std::size_t>(n_aps) * n_aps;
    }
};

/// Synthetic stand-in for a physical testbed: anchors on the perimeter of a
/// unit square, one target per trial inside each grid cell, and a Gaussian
/// line-shadowing model per link.
struct SynthConfig {
    std::uint32_t n_aps_per_side = 7;    // total anchors = 4 * this
    std::uint32_t n_cells_per_side = 6;  // cells = this^2
    std::uint32_t trials_per_cell = 30;
    double shadow_depth_db = 10.0;  // peak attenuation when target sits on a link
    double shadow_width = 0.1;      // Gaussian width, unit-square lengths
    double jitter_std_db = 0.5;     // per-link measurement jitter
    std::uint64_t seed = 1;
};

DeltaRssMatrix delta_rss(const Matrix2& target, const Matrix2& vacant);

std::vector<double> vectorize(const DeltaRssMatrix& m);
DeltaRssMatrix devectorize(std::span<const double> v, std::size_t n);

enum class DatasetFormat { csv, binary };

DflDataset load_dataset(const std::filesystem::path& path, DatasetFormat format);
void write_dataset(const DflDataset& ds, const std::filesystem::path& path,
                   DatasetFormat format);

/// Picks csv for a ".csv" extension, binary otherwise.
DatasetFormat format_for_path(const std::filesystem::path& path);

DflDataset synth_scenario(const SynthConfig& cfg);

/// The synthetic propagation kernel: attenuation in dB (negative) of the
/// link from anchor a to anchor b when the target stands at p. Peaks at
/// -depth_db on the segment and decays as a Gaussian of the
/// point-to-segment distance.
double link_shadow_db(double px, double py, double ax, double ay, double bx, double by,
                      double depth_db, double width);

struct AwgnResult {
    DflDataset data;
    std::size_t skipped_zero_power = 0;  // samples left untouched (zero signal)
};

/// Adds white Gaussian noise per measured link; noise power is set per
/// sample from that sample's mean squared off-diagonal feature value and the
/// requested SNR. Self-links (the diagonal) are not measured and stay
/// untouched.
AwgnResult add_awgn(const DflDataset& ds, double snr_db, std::uint64_t seed);

/// Per-feature standardization fitted on (and applied to) `ds`.
std::pair<DflDataset, FeatureStats> normalize_fit(const DflDataset& ds);
DflDataset normalize_apply(const DflDataset& ds, const FeatureStats& stats);

/// Stratified split: each cell contributes round(count * train_fraction)
/// trials to the train side, chosen by a seeded shuffle.
std::pair<DflDataset, DflDataset> split(const DflDataset& ds, double train_fraction,
                                        std::uint64_t seed);

}  // namespace dfl
