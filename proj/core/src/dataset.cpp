#include "dfl/dataset.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <numeric>
#include <sstream>
#include <stdexcept>

#include "dfl/errors.hpp"

static_assert(std::endian::native == std::endian::little,
              "binary dataset format assumes a little-endian host");

namespace dfl {

DeltaRssMatrix delta_rss(const Matrix2& target, const Matrix2& vacant) {
    if (!target.same_shape(vacant) || target.rows != target.cols) {
        throw std::invalid_argument("delta_rss: matrices must be square and same shape");
    }
    DeltaRssMatrix out;
    out.values = Matrix2(target.rows, target.cols);
    for (std::size_t i = 0; i < target.rows; ++i) {
        for (std::size_t j = 0; j < target.cols; ++j) {
            out.values(i, j) = (i == j) ? 0.0 : target(i, j) - vacant(i, j);
        }
    }
    return out;
}

std::vector<double> vectorize(const DeltaRssMatrix& m) {
    return m.values.data;  // row-major by construction
}

DeltaRssMatrix devectorize(std::span<const double> v, std::size_t n) {
    if (v.size() != n * n) {
        throw std::invalid_argument("devectorize: vector length " +
                                    std::to_string(v.size()) + " != " +
                                    std::to_string(n) + "^2");
    }
    DeltaRssMatrix out;
    out.values = Matrix2(n, n);
    std::copy(v.begin(), v.end(), out.values.data.begin());
    return out;
}

DatasetFormat format_for_path(const std::filesystem::path& path) {
    return path.extension() == ".csv" ? DatasetFormat::csv : DatasetFormat::binary;
}

namespace {

constexpr char kCsvMagic[] = "#dfl,v1";
constexpr char kBinMagic[4] = {'D', 'F', 'L', '1'};

void validate_dataset(const DflDataset& ds, const std::string& origin) {
    const std::size_t dim = ds.feature_dim();
    for (std::size_t i = 0; i < ds.samples.size(); ++i) {
        const auto& s = ds.samples[i];
        if (s.features.size() != dim) {
            throw IoError(origin + ": sample " + std::to_string(i) +
                          " has inconsistent feature length");
        }
        if (s.label >= ds.n_cells) {
            throw IoError(origin + ": sample " + std::to_string(i) +
                          " label out of range");
        }
    }
}

DflDataset load_csv(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) {
        throw IoError("cannot open dataset file: " + path.string());
    }
    std::string header;
    if (!std::getline(in, header)) {
        throw IoError(path.string() + ": empty file");
    }
    std::uint32_t n_aps = 0, n_cells = 0;
    if (header.rfind(kCsvMagic, 0) != 0 ||
        std::sscanf(header.c_str(), "#dfl,v1,n_aps=%u,n_cells=%u", &n_aps, &n_cells) != 2 ||
        n_aps == 0 || n_cells == 0) {
        throw IoError(path.string() + ": bad header line, expected '#dfl,v1,n_aps=<N>,n_cells=<L>'");
    }

    DflDataset ds;
    ds.n_aps = n_aps;
    ds.n_cells = n_cells;
    const std::size_t dim = ds.feature_dim();

    std::string line;
    std::size_t row = 1;  // header was row 0
    while (std::getline(in, line)) {
        if (line.empty()) {
            ++row;
            continue;
        }
        DflSample s;
        s.features.reserve(dim);
        const char* p = line.c_str();
        const char* end = p + line.size();
        std::size_t field = 0;
        while (p < end) {
            char* next = nullptr;
            const double v = std::strtod(p, &next);
            if (next == p) {
                throw IoError(path.string() + ": row " + std::to_string(row) +
                              ": malformed number in field " + std::to_string(field));
            }
            p = next;
            if (p < end) {
                if (*p != ',') {
                    throw IoError(path.string() + ": row " + std::to_string(row) +
                                  ": expected ',' after field " + std::to_string(field));
                }
                ++p;
            }
            if (field < dim) {
                if (!std::isfinite(v)) {
                    throw IoError(path.string() + ": row " + std::to_string(row) +
                                  ": non-finite feature");
                }
                s.features.push_back(v);
            } else if (field == dim) {
                if (v < 0 || v != std::floor(v)) {
                    throw IoError(path.string() + ": row " + std::to_string(row) +
                                  ": label must be a nonnegative integer");
                }
                if (v >= static_cast<double>(n_cells)) {
                    throw IoError(path.string() + ": row " + std::to_string(row) +
                                  ": label " + std::to_string(static_cast<long long>(v)) +
                                  " out of range [0," + std::to_string(n_cells) + ")");
                }
                s.label = static_cast<std::uint32_t>(v);
            }
            ++field;
        }
        if (field != dim + 1) {
            throw IoError(path.string() + ": row " + std::to_string(row) + ": expected " +
                          std::to_string(dim + 1) + " fields, got " + std::to_string(field));
        }
        ds.samples.push_back(std::move(s));
        ++row;
    }
    return ds;
}

void write_csv(const DflDataset& ds, const std::filesystem::path& path) {
    std::ofstream out(path, std::ios::binary);  // binary: LF line endings everywhere
    if (!out) {
        throw IoError("cannot write dataset file: " + path.string());
    }
    out << kCsvMagic << ",n_aps=" << ds.n_aps << ",n_cells=" << ds.n_cells << "\n";
    char buf[40];
    for (const auto& s : ds.samples) {
        for (double v : s.features) {
            std::snprintf(buf, sizeof buf, "%.17g", v);
            out << buf << ',';
        }
        out << s.label << "\n";
    }
    if (!out) {
        throw IoError("write failed: " + path.string());
    }
}

template <typename T>
void read_raw(std::ifstream& in, T* dst, std::size_t count, const std::string& what) {
    in.read(reinterpret_cast<char*>(dst), static_cast<std::streamsize>(sizeof(T) * count));
    if (static_cast<std::size_t>(in.gcount()) != sizeof(T) * count) {
        throw IoError("truncated dataset file while reading " + what);
    }
}

DflDataset load_binary(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw IoError("cannot open dataset file: " + path.string());
    }
    char magic[4];
    read_raw(in, magic, 4, "magic");
    if (std::memcmp(magic, kBinMagic, 4) != 0) {
        throw IoError(path.string() + ": not a DFL1 binary dataset");
    }
    std::uint32_t n_aps = 0, n_cells = 0, count = 0;
    read_raw(in, &n_aps, 1, "n_aps");
    read_raw(in, &n_cells, 1, "n_cells");
    read_raw(in, &count, 1, "sample count");
    if (n_aps == 0 || n_cells == 0) {
        throw IoError(path.string() + ": zero dimensions in header");
    }
    DflDataset ds;
    ds.n_aps = n_aps;
    ds.n_cells = n_cells;
    const std::size_t dim = ds.feature_dim();
    ds.samples.resize(count);
    for (std::uint32_t i = 0; i < count; ++i) {
        auto& s = ds.samples[i];
        s.features.resize(dim);
        read_raw(in, s.features.data(), dim, "sample " + std::to_string(i));
        read_raw(in, &s.label, 1, "label " + std::to_string(i));
        if (s.label >= n_cells) {
            throw IoError(path.string() + ": sample " + std::to_string(i) +
                          ": label out of range");
        }
    }
    return ds;
}

void write_binary(const DflDataset& ds, const std::filesystem::path& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) {
        throw IoError("cannot write dataset file: " + path.string());
    }
    out.write(kBinMagic, 4);
    const std::uint32_t count = static_cast<std::uint32_t>(ds.samples.size());
    out.write(reinterpret_cast<const char*>(&ds.n_aps), 4);
    out.write(reinterpret_cast<const char*>(&ds.n_cells), 4);
    out.write(reinterpret_cast<const char*>(&count), 4);
    for (const auto& s : ds.samples) {
        out.write(reinterpret_cast<const char*>(s.features.data()),
                  static_cast<std::streamsize>(sizeof(double) * s.features.size()));
        out.write(reinterpret_cast<const char*>(&s.label), 4);
    }
    if (!out) {
        throw IoError("write failed: " + path.string());
    }
}

void infer_trials_per_cell(DflDataset& ds) {
    std::vector<std::size_t> counts(ds.n_cells, 0);
    for (const auto& s : ds.samples) {
        ++counts[s.label];
    }
    const std::size_t first = counts.empty() ? 0 : counts[0];
    const bool uniform =
        std::all_of(counts.begin(), counts.end(), [&](std::size_t c) { return c == first; });
    ds.trials_per_cell = uniform ? static_cast<std::uint32_t>(first) : 0;
}

}  // namespace

DflDataset load_dataset(const std::filesystem::path& path, DatasetFormat format) {
    DflDataset ds =
        format == DatasetFormat::csv ? load_csv(path) : load_binary(path);
    validate_dataset(ds, path.string());
    infer_trials_per_cell(ds);
    return ds;
}

void write_dataset(const DflDataset& ds, const std::filesystem::path& path,
                   DatasetFormat format) {
    if (format == DatasetFormat::csv) {
        write_csv(ds, path);
    } else {
        write_binary(ds, path);
    }
}

namespace {

struct Point {
    double x = 0.0;
    double y = 0.0;
};

double point_segment_distance(Point p, Point a, Point b) {
    const double dx = b.x - a.x;
    const double dy = b.y - a.y;
    const double len2 = dx * dx + dy * dy;
    double t = 0.0;
    if (len2 > 0.0) {
        t = ((p.x - a.x) * dx + (p.y - a.y) * dy) / len2;
        t = std::clamp(t, 0.0, 1.0);
    }
    const double cx = a.x + t * dx;
    const double cy = a.y + t * dy;
    return std::hypot(p.x - cx, p.y - cy);
}

std::vector<Point> perimeter_anchors(std::uint32_t per_side) {
    std::vector<Point> pts;
    pts.reserve(4u * per_side);
    for (std::uint32_t t = 0; t < per_side; ++t) {
        const double u = static_cast<double>(t) / per_side;
        pts.push_back({u, 0.0});
    }
    for (std::uint32_t t = 0; t < per_side; ++t) {
        const double u = static_cast<double>(t) / per_side;
        pts.push_back({1.0, u});
    }
    for (std::uint32_t t = 0; t < per_side; ++t) {
        const double u = static_cast<double>(t) / per_side;
        pts.push_back({1.0 - u, 1.0});
    }
    for (std::uint32_t t = 0; t < per_side; ++t) {
        const double u = static_cast<double>(t) / per_side;
        pts.push_back({0.0, 1.0 - u});
    }
    return pts;
}

}  // namespace

double link_shadow_db(double px, double py, double ax, double ay, double bx, double by,
                      double depth_db, double width) {
    const double d = point_segment_distance({px, py}, {ax, ay}, {bx, by});
    return -depth_db * std::exp(-d * d / (2.0 * width * width));
}

DflDataset synth_scenario(const SynthConfig& cfg) {
    if (cfg.n_aps_per_side == 0 || cfg.n_cells_per_side == 0 || cfg.trials_per_cell == 0 ||
        cfg.shadow_depth_db <= 0.0 || cfg.shadow_width <= 0.0 || cfg.jitter_std_db < 0.0) {
        throw std::invalid_argument("synth_scenario: invalid configuration");
    }
    const std::uint32_t n_aps = 4 * cfg.n_aps_per_side;
    const std::uint32_t n_cells = cfg.n_cells_per_side * cfg.n_cells_per_side;
    const auto anchors = perimeter_anchors(cfg.n_aps_per_side);
    const double cell = 1.0 / cfg.n_cells_per_side;

    DflDataset ds;
    ds.n_aps = n_aps;
    ds.n_cells = n_cells;
    ds.trials_per_cell = cfg.trials_per_cell;
    ds.samples.reserve(static_cast<std::size_t>(n_cells) * cfg.trials_per_cell);

    RngStream rng(cfg.seed);
    for (std::uint32_t l = 0; l < n_cells; ++l) {
        const std::uint32_t row = l / cfg.n_cells_per_side;
        const std::uint32_t col = l % cfg.n_cells_per_side;
        for (std::uint32_t p = 0; p < cfg.trials_per_cell; ++p) {
            const Point target{(col + rng.next_unit()) * cell,
                               (row + rng.next_unit()) * cell};
            Matrix2 dr(n_aps, n_aps);
            for (std::uint32_t i = 0; i < n_aps; ++i) {
                for (std::uint32_t j = 0; j < n_aps; ++j) {
                    if (i == j) {
                        continue;
                    }
                    double v = link_shadow_db(target.x, target.y, anchors[i].x,
                                              anchors[i].y, anchors[j].x, anchors[j].y,
                                              cfg.shadow_depth_db, cfg.shadow_width);
                    if (cfg.jitter_std_db > 0.0) {
                        v += sample_gaussian(0.0, cfg.jitter_std_db * cfg.jitter_std_db, rng);
                    }
                    dr(i, j) = v;
                }
            }
            DflSample s;
            s.features = std::move(dr.data);
            s.label = l;
            ds.samples.push_back(std::move(s));
        }
    }
    return ds;
}

AwgnResult add_awgn(const DflDataset& ds, double snr_db, std::uint64_t seed) {
    if (ds.samples.empty()) {
        throw std::invalid_argument("add_awgn: empty dataset");
    }
    AwgnResult out;
    out.data = ds;
    const double snr_linear = std::pow(10.0, snr_db / 10.0);
    const std::size_t n = ds.n_aps;
    RngStream rng(seed);
    for (auto& s : out.data.samples) {
        // Self-links (the diagonal) are never measured; they carry neither
        // signal nor noise.
        double power = 0.0;
        std::size_t measured = 0;
        for (std::size_t i = 0; i < s.features.size(); ++i) {
            if (i / n == i % n) {
                continue;
            }
            power += s.features[i] * s.features[i];
            ++measured;
        }
        power /= static_cast<double>(measured);
        if (power == 0.0) {
            ++out.skipped_zero_power;
            continue;
        }
        const double noise_var = power / snr_linear;
        for (std::size_t i = 0; i < s.features.size(); ++i) {
            if (i / n == i % n) {
                continue;
            }
            s.features[i] += sample_gaussian(0.0, noise_var, rng);
        }
    }
    return out;
}

std::pair<DflDataset, FeatureStats> normalize_fit(const DflDataset& ds) {
    if (ds.samples.empty()) {
        throw std::invalid_argument("normalize_fit: empty dataset");
    }
    const std::size_t dim = ds.samples.front().features.size();
    FeatureStats stats;
    stats.mean.assign(dim, 0.0);
    stats.stddev.assign(dim, 0.0);
    const double n = static_cast<double>(ds.samples.size());
    for (const auto& s : ds.samples) {
        for (std::size_t i = 0; i < dim; ++i) {
            stats.mean[i] += s.features[i];
        }
    }
    for (double& m : stats.mean) {
        m /= n;
    }
    for (const auto& s : ds.samples) {
        for (std::size_t i = 0; i < dim; ++i) {
            const double d = s.features[i] - stats.mean[i];
            stats.stddev[i] += d * d;
        }
    }
    for (double& v : stats.stddev) {
        v = std::max(std::sqrt(v / n), 1e-8);
    }
    return {normalize_apply(ds, stats), stats};
}

DflDataset normalize_apply(const DflDataset& ds, const FeatureStats& stats) {
    DflDataset out = ds;
    const std::size_t dim = stats.mean.size();
    for (auto& s : out.samples) {
        if (s.features.size() != dim) {
            throw std::invalid_argument("normalize_apply: dimension mismatch");
        }
        for (std::size_t i = 0; i < dim; ++i) {
            s.features[i] = (s.features[i] - stats.mean[i]) / stats.stddev[i];
        }
    }
    out.normalization = stats;
    return out;
}

std::pair<DflDataset, DflDataset> split(const DflDataset& ds, double train_fraction,
                                        std::uint64_t seed) {
    if (!(train_fraction > 0.0 && train_fraction < 1.0)) {
        throw std::invalid_argument("split: train_fraction must be in (0,1)");
    }
    std::vector<std::vector<std::size_t>> by_label(ds.n_cells);
    for (std::size_t i = 0; i < ds.samples.size(); ++i) {
        by_label[ds.samples[i].label].push_back(i);
    }

    std::vector<char> in_train(ds.samples.size(), 0);
    RngStream rng(seed);
    for (std::uint32_t l = 0; l < ds.n_cells; ++l) {
        auto& idx = by_label[l];
        if (idx.empty()) {
            continue;
        }
        const std::size_t k =
            static_cast<std::size_t>(std::floor(idx.size() * train_fraction + 0.5));
        if (k == 0 || k == idx.size()) {
            throw std::invalid_argument("split: fraction yields an empty side for cell " +
                                        std::to_string(l));
        }
        // Fisher-Yates, then the first k shuffled indices go to train.
        for (std::size_t i = idx.size() - 1; i > 0; --i) {
            const std::size_t j =
                static_cast<std::size_t>(rng.next_unit() * static_cast<double>(i + 1));
            std::swap(idx[i], idx[std::min(j, i)]);
        }
        for (std::size_t i = 0; i < k; ++i) {
            in_train[idx[i]] = 1;
        }
    }

    DflDataset train, test;
    train.n_aps = test.n_aps = ds.n_aps;
    train.n_cells = test.n_cells = ds.n_cells;
    for (std::size_t i = 0; i < ds.samples.size(); ++i) {
        (in_train[i] ? train : test).samples.push_back(ds.samples[i]);
    }
    if (train.samples.empty() || test.samples.empty()) {
        throw std::invalid_argument("split: fraction yields an empty side");
    }
    infer_trials_per_cell(train);
    infer_trials_per_cell(test);
    return {std::move(train), std::move(test)};
}

}  // namespace dfl
