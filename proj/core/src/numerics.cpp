#include "dfl/numerics.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace dfl {

double sigmoid(double x) {
    if (x >= 0.0) {
        return 1.0 / (1.0 + std::exp(-x));
    }
    const double e = std::exp(x);
    return e / (1.0 + e);
}

std::vector<double> softmax(std::span<const double> z) {
    if (z.empty()) {
        throw std::invalid_argument("softmax: empty input");
    }
    const double m = *std::max_element(z.begin(), z.end());
    std::vector<double> out(z.size());
    double sum = 0.0;
    for (std::size_t i = 0; i < z.size(); ++i) {
        out[i] = std::exp(z[i] - m);
        sum += out[i];
    }
    for (double& v : out) {
        v /= sum;
    }
    return out;
}

Matrix2 conv2d_valid(const Matrix2& input, const Matrix2& kernel, bool flip_kernel) {
    if (input.rows != input.cols || kernel.rows != kernel.cols) {
        throw std::invalid_argument("conv2d_valid: inputs must be square");
    }
    const std::size_t a = input.rows;
    const std::size_t w = kernel.rows;
    if (w == 0 || w > a) {
        throw std::invalid_argument("conv2d_valid: kernel larger than input");
    }
    const std::size_t out_side = a - w + 1;
    Matrix2 out(out_side, out_side);
    for (std::size_t i = 0; i < out_side; ++i) {
        for (std::size_t j = 0; j < out_side; ++j) {
            double acc = 0.0;
            for (std::size_t r = 0; r < w; ++r) {
                const double* in_row = &input.data[(i + r) * a + j];
                const double* k_row = flip_kernel ? &kernel.data[(w - 1 - r) * w]
                                                  : &kernel.data[r * w];
                if (flip_kernel) {
                    for (std::size_t s = 0; s < w; ++s) {
                        acc += k_row[w - 1 - s] * in_row[s];
                    }
                } else {
                    for (std::size_t s = 0; s < w; ++s) {
                        acc += k_row[s] * in_row[s];
                    }
                }
            }
            out(i, j) = acc;
        }
    }
    return out;
}

Matrix2 conv2d_full(const Matrix2& input, const Matrix2& kernel) {
    if (input.rows != input.cols || kernel.rows != kernel.cols) {
        throw std::invalid_argument("conv2d_full: inputs must be square");
    }
    const std::size_t m = input.rows;
    const std::size_t w = kernel.rows;
    if (m == 0 || w == 0) {
        throw std::invalid_argument("conv2d_full: empty operand");
    }
    const std::size_t out_side = m + w - 1;
    Matrix2 out(out_side, out_side);
    // Scatter form: each input element stamps the kernel.
    for (std::size_t p = 0; p < m; ++p) {
        for (std::size_t q = 0; q < m; ++q) {
            const double v = input(p, q);
            if (v == 0.0) {
                continue;
            }
            for (std::size_t r = 0; r < w; ++r) {
                double* out_row = &out.data[(p + r) * out_side + q];
                const double* k_row = &kernel.data[r * w];
                for (std::size_t s = 0; s < w; ++s) {
                    out_row[s] += v * k_row[s];
                }
            }
        }
    }
    return out;
}

namespace {

constexpr std::uint64_t kGolden = 0x9E3779B97F4A7C15ULL;

std::uint64_t mix64(std::uint64_t z) {
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
}

}  // namespace

std::uint64_t RngStream::next_u64() {
    state += kGolden;
    return mix64(state);
}

double RngStream::next_unit() {
    return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
}

std::uint64_t derive_seed(std::uint64_t base_seed, std::uint64_t index) {
    return mix64(base_seed + kGolden * (index + 1));
}

int sample_bernoulli(double p, RngStream& rng) {
    if (!(p >= 0.0 && p <= 1.0)) {
        throw std::invalid_argument("sample_bernoulli: p must be in [0,1]");
    }
    return rng.next_unit() < p ? 1 : 0;
}

double sample_gaussian(double mean, double variance, RngStream& rng) {
    if (!(variance >= 0.0)) {
        throw std::invalid_argument("sample_gaussian: variance must be >= 0");
    }
    if (variance == 0.0) {
        return mean;
    }
    // Marsaglia polar method; consumes a seed-determined number of uniforms.
    double u, v, s;
    do {
        u = 2.0 * rng.next_unit() - 1.0;
        v = 2.0 * rng.next_unit() - 1.0;
        s = u * u + v * v;
    } while (s >= 1.0 || s == 0.0);
    const double n = u * std::sqrt(-2.0 * std::log(s) / s);
    return mean + std::sqrt(variance) * n;
}

std::size_t sample_categorical(std::span<const double> weights, RngStream& rng) {
    if (weights.empty()) {
        throw std::invalid_argument("sample_categorical: empty weights");
    }
    double total = 0.0;
    for (double w : weights) {
        if (!(w >= 0.0)) {
            throw std::invalid_argument("sample_categorical: negative weight");
        }
        total += w;
    }
    if (total <= 0.0) {
        throw std::invalid_argument("sample_categorical: all weights zero");
    }
    const double r = rng.next_unit() * total;
    double acc = 0.0;
    for (std::size_t i = 0; i < weights.size(); ++i) {
        acc += weights[i];
        if (r < acc) {
            return i;
        }
    }
    return weights.size() - 1;  // r landed on accumulated rounding slack
}

}  // namespace dfl
