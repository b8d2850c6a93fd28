#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

namespace dfl {

/// Dense row-major matrix of doubles. All model state in this library is
/// built from these; everything is 64-bit.
struct Matrix2 {
    std::size_t rows = 0;
    std::size_t cols = 0;
    std::vector<double> data;

    Matrix2() = default;
    Matrix2(std::size_t r, std::size_t c, double fill = 0.0)
        : rows(r), cols(c), data(r * c, fill) {}

    double& operator()(std::size_t i, std::size_t j) { return data[i * cols + j]; }
    double operator()(std::size_t i, std::size_t j) const { return data[i * cols + j]; }

    bool same_shape(const Matrix2& o) const { return rows == o.rows && cols == o.cols; }
};

/// Numerically safe logistic function; saturates without overflow.
double sigmoid(double x);

/// Max-subtracted softmax. Output is positive and sums to 1.
std::vector<double> softmax(std::span<const double> z);

/// Sliding-window correlation of `kernel` over `input`, output size
/// (A-w+1) x (A-w+1):
///   out[i,j] = sum_{r,s} kernel'[r,s] * input[i+r, j+s]
/// where kernel' is the 180-degree rotation of `kernel` iff `flip_kernel`.
/// flip_kernel=false is plain cross-correlation; flip_kernel=true is the
/// valid part of a true 2-D convolution.
Matrix2 conv2d_valid(const Matrix2& input, const Matrix2& kernel, bool flip_kernel);

/// Zero-padded full convolution, output size (m+w-1) x (m+w-1):
///   out[m,n] = sum_{p,q} input[p,q] * kernel[m-p, n-q].
/// Adjoint of conv2d_valid(.,.,false): for compatible shapes,
///   <conv2d_valid(X,K,false), Y> == <X, conv2d_full(Y,K)>.
Matrix2 conv2d_full(const Matrix2& input, const Matrix2& kernel);

/// Explicitly seeded splitmix64 stream. Identical seed reproduces the
/// identical sample sequence; one stream per logical sampling sequence,
/// never shared between threads.
struct RngStream {
    std::uint64_t state = 0;

    explicit RngStream(std::uint64_t seed) : state(seed) {}

    std::uint64_t next_u64();

    /// Uniform double in [0, 1), 53 random bits.
    double next_unit();
};

/// Derived seed for substream `index` of a base seed. Used to give every
/// batch sample / grid point its own independent stream.
std::uint64_t derive_seed(std::uint64_t base_seed, std::uint64_t index);

/// Bernoulli draw; p must be in [0, 1].
int sample_bernoulli(double p, RngStream& rng);

/// Gaussian draw via the Marsaglia polar method; variance must be >= 0.
double sample_gaussian(double mean, double variance, RngStream& rng);

/// Categorical draw proportional to `weights` (nonnegative, not all zero).
std::size_t sample_categorical(std::span<const double> weights, RngStream& rng);

}  // namespace dfl
