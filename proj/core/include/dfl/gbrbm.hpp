#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "dfl/numerics.hpp"

namespace dfl {

enum class VisibleMode { binary, gaussian };

/// Dense RBM with binary hidden units and either binary or Gaussian
/// (real-valued) visible units. D visible, K hidden.
struct GbRbm {
    Matrix2 weights;                  // D x K
    std::vector<double> hidden_bias;  // K
    std::vector<double> visible_bias; // D
    std::vector<double> visible_std;  // D, > 0; binary-mode models keep 1
    VisibleMode mode = VisibleMode::binary;

    std::size_t n_visible() const { return weights.rows; }
    std::size_t n_hidden() const { return weights.cols; }
};

/// Gaussian(0, 0.01^2) weights, zero biases, unit visible std.
GbRbm make_gbrbm(std::size_t n_visible, std::size_t n_hidden, VisibleMode mode,
                 RngStream& rng);

/// E = -sum_ij v_i W_ij h_j - sum_j b_j h_j - sum_i c_i v_i.
double energy_binary(const GbRbm& m, std::span<const double> v, std::span<const double> h);

/// Binary energy plus the quadratic visible term; quadratic and coupling
/// terms are divided by sigma_i^2 (identical to the binary form plus
/// 0.5*sum v^2 when sigma = 1).
double energy_gaussian(const GbRbm& m, std::span<const double> v, std::span<const double> h);

/// p(h_j = 1 | v) = sigmoid(b_j + sum_i W_ij v_i / sigma_i^2).
std::vector<double> prob_h_given_v(const GbRbm& m, std::span<const double> v);

/// Binary mode: p(v_i = 1 | h) = sigmoid(c_i + sum_j W_ij h_j).
/// Gaussian mode: conditional mean c_i + sigma_i^2 * sum_j W_ij h_j
/// (variance sigma_i^2).
std::vector<double> prob_v_given_h(const GbRbm& m, std::span<const double> h);

struct GbRbmDeltas {
    Matrix2 weights;
    std::vector<double> hidden_bias;
    std::vector<double> visible_bias;
};

/// Contrastive divergence (CD-n) parameter deltas for a mini-batch, scaled
/// by learning_rate. Hidden statistics use conditional probabilities at
/// step 0 and step n; intermediate states are sampled.
GbRbmDeltas cd_update(const GbRbm& m, const std::vector<std::vector<double>>& batch,
                      int n_steps, double learning_rate, RngStream& rng);

void apply_deltas(GbRbm& m, const GbRbmDeltas& d);

/// Exact joint p(v, h) over all 2^(D+K) binary states, indexed by
/// (v_0 + 2 v_1 + ...) + 2^D * (h_0 + 2 h_1 + ...). Refuses D + K > 20.
std::vector<double> joint_bruteforce(const GbRbm& m);

}  // namespace dfl
