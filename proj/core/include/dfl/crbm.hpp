#pragma once

#include <cstdint>
#include <vector>

#include "dfl/gbrbm.hpp"
#include "dfl/numerics.hpp"

namespace dfl {

/// A stack of same-shaped square maps (feature groups or visible channels).
using Maps = std::vector<Matrix2>;

/// Convolutional RBM with probabilistic max-pooling. K kernel groups share
/// one hidden bias each; the visible bias is one scalar per input channel.
/// With one channel this is exactly the single-map model; multi-channel
/// visible layers are used when CRBMs are stacked.
struct Crbm {
    std::size_t input_side = 0;   // N_v
    std::size_t kernel_side = 0;  // N_w
    std::size_t channels = 1;
    std::size_t pool_block = 2;   // C: detection blocks are C x C
    VisibleMode mode = VisibleMode::binary;

    std::vector<Matrix2> kernels;      // K * channels, index k * channels + ch
    std::vector<double> hidden_bias;   // K
    std::vector<double> visible_bias;  // channels

    std::size_t groups() const { return hidden_bias.size(); }
    std::size_t hidden_side() const { return input_side - kernel_side + 1; }
    std::size_t pooled_side() const { return hidden_side() / pool_block; }
    const Matrix2& kernel(std::size_t k, std::size_t ch) const {
        return kernels[k * channels + ch];
    }
    Matrix2& kernel(std::size_t k, std::size_t ch) { return kernels[k * channels + ch]; }
};

/// Fan-in-scaled Gaussian kernels, zero biases. Requires kernel_side <=
/// input_side and a detection side divisible by pool_block.
Crbm make_crbm(std::size_t input_side, std::size_t kernel_side, std::size_t groups,
               std::size_t channels, std::size_t pool_block, VisibleMode mode,
               RngStream& rng);

/// Data-driven bias start: visible biases match the (probe) data mean and
/// hidden biases offset the mean bottom-up drive so the initial detection
/// activation sits near target_p. Keeps deep stacks inside the responsive
/// range of the block softmax from the first update.
void init_biases_from_data(Crbm& m, const std::vector<Maps>& data, double target_p);

/// Joint energy of visible maps and binary detection maps:
///   E = - sum_k sum_ij h^k_ij (corr(v, W^k)_ij + b_k) - sum_ch c_ch sum v
/// plus 0.5 * sum v^2 in gaussian mode. The correlation runs over channels.
double energy(const Crbm& m, const Maps& v, const Maps& h_detect);

/// Pre-sigmoid detection signals I^k = sum_ch corr(v_ch, W^k_ch) + b_k.
Maps bottom_up(const Crbm& m, const Maps& v);

/// Block posteriors of the detection + pooling layer.
struct PosteriorQ {
    Maps detect;   // K maps, q(h_ij = 1)
    Maps pool_on;  // K maps of (N_H/C)^2, q(p_alpha = 1)
};

/// Per C x C block: q(h_ij=1) = exp(I_ij) / (1 + sum_block exp(I)) and
/// q(p=0) = 1 / (1 + sum_block exp(I)), computed with max subtraction.
PosteriorQ pool_posterior(const Crbm& m, const Maps& v);

/// Same computation from precomputed signals (used by tests and stacking).
PosteriorQ posterior_from_signals(const Maps& signals, std::size_t pool_block);

struct HiddenState {
    Maps detect;  // binary, at most one unit on per block
    Maps pool;    // binary, the OR of each block
};

/// One categorical draw per block over the C^2 + 1 outcomes. Block order is
/// row-major; within a block, units row-major and "all off" last.
HiddenState sample_hidden(const Crbm& m, const Maps& v, RngStream& rng);

/// Visible conditional given detection maps: sigmoid(full_conv + c) in
/// binary mode, mean full_conv + c (unit variance) in gaussian mode.
Maps visible_mean(const Crbm& m, const Maps& h_detect);

/// Sampled visible maps: Bernoulli in binary mode, Gaussian(mean, 1) in
/// gaussian mode.
Maps sample_visible(const Crbm& m, const Maps& h_detect, RngStream& rng);

/// Per-group bias nudge rate * (target_p - mean detection activation).
std::vector<double> sparsity_delta(const PosteriorQ& q, double target_p, double rate);

struct CdParams {
    int n_steps = 1;
    double learning_rate = 0.01;
    double target_sparsity = 0.05;
    double sparsity_rate = 0.0;  // 0 disables the sparsity update
};

/// One sparsity-regularized CD-n update over a mini-batch, applied in
/// place. Each sample runs on its own derived substream, so results do not
/// depend on evaluation interleaving.
void cd_step(Crbm& m, const std::vector<Maps>& batch, const CdParams& params,
             RngStream& rng);

/// The pooled-probability maps q(p=1); the shrunk representation consumed
/// by the next layer.
Maps pool_forward(const PosteriorQ& q);

}  // namespace dfl
