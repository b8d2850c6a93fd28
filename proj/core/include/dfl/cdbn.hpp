#pragma once

#include <cstdint>
#include <vector>

#include "dfl/crbm.hpp"

namespace dfl {

struct CdbnLayerSpec {
    std::size_t groups = 1;
    std::size_t kernel_side = 3;
    std::size_t pool_block = 2;
};

struct CdbnConfig {
    std::vector<CdbnLayerSpec> layers;
    std::vector<int> epochs;  // one entry per layer
    double learning_rate = 0.01;
    int cd_steps = 1;
    double target_sparsity = 0.05;
    double sparsity_rate = 0.001;  // 0 disables
    std::size_t batch_size = 20;
};

/// Greedily pretrained CRBM stack. Layer 1 sees the raw map (gaussian
/// visible units); upper layers see the pooled probability maps of the
/// layer below (binary visible units). When a layer's detection side would
/// not divide its pool block, its input maps are zero-padded bottom/right;
/// `input_sides` records the padded side each layer expects.
struct CdbnStack {
    std::vector<Crbm> layers;
    std::size_t input_side = 0;
    std::vector<std::size_t> input_sides;
};

/// Side the input must be padded to so that (side - kernel + 1) divides the
/// pool block.
std::size_t padded_input_side(std::size_t side, std::size_t kernel_side,
                              std::size_t pool_block);

/// Validates the whole shape chain, throwing ConfigError before any
/// training happens.
CdbnStack make_stack(const CdbnConfig& cfg, std::size_t input_side, RngStream& rng);

/// Per-layer mean-field reconstruction error before and after that layer's
/// training, measured on a fixed probe subset.
struct LayerReconError {
    double initial = 0.0;
    double trained = 0.0;
};

/// Algorithm: train layer 1 on the data, freeze it, push the data through
/// (mean-field), train layer 2 on the result, and so on. Deterministic
/// given the stream. `recon_log`, when given, receives one entry per layer.
CdbnStack pretrain_greedy(const CdbnConfig& cfg, const std::vector<Matrix2>& data,
                          RngStream& rng,
                          std::vector<LayerReconError>* recon_log = nullptr);

/// Deterministic mean-field forward pass; the final layer's pooled maps
/// flattened group-major, row-major.
std::vector<double> features(const CdbnStack& stack, const Matrix2& v);

std::size_t feature_dim(const CdbnStack& stack);

}  // namespace dfl
