#include "dfl/cdbn.hpp"

#include <algorithm>
#include <stdexcept>
#include <string>

#include "dfl/errors.hpp"

namespace dfl {

std::size_t padded_input_side(std::size_t side, std::size_t kernel_side,
                              std::size_t pool_block) {
    std::size_t s = std::max(side, kernel_side);
    while ((s - kernel_side + 1) % pool_block != 0) {
        ++s;
    }
    return s;
}

namespace {

Matrix2 pad_map(const Matrix2& m, std::size_t side) {
    if (m.rows == side && m.cols == side) {
        return m;
    }
    Matrix2 out(side, side);
    for (std::size_t i = 0; i < m.rows; ++i) {
        for (std::size_t j = 0; j < m.cols; ++j) {
            out(i, j) = m(i, j);
        }
    }
    return out;
}

Maps pad_maps(const Maps& maps, std::size_t side) {
    Maps out;
    out.reserve(maps.size());
    for (const auto& m : maps) {
        out.push_back(pad_map(m, side));
    }
    return out;
}

}  // namespace

CdbnStack make_stack(const CdbnConfig& cfg, std::size_t input_side, RngStream& rng) {
    if (cfg.layers.empty()) {
        throw ConfigError("cdbn: no layers configured");
    }
    if (cfg.epochs.size() != cfg.layers.size()) {
        throw ConfigError("cdbn: epochs list must match layer count");
    }
    CdbnStack stack;
    stack.input_side = input_side;
    std::size_t side = input_side;
    std::size_t channels = 1;
    for (std::size_t l = 0; l < cfg.layers.size(); ++l) {
        const auto& spec = cfg.layers[l];
        if (spec.groups == 0 || spec.kernel_side == 0 || spec.pool_block == 0) {
            throw ConfigError("cdbn: layer " + std::to_string(l) + " has zero-sized spec");
        }
        if (side < spec.kernel_side) {
            throw ConfigError("cdbn: layer " + std::to_string(l) + " input side " +
                              std::to_string(side) + " smaller than kernel " +
                              std::to_string(spec.kernel_side));
        }
        const std::size_t padded =
            padded_input_side(side, spec.kernel_side, spec.pool_block);
        stack.input_sides.push_back(padded);
        const VisibleMode mode = l == 0 ? VisibleMode::gaussian : VisibleMode::binary;
        stack.layers.push_back(make_crbm(padded, spec.kernel_side, spec.groups, channels,
                                         spec.pool_block, mode, rng));
        side = stack.layers.back().pooled_side();
        channels = spec.groups;
        if (side == 0) {
            throw ConfigError("cdbn: layer " + std::to_string(l) +
                              " pools down to nothing");
        }
    }
    return stack;
}

namespace {

Maps forward_one(const Crbm& layer, const Maps& v) {
    return pool_forward(pool_posterior(layer, v));
}

double probe_recon_error(const Crbm& layer, const std::vector<Maps>& inputs) {
    const std::size_t probe = std::min<std::size_t>(inputs.size(), 64);
    double err = 0.0;
    std::size_t count = 0;
    for (std::size_t s = 0; s < probe; ++s) {
        const PosteriorQ q = pool_posterior(layer, inputs[s]);
        const Maps recon = visible_mean(layer, q.detect);
        for (std::size_t ch = 0; ch < recon.size(); ++ch) {
            for (std::size_t i = 0; i < recon[ch].data.size(); ++i) {
                const double d = recon[ch].data[i] - inputs[s][ch].data[i];
                err += d * d;
                ++count;
            }
        }
    }
    return err / static_cast<double>(count);
}

}  // namespace

CdbnStack pretrain_greedy(const CdbnConfig& cfg, const std::vector<Matrix2>& data,
                          RngStream& rng, std::vector<LayerReconError>* recon_log) {
    if (data.empty()) {
        throw std::invalid_argument("pretrain_greedy: empty data");
    }
    const std::size_t input_side = data.front().rows;
    for (const auto& m : data) {
        if (m.rows != input_side || m.cols != input_side) {
            throw std::invalid_argument("pretrain_greedy: non-uniform input shapes");
        }
    }
    CdbnStack stack = make_stack(cfg, input_side, rng);

    // Current layer inputs, one channel stack per sample.
    std::vector<Maps> inputs(data.size());
    for (std::size_t s = 0; s < data.size(); ++s) {
        inputs[s] = pad_maps({data[s]}, stack.input_sides[0]);
    }

    CdParams params;
    params.n_steps = cfg.cd_steps;
    params.learning_rate = cfg.learning_rate;
    params.target_sparsity = cfg.target_sparsity;
    params.sparsity_rate = cfg.sparsity_rate;

    std::vector<std::size_t> order(data.size());
    for (std::size_t i = 0; i < order.size(); ++i) {
        order[i] = i;
    }

    for (std::size_t l = 0; l < stack.layers.size(); ++l) {
        Crbm& layer = stack.layers[l];
        init_biases_from_data(layer, inputs, cfg.target_sparsity);
        LayerReconError log;
        if (recon_log != nullptr) {
            log.initial = probe_recon_error(layer, inputs);
        }
        const std::size_t batch = std::max<std::size_t>(1, cfg.batch_size);
        for (int epoch = 0; epoch < cfg.epochs[l]; ++epoch) {
            // Seeded shuffle per epoch.
            for (std::size_t i = order.size() - 1; i > 0; --i) {
                const std::size_t j =
                    static_cast<std::size_t>(rng.next_unit() * static_cast<double>(i + 1));
                std::swap(order[i], order[std::min(j, i)]);
            }
            for (std::size_t at = 0; at < order.size(); at += batch) {
                std::vector<Maps> mb;
                mb.reserve(batch);
                for (std::size_t b = at; b < std::min(at + batch, order.size()); ++b) {
                    mb.push_back(inputs[order[b]]);
                }
                cd_step(layer, mb, params, rng);
            }
        }
        if (recon_log != nullptr) {
            log.trained = probe_recon_error(layer, inputs);
            recon_log->push_back(log);
        }
        if (l + 1 < stack.layers.size()) {
            const std::size_t next_side = stack.input_sides[l + 1];
            for (auto& in : inputs) {
                in = pad_maps(forward_one(layer, in), next_side);
            }
        }
    }
    return stack;
}

std::vector<double> features(const CdbnStack& stack, const Matrix2& v) {
    if (v.rows != stack.input_side || v.cols != stack.input_side) {
        throw std::invalid_argument("features: input side mismatch");
    }
    Maps maps = pad_maps({v}, stack.input_sides[0]);
    for (std::size_t l = 0; l < stack.layers.size(); ++l) {
        maps = forward_one(stack.layers[l], maps);
        if (l + 1 < stack.layers.size()) {
            maps = pad_maps(maps, stack.input_sides[l + 1]);
        }
    }
    std::vector<double> out;
    out.reserve(feature_dim(stack));
    for (const auto& m : maps) {
        out.insert(out.end(), m.data.begin(), m.data.end());
    }
    return out;
}

std::size_t feature_dim(const CdbnStack& stack) {
    const Crbm& last = stack.layers.back();
    return last.groups() * last.pooled_side() * last.pooled_side();
}

}  // namespace dfl
