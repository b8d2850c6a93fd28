#include "dfl/crbm.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace dfl {

namespace {

void check_visible(const Crbm& m, const Maps& v) {
    if (v.size() != m.channels) {
        throw std::invalid_argument("crbm: expected " + std::to_string(m.channels) +
                                    " visible channels, got " + std::to_string(v.size()));
    }
    for (const auto& ch : v) {
        if (ch.rows != m.input_side || ch.cols != m.input_side) {
            throw std::invalid_argument("crbm: visible map shape mismatch");
        }
    }
}

void check_detect(const Crbm& m, const Maps& h) {
    const std::size_t nh = m.hidden_side();
    if (h.size() != m.groups()) {
        throw std::invalid_argument("crbm: expected " + std::to_string(m.groups()) +
                                    " detection maps, got " + std::to_string(h.size()));
    }
    for (const auto& g : h) {
        if (g.rows != nh || g.cols != nh) {
            throw std::invalid_argument("crbm: detection map shape mismatch");
        }
    }
}

}  // namespace

Crbm make_crbm(std::size_t input_side, std::size_t kernel_side, std::size_t groups,
               std::size_t channels, std::size_t pool_block, VisibleMode mode,
               RngStream& rng) {
    if (kernel_side == 0 || kernel_side > input_side || groups == 0 || channels == 0 ||
        pool_block == 0) {
        throw std::invalid_argument("make_crbm: invalid geometry");
    }
    const std::size_t hidden_side = input_side - kernel_side + 1;
    if (hidden_side % pool_block != 0) {
        throw std::invalid_argument("make_crbm: detection side " +
                                    std::to_string(hidden_side) +
                                    " not divisible by pool block " +
                                    std::to_string(pool_block));
    }
    Crbm m;
    m.input_side = input_side;
    m.kernel_side = kernel_side;
    m.channels = channels;
    m.pool_block = pool_block;
    m.mode = mode;
    // Fan-in-scaled init keeps the detection signals O(1) for any channel
    // count; one input channel with a 3x3 kernel gives std 0.1.
    const double init_std =
        0.3 / std::sqrt(static_cast<double>(channels) * kernel_side * kernel_side);
    m.kernels.assign(groups * channels, Matrix2(kernel_side, kernel_side));
    for (auto& k : m.kernels) {
        for (double& w : k.data) {
            w = sample_gaussian(0.0, init_std * init_std, rng);
        }
    }
    m.hidden_bias.assign(groups, 0.0);
    m.visible_bias.assign(channels, 0.0);
    return m;
}

void init_biases_from_data(Crbm& m, const std::vector<Maps>& data, double target_p) {
    if (data.empty() || !(target_p > 0.0 && target_p < 1.0)) {
        throw std::invalid_argument("init_biases_from_data: bad arguments");
    }
    const std::size_t block_units =
        static_cast<double>(m.pool_block * m.pool_block) * target_p < 1.0
            ? m.pool_block * m.pool_block
            : 0;
    const std::size_t probe = std::min<std::size_t>(data.size(), 256);

    // Visible bias matches the data mean per channel: logit for binary
    // units, the mean itself for gaussian units.
    std::vector<double> channel_mean(m.channels, 0.0);
    for (std::size_t s = 0; s < probe; ++s) {
        check_visible(m, data[s]);
        for (std::size_t ch = 0; ch < m.channels; ++ch) {
            double acc = 0.0;
            for (double x : data[s][ch].data) {
                acc += x;
            }
            channel_mean[ch] += acc / static_cast<double>(data[s][ch].data.size());
        }
    }
    for (std::size_t ch = 0; ch < m.channels; ++ch) {
        const double mean = channel_mean[ch] / static_cast<double>(probe);
        if (m.mode == VisibleMode::binary) {
            const double p = std::clamp(mean, 1e-3, 1.0 - 1e-3);
            m.visible_bias[ch] = std::log(p / (1.0 - p));
        } else {
            m.visible_bias[ch] = mean;
        }
    }

    // Hidden bias offsets the mean bottom-up drive so the initial block
    // activation sits near the sparsity target.
    std::vector<double> signal_mean(m.groups(), 0.0);
    for (std::size_t k = 0; k < m.groups(); ++k) {
        m.hidden_bias[k] = 0.0;
    }
    for (std::size_t s = 0; s < probe; ++s) {
        const Maps signals = bottom_up(m, data[s]);
        for (std::size_t k = 0; k < m.groups(); ++k) {
            double acc = 0.0;
            for (double x : signals[k].data) {
                acc += x;
            }
            signal_mean[k] += acc / static_cast<double>(signals[k].data.size());
        }
    }
    const double odds =
        block_units > 0
            ? std::log(target_p / (1.0 - static_cast<double>(block_units) * target_p))
            : std::log(target_p / (1.0 - target_p));
    for (std::size_t k = 0; k < m.groups(); ++k) {
        m.hidden_bias[k] = odds - signal_mean[k] / static_cast<double>(probe);
    }
}

double energy(const Crbm& m, const Maps& v, const Maps& h_detect) {
    check_visible(m, v);
    check_detect(m, h_detect);
    const Maps signals = bottom_up(m, v);
    double e = 0.0;
    for (std::size_t k = 0; k < m.groups(); ++k) {
        for (std::size_t i = 0; i < signals[k].data.size(); ++i) {
            e -= h_detect[k].data[i] * signals[k].data[i];
        }
    }
    for (std::size_t ch = 0; ch < m.channels; ++ch) {
        double sum = 0.0, sq = 0.0;
        for (double x : v[ch].data) {
            sum += x;
            sq += x * x;
        }
        e -= m.visible_bias[ch] * sum;
        if (m.mode == VisibleMode::gaussian) {
            e += 0.5 * sq;
        }
    }
    return e;
}

Maps bottom_up(const Crbm& m, const Maps& v) {
    check_visible(m, v);
    Maps signals(m.groups());
    for (std::size_t k = 0; k < m.groups(); ++k) {
        Matrix2 acc = conv2d_valid(v[0], m.kernel(k, 0), /*flip_kernel=*/false);
        for (std::size_t ch = 1; ch < m.channels; ++ch) {
            const Matrix2 part = conv2d_valid(v[ch], m.kernel(k, ch), false);
            for (std::size_t i = 0; i < acc.data.size(); ++i) {
                acc.data[i] += part.data[i];
            }
        }
        for (double& x : acc.data) {
            x += m.hidden_bias[k];
        }
        signals[k] = std::move(acc);
    }
    return signals;
}

PosteriorQ posterior_from_signals(const Maps& signals, std::size_t pool_block) {
    PosteriorQ q;
    q.detect.reserve(signals.size());
    q.pool_on.reserve(signals.size());
    const std::size_t c = pool_block;
    for (const auto& sig : signals) {
        if (sig.rows % c != 0 || sig.rows != sig.cols) {
            throw std::invalid_argument("posterior_from_signals: bad detection shape");
        }
        const std::size_t nh = sig.rows;
        const std::size_t np = nh / c;
        Matrix2 qd(nh, nh);
        Matrix2 qp(np, np);
        for (std::size_t bi = 0; bi < np; ++bi) {
            for (std::size_t bj = 0; bj < np; ++bj) {
                // Softmax over {each unit on, all off}; the off outcome has
                // logit 0, so the max subtraction includes it.
                double mx = 0.0;
                for (std::size_t r = 0; r < c; ++r) {
                    for (std::size_t s = 0; s < c; ++s) {
                        mx = std::max(mx, sig(bi * c + r, bj * c + s));
                    }
                }
                double denom = std::exp(-mx);
                for (std::size_t r = 0; r < c; ++r) {
                    for (std::size_t s = 0; s < c; ++s) {
                        denom += std::exp(sig(bi * c + r, bj * c + s) - mx);
                    }
                }
                for (std::size_t r = 0; r < c; ++r) {
                    for (std::size_t s = 0; s < c; ++s) {
                        qd(bi * c + r, bj * c + s) =
                            std::exp(sig(bi * c + r, bj * c + s) - mx) / denom;
                    }
                }
                qp(bi, bj) = 1.0 - std::exp(-mx) / denom;
            }
        }
        q.detect.push_back(std::move(qd));
        q.pool_on.push_back(std::move(qp));
    }
    return q;
}

PosteriorQ pool_posterior(const Crbm& m, const Maps& v) {
    return posterior_from_signals(bottom_up(m, v), m.pool_block);
}

HiddenState sample_hidden(const Crbm& m, const Maps& v, RngStream& rng) {
    const PosteriorQ q = pool_posterior(m, v);
    const std::size_t c = m.pool_block;
    const std::size_t nh = m.hidden_side();
    const std::size_t np = nh / c;
    HiddenState state;
    state.detect.assign(m.groups(), Matrix2(nh, nh));
    state.pool.assign(m.groups(), Matrix2(np, np));
    std::vector<double> probs(c * c + 1);
    for (std::size_t k = 0; k < m.groups(); ++k) {
        for (std::size_t bi = 0; bi < np; ++bi) {
            for (std::size_t bj = 0; bj < np; ++bj) {
                double on_total = 0.0;
                for (std::size_t r = 0; r < c; ++r) {
                    for (std::size_t s = 0; s < c; ++s) {
                        probs[r * c + s] = q.detect[k](bi * c + r, bj * c + s);
                        on_total += probs[r * c + s];
                    }
                }
                probs[c * c] = std::max(0.0, 1.0 - on_total);  // all off
                const std::size_t pick = sample_categorical(probs, rng);
                if (pick < c * c) {
                    state.detect[k](bi * c + pick / c, bj * c + pick % c) = 1.0;
                    state.pool[k](bi, bj) = 1.0;
                }
            }
        }
    }
    return state;
}

Maps visible_mean(const Crbm& m, const Maps& h_detect) {
    check_detect(m, h_detect);
    Maps out(m.channels);
    for (std::size_t ch = 0; ch < m.channels; ++ch) {
        Matrix2 acc(m.input_side, m.input_side, m.visible_bias[ch]);
        for (std::size_t k = 0; k < m.groups(); ++k) {
            const Matrix2 part = conv2d_full(h_detect[k], m.kernel(k, ch));
            for (std::size_t i = 0; i < acc.data.size(); ++i) {
                acc.data[i] += part.data[i];
            }
        }
        if (m.mode == VisibleMode::binary) {
            for (double& x : acc.data) {
                x = sigmoid(x);
            }
        }
        out[ch] = std::move(acc);
    }
    return out;
}

Maps sample_visible(const Crbm& m, const Maps& h_detect, RngStream& rng) {
    Maps out = visible_mean(m, h_detect);
    for (auto& ch : out) {
        for (double& x : ch.data) {
            x = m.mode == VisibleMode::binary
                    ? static_cast<double>(sample_bernoulli(x, rng))
                    : sample_gaussian(x, 1.0, rng);
        }
    }
    return out;
}

std::vector<double> sparsity_delta(const PosteriorQ& q, double target_p, double rate) {
    if (!(target_p > 0.0 && target_p < 1.0)) {
        throw std::invalid_argument("sparsity_delta: target must be in (0,1)");
    }
    std::vector<double> out(q.detect.size());
    for (std::size_t k = 0; k < q.detect.size(); ++k) {
        double mean = 0.0;
        for (double x : q.detect[k].data) {
            mean += x;
        }
        mean /= static_cast<double>(q.detect[k].data.size());
        out[k] = rate * (target_p - mean);
    }
    return out;
}

namespace {

struct CrbmGrad {
    std::vector<Matrix2> kernels;
    std::vector<double> hidden_bias;
    std::vector<double> visible_bias;
    std::vector<double> q0_mean;  // per-group data-phase activation means
};

// CD-n statistics for one sample. Hidden statistics use posteriors; the
// visible chain uses samples in binary mode and conditional means in
// gaussian mode.
CrbmGrad sample_gradient(const Crbm& m, const Maps& v0, int n_steps, RngStream& rng) {
    const double nh2 = static_cast<double>(m.hidden_side() * m.hidden_side());
    const double nv2 = static_cast<double>(m.input_side * m.input_side);

    const PosteriorQ q0 = pool_posterior(m, v0);
    HiddenState h = sample_hidden(m, v0, rng);
    Maps vn;
    PosteriorQ qn;
    for (int step = 0; step < n_steps; ++step) {
        vn = m.mode == VisibleMode::gaussian ? visible_mean(m, h.detect)
                                             : sample_visible(m, h.detect, rng);
        qn = pool_posterior(m, vn);
        if (step + 1 < n_steps) {
            h = sample_hidden(m, vn, rng);
        }
    }

    CrbmGrad g;
    g.kernels.reserve(m.kernels.size());
    for (std::size_t k = 0; k < m.groups(); ++k) {
        for (std::size_t ch = 0; ch < m.channels; ++ch) {
            Matrix2 pos = conv2d_valid(v0[ch], q0.detect[k], /*flip_kernel=*/false);
            const Matrix2 neg = conv2d_valid(vn[ch], qn.detect[k], false);
            for (std::size_t i = 0; i < pos.data.size(); ++i) {
                pos.data[i] = (pos.data[i] - neg.data[i]) / nh2;
            }
            g.kernels.push_back(std::move(pos));
        }
    }
    g.hidden_bias.assign(m.groups(), 0.0);
    g.q0_mean.assign(m.groups(), 0.0);
    for (std::size_t k = 0; k < m.groups(); ++k) {
        double acc = 0.0, acc0 = 0.0;
        for (std::size_t i = 0; i < q0.detect[k].data.size(); ++i) {
            acc += q0.detect[k].data[i] - qn.detect[k].data[i];
            acc0 += q0.detect[k].data[i];
        }
        g.hidden_bias[k] = acc / nh2;
        g.q0_mean[k] = acc0 / nh2;
    }
    g.visible_bias.assign(m.channels, 0.0);
    for (std::size_t ch = 0; ch < m.channels; ++ch) {
        double acc = 0.0;
        for (std::size_t i = 0; i < v0[ch].data.size(); ++i) {
            acc += v0[ch].data[i] - vn[ch].data[i];
        }
        g.visible_bias[ch] = acc / nv2;
    }
    return g;
}

}  // namespace

void cd_step(Crbm& m, const std::vector<Maps>& batch, const CdParams& params,
             RngStream& rng) {
    if (params.n_steps < 1 || batch.empty()) {
        throw std::invalid_argument("cd_step: need n_steps >= 1 and a non-empty batch");
    }
    for (const auto& v : batch) {
        check_visible(m, v);
    }
    const std::uint64_t base = rng.next_u64();

    std::vector<CrbmGrad> grads(batch.size());
    for (std::size_t s = 0; s < batch.size(); ++s) {
        RngStream sub(derive_seed(base, s));
        grads[s] = sample_gradient(m, batch[s], params.n_steps, sub);
    }

    // Accumulate in sample order, then apply.
    const double scale = params.learning_rate / static_cast<double>(batch.size());
    std::vector<double> q0_mean(m.groups(), 0.0);
    for (const auto& g : grads) {
        for (std::size_t i = 0; i < m.kernels.size(); ++i) {
            for (std::size_t e = 0; e < m.kernels[i].data.size(); ++e) {
                m.kernels[i].data[e] += scale * g.kernels[i].data[e];
            }
        }
        for (std::size_t k = 0; k < m.groups(); ++k) {
            m.hidden_bias[k] += scale * g.hidden_bias[k];
            q0_mean[k] += g.q0_mean[k] / static_cast<double>(batch.size());
        }
        for (std::size_t ch = 0; ch < m.channels; ++ch) {
            m.visible_bias[ch] += scale * g.visible_bias[ch];
        }
    }
    if (params.sparsity_rate != 0.0) {
        for (std::size_t k = 0; k < m.groups(); ++k) {
            m.hidden_bias[k] +=
                params.sparsity_rate * (params.target_sparsity - q0_mean[k]);
        }
    }
}

Maps pool_forward(const PosteriorQ& q) {
    return q.pool_on;
}

}  // namespace dfl
