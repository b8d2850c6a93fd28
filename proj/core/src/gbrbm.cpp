#include "dfl/gbrbm.hpp"

#include <cmath>
#include <stdexcept>

namespace dfl {

GbRbm make_gbrbm(std::size_t n_visible, std::size_t n_hidden, VisibleMode mode,
                 RngStream& rng) {
    GbRbm m;
    m.weights = Matrix2(n_visible, n_hidden);
    for (double& w : m.weights.data) {
        w = sample_gaussian(0.0, 0.01 * 0.01, rng);
    }
    m.hidden_bias.assign(n_hidden, 0.0);
    m.visible_bias.assign(n_visible, 0.0);
    m.visible_std.assign(n_visible, 1.0);
    m.mode = mode;
    return m;
}

namespace {

void check_lengths(const GbRbm& m, std::span<const double> v, std::span<const double> h) {
    if (v.size() != m.n_visible() || h.size() != m.n_hidden()) {
        throw std::invalid_argument("gbrbm: state length mismatch");
    }
}

}  // namespace

double energy_binary(const GbRbm& m, std::span<const double> v, std::span<const double> h) {
    check_lengths(m, v, h);
    const std::size_t d = m.n_visible(), k = m.n_hidden();
    double e = 0.0;
    for (std::size_t i = 0; i < d; ++i) {
        if (v[i] == 0.0) {
            continue;
        }
        const double* w_row = &m.weights.data[i * k];
        double coup = 0.0;
        for (std::size_t j = 0; j < k; ++j) {
            coup += w_row[j] * h[j];
        }
        e -= v[i] * coup + m.visible_bias[i] * v[i];
    }
    for (std::size_t j = 0; j < k; ++j) {
        e -= m.hidden_bias[j] * h[j];
    }
    return e;
}

double energy_gaussian(const GbRbm& m, std::span<const double> v, std::span<const double> h) {
    check_lengths(m, v, h);
    const std::size_t d = m.n_visible(), k = m.n_hidden();
    double e = 0.0;
    for (std::size_t i = 0; i < d; ++i) {
        const double s2 = m.visible_std[i] * m.visible_std[i];
        const double* w_row = &m.weights.data[i * k];
        double coup = 0.0;
        for (std::size_t j = 0; j < k; ++j) {
            coup += w_row[j] * h[j];
        }
        e += 0.5 * v[i] * v[i] / s2 - v[i] * coup / s2 - m.visible_bias[i] * v[i];
    }
    for (std::size_t j = 0; j < k; ++j) {
        e -= m.hidden_bias[j] * h[j];
    }
    return e;
}

std::vector<double> prob_h_given_v(const GbRbm& m, std::span<const double> v) {
    if (v.size() != m.n_visible()) {
        throw std::invalid_argument("prob_h_given_v: length mismatch");
    }
    const std::size_t d = m.n_visible(), k = m.n_hidden();
    std::vector<double> act(m.hidden_bias.begin(), m.hidden_bias.end());
    for (std::size_t i = 0; i < d; ++i) {
        const double vi = v[i] / (m.visible_std[i] * m.visible_std[i]);
        if (vi == 0.0) {
            continue;
        }
        const double* w_row = &m.weights.data[i * k];
        for (std::size_t j = 0; j < k; ++j) {
            act[j] += w_row[j] * vi;
        }
    }
    for (double& a : act) {
        a = sigmoid(a);
    }
    return act;
}

std::vector<double> prob_v_given_h(const GbRbm& m, std::span<const double> h) {
    if (h.size() != m.n_hidden()) {
        throw std::invalid_argument("prob_v_given_h: length mismatch");
    }
    const std::size_t d = m.n_visible(), k = m.n_hidden();
    std::vector<double> out(d);
    for (std::size_t i = 0; i < d; ++i) {
        const double* w_row = &m.weights.data[i * k];
        double coup = 0.0;
        for (std::size_t j = 0; j < k; ++j) {
            coup += w_row[j] * h[j];
        }
        if (m.mode == VisibleMode::binary) {
            out[i] = sigmoid(m.visible_bias[i] + coup);
        } else {
            const double s2 = m.visible_std[i] * m.visible_std[i];
            out[i] = m.visible_bias[i] + s2 * coup;
        }
    }
    return out;
}

GbRbmDeltas cd_update(const GbRbm& m, const std::vector<std::vector<double>>& batch,
                      int n_steps, double learning_rate, RngStream& rng) {
    if (n_steps < 1 || batch.empty()) {
        throw std::invalid_argument("cd_update: need n_steps >= 1 and a non-empty batch");
    }
    const std::size_t d = m.n_visible(), k = m.n_hidden();
    GbRbmDeltas deltas;
    deltas.weights = Matrix2(d, k);
    deltas.hidden_bias.assign(k, 0.0);
    deltas.visible_bias.assign(d, 0.0);

    std::vector<double> h_state(k), v_chain(d);
    for (const auto& v0 : batch) {
        if (v0.size() != d) {
            throw std::invalid_argument("cd_update: sample length mismatch");
        }
        const std::vector<double> q0 = prob_h_given_v(m, v0);
        for (std::size_t j = 0; j < k; ++j) {
            h_state[j] = sample_bernoulli(q0[j], rng);
        }
        std::vector<double> qn;
        for (int step = 0; step < n_steps; ++step) {
            const std::vector<double> vp = prob_v_given_h(m, h_state);
            for (std::size_t i = 0; i < d; ++i) {
                if (m.mode == VisibleMode::binary) {
                    v_chain[i] = sample_bernoulli(vp[i], rng);
                } else {
                    const double s2 = m.visible_std[i] * m.visible_std[i];
                    v_chain[i] = sample_gaussian(vp[i], s2, rng);
                }
            }
            qn = prob_h_given_v(m, v_chain);
            if (step + 1 < n_steps) {
                for (std::size_t j = 0; j < k; ++j) {
                    h_state[j] = sample_bernoulli(qn[j], rng);
                }
            }
        }
        for (std::size_t i = 0; i < d; ++i) {
            const double s2 = m.visible_std[i] * m.visible_std[i];
            const double pos_v = v0[i] / s2;
            const double neg_v = v_chain[i] / s2;
            double* w_row = &deltas.weights.data[i * k];
            for (std::size_t j = 0; j < k; ++j) {
                w_row[j] += pos_v * q0[j] - neg_v * qn[j];
            }
            deltas.visible_bias[i] += v0[i] - v_chain[i];
        }
        for (std::size_t j = 0; j < k; ++j) {
            deltas.hidden_bias[j] += q0[j] - qn[j];
        }
    }

    const double scale = learning_rate / static_cast<double>(batch.size());
    for (double& w : deltas.weights.data) {
        w *= scale;
    }
    for (double& b : deltas.hidden_bias) {
        b *= scale;
    }
    for (double& c : deltas.visible_bias) {
        c *= scale;
    }
    return deltas;
}

void apply_deltas(GbRbm& m, const GbRbmDeltas& d) {
    for (std::size_t i = 0; i < m.weights.data.size(); ++i) {
        m.weights.data[i] += d.weights.data[i];
    }
    for (std::size_t j = 0; j < m.hidden_bias.size(); ++j) {
        m.hidden_bias[j] += d.hidden_bias[j];
    }
    for (std::size_t i = 0; i < m.visible_bias.size(); ++i) {
        m.visible_bias[i] += d.visible_bias[i];
    }
}

std::vector<double> joint_bruteforce(const GbRbm& m) {
    const std::size_t d = m.n_visible(), k = m.n_hidden();
    if (d + k > 20) {
        throw std::invalid_argument("joint_bruteforce: D + K exceeds enumeration bound 20");
    }
    const std::size_t n_states = std::size_t{1} << (d + k);
    std::vector<double> table(n_states);
    std::vector<double> v(d), h(k);
    double z = 0.0;
    for (std::size_t s = 0; s < n_states; ++s) {
        for (std::size_t i = 0; i < d; ++i) {
            v[i] = static_cast<double>((s >> i) & 1u);
        }
        for (std::size_t j = 0; j < k; ++j) {
            h[j] = static_cast<double>((s >> (d + j)) & 1u);
        }
        table[s] = std::exp(-energy_binary(m, v, h));
        z += table[s];
    }
    for (double& p : table) {
        p /= z;
    }
    return table;
}

}  // namespace dfl
