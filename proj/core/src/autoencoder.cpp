#include "dfl/autoencoder.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace dfl {

namespace {

// z = W^T x + b, then the activation.
std::vector<double> layer_forward(const DenseLayer& l, std::span<const double> x) {
    const std::size_t in = l.weights.rows, out = l.weights.cols;
    if (x.size() != in) {
        throw std::invalid_argument("dense layer: input length mismatch");
    }
    std::vector<double> z(l.bias);
    for (std::size_t i = 0; i < in; ++i) {
        if (x[i] == 0.0) {
            continue;
        }
        const double* w_row = &l.weights.data[i * out];
        for (std::size_t j = 0; j < out; ++j) {
            z[j] += w_row[j] * x[i];
        }
    }
    if (l.act == Activation::sigmoid) {
        for (double& v : z) {
            v = sigmoid(v);
        }
    }
    return z;
}

std::vector<double> scale_by_inv_std2(std::span<const double> x,
                                      const std::vector<double>& sd) {
    std::vector<double> out(x.begin(), x.end());
    for (std::size_t i = 0; i < out.size(); ++i) {
        out[i] /= sd[i] * sd[i];
    }
    return out;
}

}  // namespace

std::vector<double> encode(const AutoencoderNet& net, std::span<const double> x) {
    if (x.size() != net.input_dim()) {
        throw std::invalid_argument("encode: input length mismatch");
    }
    std::vector<double> a = scale_by_inv_std2(x, net.input_std);
    for (const auto& layer : net.encoder) {
        a = layer_forward(layer, a);
    }
    return a;
}

std::vector<double> decode(const AutoencoderNet& net, std::span<const double> code) {
    if (code.size() != net.code_dim()) {
        throw std::invalid_argument("decode: code length mismatch");
    }
    std::vector<double> a(code.begin(), code.end());
    for (std::size_t l = 0; l < net.decoder.size(); ++l) {
        const bool last = l + 1 == net.decoder.size();
        if (!last) {
            a = layer_forward(net.decoder[l], a);
            continue;
        }
        // Final layer: linear, pre-activation scaled by sigma_j^2.
        const auto& layer = net.decoder[l];
        std::vector<double> z = layer.bias;
        const std::size_t in = layer.weights.rows, out = layer.weights.cols;
        if (a.size() != in) {
            throw std::invalid_argument("decode: final layer length mismatch");
        }
        for (std::size_t i = 0; i < in; ++i) {
            const double* w_row = &layer.weights.data[i * out];
            for (std::size_t j = 0; j < out; ++j) {
                z[j] += w_row[j] * a[i] * net.input_std[j] * net.input_std[j];
            }
        }
        a = std::move(z);
    }
    return a;
}

double mse(const AutoencoderNet& net, const std::vector<std::vector<double>>& data) {
    if (data.empty()) {
        throw std::invalid_argument("mse: empty dataset");
    }
    double total = 0.0;
    for (const auto& v : data) {
        const std::vector<double> r = decode(net, encode(net, v));
        for (std::size_t i = 0; i < v.size(); ++i) {
            const double d = r[i] - v[i];
            total += d * d;
        }
    }
    return total / static_cast<double>(data.size());
}

namespace {

AeGradients zero_gradients(const AutoencoderNet& net) {
    AeGradients g;
    for (const auto& l : net.encoder) {
        g.enc_w.emplace_back(l.weights.rows, l.weights.cols);
        g.enc_b.emplace_back(l.bias.size(), 0.0);
    }
    for (const auto& l : net.decoder) {
        g.dec_w.emplace_back(l.weights.rows, l.weights.cols);
        g.dec_b.emplace_back(l.bias.size(), 0.0);
    }
    return g;
}

// d(loss)/d(input of layer) from d(loss)/d(z) and accumulated W/b grads.
void backprop_dense(const DenseLayer& l, std::span<const double> input,
                    std::span<const double> dz, Matrix2& gw, std::vector<double>& gb,
                    std::vector<double>& dinput) {
    const std::size_t in = l.weights.rows, out = l.weights.cols;
    for (std::size_t j = 0; j < out; ++j) {
        gb[j] += dz[j];
    }
    dinput.assign(in, 0.0);
    for (std::size_t i = 0; i < in; ++i) {
        const double* w_row = &l.weights.data[i * out];
        double* gw_row = &gw.data[i * out];
        double acc = 0.0;
        for (std::size_t j = 0; j < out; ++j) {
            gw_row[j] += input[i] * dz[j];
            acc += w_row[j] * dz[j];
        }
        dinput[i] = acc;
    }
}

}  // namespace

std::pair<double, AeGradients> mse_with_gradients(
    const AutoencoderNet& net, const std::vector<std::vector<double>>& data) {
    if (data.empty()) {
        throw std::invalid_argument("mse_with_gradients: empty batch");
    }
    AeGradients g = zero_gradients(net);
    const std::size_t n_enc = net.encoder.size(), n_dec = net.decoder.size();
    double loss = 0.0;
    const double inv_s = 1.0 / static_cast<double>(data.size());

    for (const auto& x : data) {
        // Forward, keeping activations. enc_act[0] is the scaled input.
        std::vector<std::vector<double>> enc_act(n_enc + 1), dec_act(n_dec + 1);
        enc_act[0] = scale_by_inv_std2(x, net.input_std);
        for (std::size_t l = 0; l < n_enc; ++l) {
            enc_act[l + 1] = layer_forward(net.encoder[l], enc_act[l]);
        }
        dec_act[0] = enc_act[n_enc];
        for (std::size_t l = 0; l + 1 < n_dec; ++l) {
            dec_act[l + 1] = layer_forward(net.decoder[l], dec_act[l]);
        }
        {
            const auto& layer = net.decoder[n_dec - 1];
            std::vector<double> z = layer.bias;
            const std::size_t in = layer.weights.rows, out = layer.weights.cols;
            for (std::size_t i = 0; i < in; ++i) {
                const double* w_row = &layer.weights.data[i * out];
                const double ai = dec_act[n_dec - 1][i];
                for (std::size_t j = 0; j < out; ++j) {
                    z[j] += w_row[j] * ai * net.input_std[j] * net.input_std[j];
                }
            }
            dec_act[n_dec] = std::move(z);
        }

        // Loss and output delta.
        std::vector<double> dz(dec_act[n_dec].size());
        for (std::size_t j = 0; j < dz.size(); ++j) {
            const double e = dec_act[n_dec][j] - x[j];
            loss += e * e * inv_s;
            dz[j] = 2.0 * e * inv_s;  // linear output
        }

        // Final decoder layer, with the sigma^2 factor on the pre-activation.
        std::vector<double> dinput;
        {
            const auto& layer = net.decoder[n_dec - 1];
            const std::size_t in = layer.weights.rows, out = layer.weights.cols;
            const auto& input = dec_act[n_dec - 1];
            for (std::size_t j = 0; j < out; ++j) {
                g.dec_b[n_dec - 1][j] += dz[j];
            }
            dinput.assign(in, 0.0);
            for (std::size_t i = 0; i < in; ++i) {
                const double* w_row = &layer.weights.data[i * out];
                double* gw_row = &g.dec_w[n_dec - 1].data[i * out];
                double acc = 0.0;
                for (std::size_t j = 0; j < out; ++j) {
                    const double s2 = net.input_std[j] * net.input_std[j];
                    gw_row[j] += input[i] * dz[j] * s2;
                    acc += w_row[j] * dz[j] * s2;
                }
                dinput[i] = acc;
            }
        }

        // Remaining decoder layers (all sigmoid).
        for (std::size_t l = n_dec - 1; l-- > 0;) {
            std::vector<double> dzl(dec_act[l + 1].size());
            for (std::size_t j = 0; j < dzl.size(); ++j) {
                const double a = dec_act[l + 1][j];
                dzl[j] = dinput[j] * a * (1.0 - a);
            }
            backprop_dense(net.decoder[l], dec_act[l], dzl, g.dec_w[l], g.dec_b[l],
                           dinput);
        }

        // Encoder layers (all sigmoid).
        for (std::size_t l = n_enc; l-- > 0;) {
            std::vector<double> dzl(enc_act[l + 1].size());
            for (std::size_t j = 0; j < dzl.size(); ++j) {
                const double a = enc_act[l + 1][j];
                dzl[j] = dinput[j] * a * (1.0 - a);
            }
            backprop_dense(net.encoder[l], enc_act[l], dzl, g.enc_w[l], g.enc_b[l],
                           dinput);
        }
    }
    return {loss, std::move(g)};
}

void finetune(AutoencoderNet& net, const std::vector<std::vector<double>>& data,
              int epochs, double learning_rate, std::size_t batch_size, RngStream& rng) {
    if (epochs < 0) {
        throw std::invalid_argument("finetune: negative epochs");
    }
    if (data.empty()) {
        throw std::invalid_argument("finetune: empty dataset");
    }
    const std::size_t batch = std::max<std::size_t>(1, batch_size);
    std::vector<std::size_t> order(data.size());
    for (std::size_t i = 0; i < order.size(); ++i) {
        order[i] = i;
    }
    for (int epoch = 0; epoch < epochs; ++epoch) {
        for (std::size_t i = order.size() - 1; i > 0; --i) {
            const std::size_t j =
                static_cast<std::size_t>(rng.next_unit() * static_cast<double>(i + 1));
            std::swap(order[i], order[std::min(j, i)]);
        }
        for (std::size_t at = 0; at < order.size(); at += batch) {
            std::vector<std::vector<double>> mb;
            for (std::size_t b = at; b < std::min(at + batch, order.size()); ++b) {
                mb.push_back(data[order[b]]);
            }
            const auto [loss, g] = mse_with_gradients(net, mb);
            (void)loss;
            if (learning_rate == 0.0) {
                continue;
            }
            for (std::size_t l = 0; l < net.encoder.size(); ++l) {
                for (std::size_t e = 0; e < g.enc_w[l].data.size(); ++e) {
                    net.encoder[l].weights.data[e] -= learning_rate * g.enc_w[l].data[e];
                }
                for (std::size_t e = 0; e < g.enc_b[l].size(); ++e) {
                    net.encoder[l].bias[e] -= learning_rate * g.enc_b[l][e];
                }
            }
            for (std::size_t l = 0; l < net.decoder.size(); ++l) {
                for (std::size_t e = 0; e < g.dec_w[l].data.size(); ++e) {
                    net.decoder[l].weights.data[e] -= learning_rate * g.dec_w[l].data[e];
                }
                for (std::size_t e = 0; e < g.dec_b[l].size(); ++e) {
                    net.decoder[l].bias[e] -= learning_rate * g.dec_b[l][e];
                }
            }
        }
    }
}

SoftmaxHead make_head(std::size_t in_dim, std::size_t n_classes) {
    SoftmaxHead head;
    head.weights = Matrix2(in_dim, n_classes);
    head.bias.assign(n_classes, 0.0);
    return head;
}

namespace {

std::vector<double> head_logits(const SoftmaxHead& head, std::span<const double> f) {
    if (f.size() != head.in_dim()) {
        throw std::invalid_argument("softmax head: feature length mismatch");
    }
    std::vector<double> z(head.bias);
    const std::size_t in = head.in_dim(), out = head.n_classes();
    for (std::size_t i = 0; i < in; ++i) {
        if (f[i] == 0.0) {
            continue;
        }
        const double* w_row = &head.weights.data[i * out];
        for (std::size_t j = 0; j < out; ++j) {
            z[j] += w_row[j] * f[i];
        }
    }
    return z;
}

}  // namespace

std::pair<double, HeadGradients> cross_entropy_with_gradients(
    const SoftmaxHead& head, const std::vector<std::vector<double>>& feats,
    const std::vector<std::uint32_t>& labels) {
    if (feats.empty() || feats.size() != labels.size()) {
        throw std::invalid_argument("cross_entropy: batch size mismatch");
    }
    HeadGradients g;
    g.weights = Matrix2(head.in_dim(), head.n_classes());
    g.bias.assign(head.n_classes(), 0.0);
    double loss = 0.0;
    const double inv_s = 1.0 / static_cast<double>(feats.size());
    for (std::size_t s = 0; s < feats.size(); ++s) {
        if (labels[s] >= head.n_classes()) {
            throw std::invalid_argument("cross_entropy: label out of range");
        }
        const std::vector<double> p = softmax(head_logits(head, feats[s]));
        loss -= std::log(std::max(p[labels[s]], 1e-300)) * inv_s;
        for (std::size_t j = 0; j < p.size(); ++j) {
            const double dz = (p[j] - (j == labels[s] ? 1.0 : 0.0)) * inv_s;
            g.bias[j] += dz;
            for (std::size_t i = 0; i < head.in_dim(); ++i) {
                g.weights(i, j) += feats[s][i] * dz;
            }
        }
    }
    return {loss, std::move(g)};
}

double cross_entropy(const SoftmaxHead& head, const std::vector<std::vector<double>>& feats,
                     const std::vector<std::uint32_t>& labels) {
    return cross_entropy_with_gradients(head, feats, labels).first;
}

void train_softmax(SoftmaxHead& head, const std::vector<std::vector<double>>& feats,
                   const std::vector<std::uint32_t>& labels, int epochs,
                   double learning_rate, std::size_t batch_size, RngStream& rng,
                   std::vector<double>* train_acc_curve) {
    if (feats.size() != labels.size() || feats.empty()) {
        throw std::invalid_argument("train_softmax: batch size mismatch");
    }
    const std::size_t batch = std::max<std::size_t>(1, batch_size);
    std::vector<std::size_t> order(feats.size());
    for (std::size_t i = 0; i < order.size(); ++i) {
        order[i] = i;
    }
    for (int epoch = 0; epoch < epochs; ++epoch) {
        for (std::size_t i = order.size() - 1; i > 0; --i) {
            const std::size_t j =
                static_cast<std::size_t>(rng.next_unit() * static_cast<double>(i + 1));
            std::swap(order[i], order[std::min(j, i)]);
        }
        for (std::size_t at = 0; at < order.size(); at += batch) {
            std::vector<std::vector<double>> mb;
            std::vector<std::uint32_t> ml;
            for (std::size_t b = at; b < std::min(at + batch, order.size()); ++b) {
                mb.push_back(feats[order[b]]);
                ml.push_back(labels[order[b]]);
            }
            const auto [loss, g] = cross_entropy_with_gradients(head, mb, ml);
            (void)loss;
            if (learning_rate == 0.0) {
                continue;
            }
            for (std::size_t e = 0; e < g.weights.data.size(); ++e) {
                head.weights.data[e] -= learning_rate * g.weights.data[e];
            }
            for (std::size_t e = 0; e < g.bias.size(); ++e) {
                head.bias[e] -= learning_rate * g.bias[e];
            }
        }
        if (train_acc_curve != nullptr) {
            std::size_t correct = 0;
            for (std::size_t s = 0; s < feats.size(); ++s) {
                correct += predict(head, feats[s]) == labels[s] ? 1 : 0;
            }
            train_acc_curve->push_back(static_cast<double>(correct) /
                                       static_cast<double>(feats.size()));
        }
    }
}

std::uint32_t predict(const SoftmaxHead& head, std::span<const double> feature) {
    const std::vector<double> z = head_logits(head, feature);
    std::size_t best = 0;
    for (std::size_t j = 1; j < z.size(); ++j) {
        if (z[j] > z[best]) {
            best = j;
        }
    }
    return static_cast<std::uint32_t>(best);
}

AutoencoderNet init_from_pretraining(std::size_t input_dim,
                                     const std::vector<std::size_t>& hidden_sizes,
                                     const std::vector<std::vector<double>>& data,
                                     const PretrainSpec& pretrain, RngStream& rng) {
    if (hidden_sizes.empty()) {
        throw std::invalid_argument("init_from_pretraining: no hidden sizes");
    }
    AutoencoderNet net;
    net.input_std.assign(input_dim, 1.0);

    std::vector<std::vector<double>> activations = data;
    std::size_t in_dim = input_dim;
    std::vector<GbRbm> rbms;
    for (std::size_t l = 0; l < hidden_sizes.size(); ++l) {
        const std::size_t out_dim = hidden_sizes[l];
        // Layer 1 sees real-valued features; upper layers see probabilities.
        const VisibleMode mode = l == 0 ? VisibleMode::gaussian : VisibleMode::binary;
        GbRbm rbm = make_gbrbm(in_dim, out_dim, mode, rng);
        if (pretrain.enabled && pretrain.epochs > 0) {
            if (data.empty()) {
                throw std::invalid_argument(
                    "init_from_pretraining: pretraining enabled but no data given");
            }
            const std::size_t batch = std::max<std::size_t>(1, pretrain.batch_size);
            for (int epoch = 0; epoch < pretrain.epochs; ++epoch) {
                for (std::size_t at = 0; at < activations.size(); at += batch) {
                    std::vector<std::vector<double>> mb(
                        activations.begin() + static_cast<std::ptrdiff_t>(at),
                        activations.begin() +
                            static_cast<std::ptrdiff_t>(
                                std::min(at + batch, activations.size())));
                    apply_deltas(rbm, cd_update(rbm, mb, pretrain.cd_steps,
                                                pretrain.learning_rate, rng));
                }
            }
            for (auto& a : activations) {
                a = prob_h_given_v(rbm, a);
            }
        }
        rbms.push_back(std::move(rbm));
        in_dim = out_dim;
    }

    for (const auto& rbm : rbms) {
        DenseLayer enc;
        enc.weights = rbm.weights;
        enc.bias = rbm.hidden_bias;
        enc.act = Activation::sigmoid;
        net.encoder.push_back(std::move(enc));
    }
    for (std::size_t l = rbms.size(); l-- > 0;) {
        const auto& rbm = rbms[l];
        DenseLayer dec;
        dec.weights = Matrix2(rbm.n_hidden(), rbm.n_visible());
        for (std::size_t i = 0; i < rbm.n_visible(); ++i) {
            for (std::size_t j = 0; j < rbm.n_hidden(); ++j) {
                dec.weights(j, i) = rbm.weights(i, j);
            }
        }
        dec.bias = rbm.visible_bias;
        dec.act = l == 0 ? Activation::linear : Activation::sigmoid;
        net.decoder.push_back(std::move(dec));
    }
    return net;
}

}  // namespace dfl
