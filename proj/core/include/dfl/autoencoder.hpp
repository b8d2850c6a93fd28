#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "dfl/gbrbm.hpp"
#include "dfl/numerics.hpp"

namespace dfl {

enum class Activation { sigmoid, linear };

struct DenseLayer {
    Matrix2 weights;  // in x out
    std::vector<double> bias;
    Activation act = Activation::sigmoid;
};

/// Encoder/decoder pair unrolled from pretrained layers. The decoder is the
/// transposed mirror of the encoder at construction; fine-tuning updates
/// both sides independently. The first encoder layer divides its input by
/// input_std^2 and the last decoder layer multiplies its pre-activation by
/// input_std^2 per output unit, matching the Gaussian-visible conditionals.
struct AutoencoderNet {
    std::vector<DenseLayer> encoder;  // all sigmoid, last is the bottleneck
    std::vector<DenseLayer> decoder;  // sigmoid except the final linear layer
    std::vector<double> input_std;

    std::size_t input_dim() const { return encoder.front().weights.rows; }
    std::size_t code_dim() const { return encoder.back().weights.cols; }
};

std::vector<double> encode(const AutoencoderNet& net, std::span<const double> x);
std::vector<double> decode(const AutoencoderNet& net, std::span<const double> code);

/// Mean over samples of the squared reconstruction error (summed over
/// components).
double mse(const AutoencoderNet& net, const std::vector<std::vector<double>>& data);

struct AeGradients {
    std::vector<Matrix2> enc_w, dec_w;
    std::vector<std::vector<double>> enc_b, dec_b;
};

/// Objective value and exact analytic gradients of `mse` over `data`; the
/// unit used both by finetune and the finite-difference checks.
std::pair<double, AeGradients> mse_with_gradients(
    const AutoencoderNet& net, const std::vector<std::vector<double>>& data);

/// Mini-batch gradient descent on the reconstruction MSE. Shuffle order is
/// seeded; lr = 0 leaves the net untouched.
void finetune(AutoencoderNet& net, const std::vector<std::vector<double>>& data,
              int epochs, double learning_rate, std::size_t batch_size, RngStream& rng);

struct SoftmaxHead {
    Matrix2 weights;  // d x L
    std::vector<double> bias;

    std::size_t in_dim() const { return weights.rows; }
    std::size_t n_classes() const { return weights.cols; }
};

SoftmaxHead make_head(std::size_t in_dim, std::size_t n_classes);

struct HeadGradients {
    Matrix2 weights;
    std::vector<double> bias;
};

/// Mean cross-entropy of one-hot labels under the head's softmax, with
/// exact gradients.
std::pair<double, HeadGradients> cross_entropy_with_gradients(
    const SoftmaxHead& head, const std::vector<std::vector<double>>& feats,
    const std::vector<std::uint32_t>& labels);

double cross_entropy(const SoftmaxHead& head, const std::vector<std::vector<double>>& feats,
                     const std::vector<std::uint32_t>& labels);

/// Mini-batch gradient descent on the cross-entropy. When `train_acc_curve`
/// is non-null it receives the training accuracy after each epoch.
void train_softmax(SoftmaxHead& head, const std::vector<std::vector<double>>& feats,
                   const std::vector<std::uint32_t>& labels, int epochs,
                   double learning_rate, std::size_t batch_size, RngStream& rng,
                   std::vector<double>* train_acc_curve = nullptr);

/// Argmax class; ties break to the lowest index.
std::uint32_t predict(const SoftmaxHead& head, std::span<const double> feature);

struct PretrainSpec {
    bool enabled = true;
    int epochs = 10;
    double learning_rate = 0.05;
    int cd_steps = 1;
    std::size_t batch_size = 20;
};

/// Builds the encoder (sizes input_dim -> hidden_sizes...)
/// and its transposed decoder. When pretraining is enabled each layer's
/// parameters come from a GB-RBM trained on the previous layer's
/// activations over `data`; with it disabled (or 0 epochs) the layers keep
/// their Gaussian(0, 0.01^2) initialization.
AutoencoderNet init_from_pretraining(std::size_t input_dim,
                                     const std::vector<std::size_t>& hidden_sizes,
                                     const std::vector<std::vector<double>>& data,
                                     const PretrainSpec& pretrain, RngStream& rng);

}  // namespace dfl
