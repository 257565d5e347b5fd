#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

#include "chisq/losses.hpp"
#include "chisq/matrix.hpp"

namespace chisq {

struct TrainConfig {
    double learning_rate = 1e-4;
    std::size_t epochs = 20;
    std::size_t batch_size = 64;
    std::uint64_t seed = 0;
    LossKind loss_kind = LossKind::ChiSquare;
    double alpha = 0.1;

    void validate() const;
};

// Fully connected net: ReLU on hidden layers, except the penultimate layer
// which is linear (its activations are the 2-d scatter data and must span
// the whole plane), then affine into softmax. weights[l] is
// (dims[l] x dims[l+1]); a batch is (samples x dims[0]) and layers apply as
// X * W + b.
struct MlpModel {
    std::vector<std::size_t> layer_dims;
    std::vector<Matrix> weights;
    std::vector<std::vector<double>> biases;

    std::size_t n_layers() const { return weights.size(); }
    std::size_t input_dim() const { return layer_dims.front(); }
    std::size_t output_dim() const { return layer_dims.back(); }
    std::size_t penultimate_dim() const { return layer_dims[layer_dims.size() - 2]; }
};

// Glorot-uniform weights fully determined by seed; zero biases.
MlpModel init_model(const std::vector<std::size_t>& layer_dims, std::uint64_t seed);

struct ForwardResult {
    // activations[0] is the input batch, activations[l] the post-ReLU output
    // of layer l; activations.back() equals the logits.
    std::vector<Matrix> activations;
    Matrix logits;  // pre-softmax

    const Matrix& penultimate() const { return activations[activations.size() - 2]; }
};

ForwardResult forward(const MlpModel& model, const Matrix& batch);

struct Gradients {
    std::vector<Matrix> weights;
    std::vector<std::vector<double>> biases;
};

// Backprop given dL/dlogits (already divided by batch size if the loss is a
// batch mean). activations must come from forward() on the same model.
Gradients backward(const MlpModel& model, const std::vector<Matrix>& activations,
                   const Matrix& dl_dlogits);

void sgd_step(MlpModel& model, const Gradients& grads, double learning_rate);

// Checkpoint: line-oriented text, hex-float parameters, exact round trip.
// Format documented in README.
void save_checkpoint(const MlpModel& model, const std::string& path);
MlpModel load_checkpoint(const std::string& path);
void write_checkpoint(const MlpModel& model, std::ostream& out);
MlpModel read_checkpoint(std::istream& in);

}  // namespace chisq
