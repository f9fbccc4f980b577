#pragma once

#include <cstdint>
#include <optional>
#include <variant>
#include <vector>

#include "spikemap/tensor.hpp"

namespace spikemap {

struct DenseLayer {
    Tensor weights;  // out x in
    Tensor bias;     // empty == no bias
};

struct ConvLayer {
    Tensor kernels;  // F x C x k x k
    Tensor bias;     // empty == no bias
    std::size_t stride = 1;
    std::size_t padding = 0;
};

struct AvgPoolLayer {
    std::size_t window = 2;
    std::size_t stride = 2;
};

struct ActivationLayer {
    double alpha_pos = 1.0;
    double alpha_neg = 0.01;
};

using LayerSpec = std::variant<DenseLayer, ConvLayer, AvgPoolLayer, ActivationLayer>;

struct AnnNetwork {
    std::vector<LayerSpec> layers;

    std::size_t weighted_layer_count() const;
    // Throws DimensionError/ConfigError if layer shapes do not compose, an
    // activation slope is invalid, or the final layer is not Dense.
    void validate(const std::vector<std::size_t>& input_shape) const;
};

double leaky_relu(double x, double alpha_pos, double alpha_neg);

// Per weighted layer: max |z| over a dataset pass and max |w| over entries.
// z is the post-activation output when the weighted layer is followed by an
// Activation layer, the raw output otherwise (logit layer).
struct ActivationRecord {
    std::vector<double> max_output;
    std::vector<double> max_weight;
};

struct LabeledDataset {
    std::vector<Tensor> inputs;
    std::vector<int> labels;

    std::size_t size() const { return inputs.size(); }
};

// Forward pass. If record is non-null, running maxima are merged into it.
// If activations is non-null, the per-weighted-layer z tensors are stored.
Tensor forward(const AnnNetwork& net, const Tensor& input, ActivationRecord* record = nullptr,
               std::vector<Tensor>* activations = nullptr);

ActivationRecord record_dataset_stats(const AnnNetwork& net, const LabeledDataset& dataset);

struct TrainConfig {
    std::size_t epochs = 10;
    double lr = 0.05;
    std::uint64_t seed = 0;
    bool zero_bias = false;
};

// Plain SGD with softmax cross-entropy on the logits. Deterministic given the
// seed. Throws NumericError on a non-finite loss.
AnnNetwork train(AnnNetwork net, const LabeledDataset& dataset, const TrainConfig& config);

// Glorot-style uniform init in +-sqrt(6/(fan_in+fan_out)), seeded.
AnnNetwork init_mlp(const std::vector<std::size_t>& layer_sizes, double alpha_pos,
                    double alpha_neg, std::uint64_t seed, bool zero_bias = false);

double softmax_cross_entropy(const Tensor& logits, int label);

double dataset_loss(const AnnNetwork& net, const LabeledDataset& dataset);

double dataset_accuracy(const AnnNetwork& net, const LabeledDataset& dataset);

}  // namespace spikemap
