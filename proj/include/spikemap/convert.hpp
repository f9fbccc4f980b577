#pragma once

#include <cstdint>
#include <limits>
#include <optional>
#include <variant>
#include <vector>

#include "spikemap/ann.hpp"

namespace spikemap {

enum class NeuronKind { DoubleThresholdBinary, Augmented };

// Sentinel for an unbounded augmented spike coefficient.
inline constexpr std::uint32_t kUnboundedAug = 0;

struct NeuronParams {
    double theta_pos = 1.0;   // > 0
    double theta_neg = -1.0;  // < 0, may be -inf (negative branch never fires)
    NeuronKind kind = NeuronKind::DoubleThresholdBinary;
    std::uint32_t m_aug = kUnboundedAug;
};

// Mirrors the source AnnNetwork minus Activation layers: the firing scheme of
// each weighted layer replaces the activation. Pool layers carry no neuron.
struct SpikingLayer {
    std::variant<DenseLayer, ConvLayer, AvgPoolLayer> op;
    std::optional<NeuronParams> neuron;  // set iff op is Dense or Conv
};

struct SpikingNetwork {
    std::vector<SpikingLayer> layers;
    bool relu_warning = false;  // aug_map saw alpha_neg == 0 somewhere

    std::size_t weighted_layer_count() const;
};

struct ScalingFactors {
    std::vector<double> lambdas;
};

// Per-layer factor chain: post = max(max|w|, max|z|), lambda = post/pre.
ScalingFactors compute_scaling_factors(const ActivationRecord& record);

SpikingNetwork ter_map(const AnnNetwork& net, const ScalingFactors& factors);

SpikingNetwork aug_map(const AnnNetwork& net);

SpikingNetwork set_aug_bound(SpikingNetwork snn, std::uint32_t m_aug);

}  // namespace spikemap
