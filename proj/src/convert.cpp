#include "spikemap/convert.hpp"

#include <algorithm>
#include <string>

namespace spikemap {

std::size_t SpikingNetwork::weighted_layer_count() const {
    std::size_t n = 0;
    for (const auto& layer : layers) {
        if (layer.neuron) ++n;
    }
    return n;
}

ScalingFactors compute_scaling_factors(const ActivationRecord& record) {
    if (record.max_weight.size() != record.max_output.size()) {
        throw ConfigError("activation record is inconsistent");
    }
    ScalingFactors factors;
    double pre_factor = 1.0;
    for (std::size_t i = 0; i < record.max_weight.size(); ++i) {
        const double post_factor = std::max(record.max_weight[i], record.max_output[i]);
        if (post_factor == 0.0) {
            throw NumericError("degenerate layer " + std::to_string(i) +
                               ": all weights and activations are zero");
        }
        factors.lambdas.push_back(post_factor / pre_factor);
        pre_factor = post_factor;
    }
    return factors;
}

SpikingNetwork ter_map(const AnnNetwork& net, const ScalingFactors& factors) {
    if (factors.lambdas.size() != net.weighted_layer_count()) {
        throw ConfigError("scaling factor count " + std::to_string(factors.lambdas.size()) +
                          " does not match weighted layer count " +
                          std::to_string(net.weighted_layer_count()));
    }
    SpikingNetwork snn;
    std::size_t w_idx = 0;
    for (const auto& layer : net.layers) {
        if (const auto* dense = std::get_if<DenseLayer>(&layer)) {
            const double lambda = factors.lambdas[w_idx++];
            snn.layers.push_back(
                {*dense, NeuronParams{lambda, -lambda, NeuronKind::DoubleThresholdBinary,
                                      kUnboundedAug}});
        } else if (const auto* conv = std::get_if<ConvLayer>(&layer)) {
            const double lambda = factors.lambdas[w_idx++];
            snn.layers.push_back(
                {*conv, NeuronParams{lambda, -lambda, NeuronKind::DoubleThresholdBinary,
                                     kUnboundedAug}});
        } else if (const auto* pool = std::get_if<AvgPoolLayer>(&layer)) {
            snn.layers.push_back({*pool, std::nullopt});
        }
        // Activation layers are absorbed into the firing scheme.
    }
    return snn;
}

SpikingNetwork aug_map(const AnnNetwork& net) {
    SpikingNetwork snn;
    for (std::size_t i = 0; i < net.layers.size(); ++i) {
        const auto& layer = net.layers[i];
        if (std::holds_alternative<AvgPoolLayer>(layer)) {
            snn.layers.push_back({std::get<AvgPoolLayer>(layer), std::nullopt});
            continue;
        }
        if (std::holds_alternative<ActivationLayer>(layer)) continue;

        // Thresholds come from the directly following activation; the bare
        // logit layer gets unit thresholds (argmax is scale invariant).
        NeuronParams params;
        params.kind = NeuronKind::Augmented;
        if (i + 1 < net.layers.size()) {
            if (const auto* act = std::get_if<ActivationLayer>(&net.layers[i + 1])) {
                params.theta_pos = 1.0 / act->alpha_pos;
                if (act->alpha_neg == 0.0) {
                    params.theta_neg = -std::numeric_limits<double>::infinity();
                    snn.relu_warning = true;
                } else {
                    params.theta_neg = -1.0 / act->alpha_neg;
                }
            }
        }
        if (const auto* dense = std::get_if<DenseLayer>(&layer)) {
            snn.layers.push_back({*dense, params});
        } else {
            snn.layers.push_back({std::get<ConvLayer>(layer), params});
        }
    }
    return snn;
}

SpikingNetwork set_aug_bound(SpikingNetwork snn, std::uint32_t m_aug) {
    if (m_aug == kUnboundedAug) {
        throw ConfigError("set_aug_bound: bound must be at least 1");
    }
    for (auto& layer : snn.layers) {
        if (!layer.neuron) continue;
        if (layer.neuron->kind != NeuronKind::Augmented) {
            throw ConfigError("set_aug_bound: network does not use augmented neurons");
        }
        layer.neuron->m_aug = m_aug;
    }
    return snn;
}

}  // namespace spikemap
