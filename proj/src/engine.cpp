#include "spikemap/engine.hpp"

#include <cmath>
#include <string>

namespace spikemap {

FireResult fire_double_threshold(double v, double theta_pos, double theta_neg) {
    if (v >= theta_pos) return {1.0, v - theta_pos};
    if (v <= theta_neg) return {-1.0, v - theta_neg};
    return {0.0, v};
}

FireResult fire_augmented(double v, double theta_pos, double theta_neg, std::uint32_t m_aug) {
    if (v >= theta_pos) {
        double o = std::floor(v / theta_pos);
        if (m_aug != kUnboundedAug) o = std::min(o, static_cast<double>(m_aug));
        return {o, v - o * theta_pos};
    }
    if (v <= theta_neg) {
        double o = -std::floor(v / theta_neg);
        if (m_aug != kUnboundedAug) o = std::max(o, -static_cast<double>(m_aug));
        return {o, v + o * theta_neg};
    }
    return {0.0, v};
}

Simulator::Simulator(const SpikingNetwork& snn, Tensor input)
    : snn_(snn), input_(std::move(input)) {
    spiking_index_.assign(snn_.layers.size(), static_cast<std::size_t>(-1));
    // Dry run to size the per-layer state tensors.
    Tensor x = input_;
    for (std::size_t i = 0; i < snn_.layers.size(); ++i) {
        const auto& layer = snn_.layers[i];
        if (const auto* dense = std::get_if<DenseLayer>(&layer.op)) {
            x = matvec(dense->weights, x, dense->bias);
        } else if (const auto* conv = std::get_if<ConvLayer>(&layer.op)) {
            x = conv2d(x, conv->kernels, conv->bias, conv->stride, conv->padding);
        } else {
            const auto& pool = std::get<AvgPoolLayer>(layer.op);
            x = avg_pool2d(x, pool.window, pool.stride);
            continue;
        }
        spiking_index_[i] = states_.size();
        states_.push_back({Tensor::zeros(x.shape()), Tensor::zeros(x.shape()), 0});
    }
    last_output_ = Tensor::zeros(x.shape());
}

const Tensor& Simulator::step() {
    ++t_;
    Tensor x = input_;
    for (std::size_t i = 0; i < snn_.layers.size(); ++i) {
        const auto& layer = snn_.layers[i];
        if (!layer.neuron) {
            const auto& pool = std::get<AvgPoolLayer>(layer.op);
            x = avg_pool2d(x, pool.window, pool.stride);
            continue;
        }

        Tensor drive;
        if (const auto* dense = std::get_if<DenseLayer>(&layer.op)) {
            drive = matvec(dense->weights, x, dense->bias);
        } else {
            const auto& conv = std::get<ConvLayer>(layer.op);
            drive = conv2d(x, conv.kernels, conv.bias, conv.stride, conv.padding);
        }

        NeuronState& state = states_[spiking_index_[i]];
        const NeuronParams& p = *layer.neuron;
        Tensor frame = Tensor::zeros(drive.shape());
        for (std::size_t j = 0; j < drive.size(); ++j) {
            double v = state.potentials[j] + drive[j];
            if (!std::isfinite(v)) {
                throw NumericError("non-finite membrane potential in layer " + std::to_string(i) +
                                   " at step " + std::to_string(t_));
            }
            FireResult fired = p.kind == NeuronKind::DoubleThresholdBinary
                                   ? fire_double_threshold(v, p.theta_pos, p.theta_neg)
                                   : fire_augmented(v, p.theta_pos, p.theta_neg, p.m_aug);
            state.potentials[j] = fired.v_after;
            if (fired.output != 0.0) {
                state.spike_sums[j] += fired.output;
                ++state.events;
            }
            frame[j] = fired.output;
        }
        x = std::move(frame);
    }
    last_output_ = std::move(x);
    return last_output_;
}

Tensor Simulator::layer_rates(std::size_t spiking_layer) const {
    const NeuronState& state = states_.at(spiking_layer);
    Tensor rates = state.spike_sums;
    const double inv_t = 1.0 / static_cast<double>(t_);
    for (double& v : rates.raw()) v *= inv_t;
    return rates;
}

Tensor Simulator::output_rates() const { return layer_rates(states_.size() - 1); }

std::uint64_t Simulator::total_events() const {
    std::uint64_t total = 0;
    for (const auto& state : states_) total += state.events;
    return total;
}

std::vector<std::uint64_t> Simulator::events_per_layer() const {
    std::vector<std::uint64_t> counts;
    counts.reserve(states_.size());
    for (const auto& state : states_) counts.push_back(state.events);
    return counts;
}

SimulationTrace simulate(const SpikingNetwork& snn, const Tensor& input, std::size_t steps,
                         bool record_rates) {
    if (steps < 1) throw ConfigError("simulate: step count must be at least 1");
    Simulator sim(snn, input);
    SimulationTrace trace;
    trace.steps = steps;
    trace.output_frames.reserve(steps);
    trace.event_counts.reserve(steps);
    for (std::size_t t = 0; t < steps; ++t) {
        trace.output_frames.push_back(sim.step());
        trace.event_counts.push_back(sim.events_per_layer());
        if (record_rates) {
            std::vector<Tensor> layer_rates;
            for (std::size_t l = 0; l < sim.states().size(); ++l) {
                layer_rates.push_back(sim.layer_rates(l));
            }
            trace.rates.push_back(std::move(layer_rates));
        }
    }
    return trace;
}

EventSummary count_events(const SimulationTrace& trace) {
    EventSummary summary;
    if (trace.event_counts.empty()) return summary;
    summary.per_layer = trace.event_counts.back();
    for (std::uint64_t n : summary.per_layer) summary.total += n;
    return summary;
}

}  // namespace spikemap
