#pragma once

#include <cstdint>
#include <vector>

#include "spikemap/convert.hpp"

namespace spikemap {

struct FireResult {
    double output;   // integer-valued spike coefficient
    double v_after;  // membrane potential after reset
};

// Double-threshold binary firing with reset by threshold subtraction.
FireResult fire_double_threshold(double v, double theta_pos, double theta_neg);

// Augmented firing: the coefficient counts whole threshold multiples in v,
// optionally clamped to m_aug (kUnboundedAug = no clamp).
FireResult fire_augmented(double v, double theta_pos, double theta_neg, std::uint32_t m_aug);

// Per spiking layer: membrane potentials, cumulative signed spike-coefficient
// sums, and the running event count (nonzero outputs).
struct NeuronState {
    Tensor potentials;
    Tensor spike_sums;
    std::uint64_t events = 0;
};

struct SimulationTrace {
    std::size_t steps = 0;
    std::vector<Tensor> output_frames;                      // one per step
    std::vector<std::vector<std::uint64_t>> event_counts;   // per step, per layer (cumulative)
    std::vector<std::vector<Tensor>> rates;                 // per step, per spiking layer; may be empty
};

struct EventSummary {
    std::vector<std::uint64_t> per_layer;
    std::uint64_t total = 0;
};

EventSummary count_events(const SimulationTrace& trace);

// Owns the NeuronState of one simulation. The same analog input is injected
// into the first layer at every step; within a step, layers run in feedforward
// order so a spike crosses the whole network in one step.
class Simulator {
  public:
    Simulator(const SpikingNetwork& snn, Tensor input);

    // Advances one time step and returns the output layer's spike frame.
    const Tensor& step();

    std::size_t current_step() const { return t_; }
    const std::vector<NeuronState>& states() const { return states_; }

    // Signed cumulative rate N/t for one spiking layer (0-based among spiking layers).
    Tensor layer_rates(std::size_t spiking_layer) const;
    Tensor output_rates() const;

    std::uint64_t total_events() const;
    std::vector<std::uint64_t> events_per_layer() const;

  private:
    const SpikingNetwork& snn_;
    Tensor input_;
    std::vector<NeuronState> states_;        // one per spiking (weighted) layer
    std::vector<std::size_t> spiking_index_; // layer index -> state index (or npos)
    Tensor last_output_;
    std::size_t t_ = 0;
};

SimulationTrace simulate(const SpikingNetwork& snn, const Tensor& input, std::size_t steps,
                         bool record_rates = false);

}  // namespace spikemap
