#pragma once

#include <optional>
#include <string>
#include <vector>

#include "spikemap/engine.hpp"

namespace spikemap {

double firing_rate(double spike_sum, std::size_t steps);

// Argmax over signed rates; ties go to the lowest index.
std::size_t classify(const Tensor& rates);

// Throws NumericError when either vector is zero.
double cosine_similarity(const Tensor& x, const Tensor& y);

struct SweepPoint {
    std::size_t steps = 0;
    double error_rate = 0.0;
    std::uint64_t total_events = 0;
};

struct SweepResult {
    std::vector<SweepPoint> points;
    std::string method;
    std::string network_id;
    std::string dataset_id;
    std::uint32_t m_aug = kUnboundedAug;
};

// Geometric {1,2,5}*10^k grid clipped to [1, t_max], always including t_max.
std::vector<std::size_t> default_checkpoints(std::size_t t_max);

SweepResult error_vs_steps(const SpikingNetwork& snn, const LabeledDataset& dataset,
                           std::size_t t_max, const std::vector<std::size_t>& checkpoints);

struct LatencyResult {
    std::optional<std::size_t> t_star;  // nullopt == criterion never reached
    std::uint64_t events_at_t_star = 0;
};

LatencyResult latency_to_criterion(const SweepResult& sweep, double ann_accuracy,
                                   double loss_tolerance);

struct LayerGap {
    double max_abs_gap = 0.0;        // max_i |z_i/(alpha*theta_P)^l - r_i(T)|
    double residual_bound = 0.0;     // 1/T reference from the single-layer bound
    double max_residual = 0.0;       // max fractional part of V/theta at T, in [0,1)
    double weight_chain_factor = 0.0;  // accumulated max-row-sum / theta_P product
};

struct ApproximationReport {
    std::vector<LayerGap> layers;
    std::size_t steps = 0;
};

ApproximationReport approximation_gap(const AnnNetwork& ann, const SpikingNetwork& snn,
                                      const Tensor& input, std::size_t steps);

struct SimilarityPoint {
    std::size_t steps = 0;
    double mean_similarity = 0.0;
    std::size_t skipped = 0;  // samples with a zero rate vector at this checkpoint
};

std::vector<SimilarityPoint> similarity_curve(const AnnNetwork& ann, const SpikingNetwork& snn,
                                              const LabeledDataset& dataset,
                                              const std::vector<std::size_t>& checkpoints);

}  // namespace spikemap
