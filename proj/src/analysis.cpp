#include "spikemap/analysis.hpp"

#include <algorithm>
#include <cmath>

namespace spikemap {

double firing_rate(double spike_sum, std::size_t steps) {
    return spike_sum / static_cast<double>(steps);
}

std::size_t classify(const Tensor& rates) {
    std::size_t best = 0;
    for (std::size_t i = 1; i < rates.size(); ++i) {
        if (rates[i] > rates[best]) best = i;
    }
    return best;
}

double cosine_similarity(const Tensor& x, const Tensor& y) {
    if (x.size() != y.size()) {
        throw DimensionError("cosine_similarity: length mismatch " + shape_to_string(x.shape()) +
                             " vs " + shape_to_string(y.shape()));
    }
    double dot = 0.0, nx = 0.0, ny = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        dot += x[i] * y[i];
        nx += x[i] * x[i];
        ny += y[i] * y[i];
    }
    if (nx == 0.0 || ny == 0.0) {
        throw NumericError("cosine_similarity undefined for a zero vector");
    }
    return dot / (std::sqrt(nx) * std::sqrt(ny));
}

std::vector<std::size_t> default_checkpoints(std::size_t t_max) {
    std::vector<std::size_t> grid;
    for (std::size_t base = 1; base <= t_max; base *= 10) {
        for (std::size_t m : {1, 2, 5}) {
            const std::size_t t = base * m;
            if (t <= t_max) grid.push_back(t);
        }
        if (base > t_max / 10) break;
    }
    if (grid.empty() || grid.back() != t_max) grid.push_back(t_max);
    return grid;
}

SweepResult error_vs_steps(const SpikingNetwork& snn, const LabeledDataset& dataset,
                           std::size_t t_max, const std::vector<std::size_t>& checkpoints) {
    for (std::size_t t : checkpoints) {
        if (t < 1 || t > t_max) throw ConfigError("checkpoint outside [1, t_max]");
    }
    std::vector<std::size_t> sorted = checkpoints;
    std::sort(sorted.begin(), sorted.end());

    SweepResult result;
    for (std::size_t t : sorted) result.points.push_back({t, 0.0, 0});

    std::vector<std::size_t> wrong(sorted.size(), 0);
    for (std::size_t s = 0; s < dataset.size(); ++s) {
        Simulator sim(snn, dataset.inputs[s]);
        std::size_t next = 0;
        for (std::size_t t = 1; t <= sorted.back(); ++t) {
            sim.step();
            while (next < sorted.size() && sorted[next] == t) {
                const std::size_t predicted = classify(sim.output_rates());
                if (static_cast<int>(predicted) != dataset.labels[s]) ++wrong[next];
                result.points[next].total_events += sim.total_events();
                ++next;
            }
        }
    }
    for (std::size_t i = 0; i < sorted.size(); ++i) {
        result.points[i].error_rate =
            static_cast<double>(wrong[i]) / static_cast<double>(dataset.size());
    }
    return result;
}

LatencyResult latency_to_criterion(const SweepResult& sweep, double ann_accuracy,
                                   double loss_tolerance) {
    if (loss_tolerance < 0.0 || loss_tolerance >= 1.0) {
        throw ConfigError("loss tolerance must lie in [0, 1)");
    }
    for (const auto& point : sweep.points) {
        const double accuracy = 1.0 - point.error_rate;
        if (accuracy >= ann_accuracy - loss_tolerance) {
            return {point.steps, point.total_events};
        }
    }
    return {std::nullopt, 0};
}

namespace {

// Per weighted layer of the ANN: the slope of the directly following
// activation, 1.0 for the bare logit layer.
std::vector<double> activation_slopes(const AnnNetwork& ann) {
    std::vector<double> slopes;
    for (std::size_t i = 0; i < ann.layers.size(); ++i) {
        const bool weighted = std::holds_alternative<DenseLayer>(ann.layers[i]) ||
                              std::holds_alternative<ConvLayer>(ann.layers[i]);
        if (!weighted) continue;
        double alpha = 1.0;
        if (i + 1 < ann.layers.size()) {
            if (const auto* act = std::get_if<ActivationLayer>(&ann.layers[i + 1])) {
                alpha = act->alpha_pos;
            }
        }
        slopes.push_back(alpha);
    }
    return slopes;
}

double max_row_sum(const SpikingLayer& layer) {
    if (const auto* dense = std::get_if<DenseLayer>(&layer.op)) {
        const std::size_t out = dense->weights.shape()[0];
        const std::size_t in = dense->weights.shape()[1];
        double best = 0.0;
        for (std::size_t i = 0; i < out; ++i) {
            double row = 0.0;
            for (std::size_t j = 0; j < in; ++j) row += dense->weights[i * in + j];
            best = std::max(best, std::fabs(row));
        }
        return best;
    }
    const auto& conv = std::get<ConvLayer>(layer.op);
    const std::size_t F = conv.kernels.shape()[0];
    const std::size_t per_filter = conv.kernels.size() / F;
    double best = 0.0;
    for (std::size_t f = 0; f < F; ++f) {
        double sum = 0.0;
        for (std::size_t j = 0; j < per_filter; ++j) sum += conv.kernels[f * per_filter + j];
        best = std::max(best, std::fabs(sum));
    }
    return best;
}

}  // namespace

ApproximationReport approximation_gap(const AnnNetwork& ann, const SpikingNetwork& snn,
                                      const Tensor& input, std::size_t steps) {
    std::vector<Tensor> activations;
    forward(ann, input, nullptr, &activations);

    Simulator sim(snn, input);
    for (std::size_t t = 0; t < steps; ++t) sim.step();

    const std::vector<double> slopes = activation_slopes(ann);
    ApproximationReport report;
    report.steps = steps;

    double scale = 1.0;
    double chain = 1.0;  // running product of max-row-sum / theta_P
    std::size_t spiking = 0;
    for (const auto& layer : snn.layers) {
        if (!layer.neuron) continue;
        const NeuronParams& p = *layer.neuron;
        scale *= slopes[spiking] * p.theta_pos;

        LayerGap gap;
        gap.residual_bound = 1.0 / static_cast<double>(steps);
        const Tensor rates = sim.layer_rates(spiking);
        const Tensor& z = activations[spiking];
        for (std::size_t j = 0; j < z.size(); ++j) {
            gap.max_abs_gap = std::max(gap.max_abs_gap, std::fabs(z[j] / scale - rates[j]));
        }
        const Tensor& potentials = sim.states()[spiking].potentials;
        for (double v : potentials.raw()) {
            const double frac = v >= 0.0 ? v / p.theta_pos : v / p.theta_neg;
            gap.max_residual = std::max(gap.max_residual, frac - std::floor(frac));
        }
        if (spiking > 0) chain *= max_row_sum(layer) / p.theta_pos;
        gap.weight_chain_factor = chain;
        report.layers.push_back(gap);
        ++spiking;
    }
    return report;
}

std::vector<SimilarityPoint> similarity_curve(const AnnNetwork& ann, const SpikingNetwork& snn,
                                              const LabeledDataset& dataset,
                                              const std::vector<std::size_t>& checkpoints) {
    std::vector<std::size_t> sorted = checkpoints;
    std::sort(sorted.begin(), sorted.end());

    std::vector<SimilarityPoint> curve;
    for (std::size_t t : sorted) curve.push_back({t, 0.0, 0});
    std::vector<double> sums(sorted.size(), 0.0);
    std::vector<std::size_t> counts(sorted.size(), 0);

    for (std::size_t s = 0; s < dataset.size(); ++s) {
        const Tensor logits = forward(ann, dataset.inputs[s]);
        Simulator sim(snn, dataset.inputs[s]);
        std::size_t next = 0;
        for (std::size_t t = 1; t <= sorted.back(); ++t) {
            sim.step();
            while (next < sorted.size() && sorted[next] == t) {
                const Tensor rates = sim.output_rates();
                bool zero = true;
                for (double v : rates.raw()) {
                    if (v != 0.0) { zero = false; break; }
                }
                if (zero) {
                    ++curve[next].skipped;
                } else {
                    sums[next] += cosine_similarity(rates, logits);
                    ++counts[next];
                }
                ++next;
            }
        }
    }
    for (std::size_t i = 0; i < sorted.size(); ++i) {
        curve[i].mean_similarity = counts[i] > 0 ? sums[i] / static_cast<double>(counts[i]) : 0.0;
    }
    return curve;
}

}  // namespace spikemap
