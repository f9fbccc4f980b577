#pragma once

#include <string>
#include <vector>

#include "spikemap/analysis.hpp"
#include "spikemap/io.hpp"

namespace spikemap {

enum class BiasMode { AsTrained, Zero };

struct ExperimentConfig {
    std::string method;                   // "ter" | "aug"
    std::size_t t_max = 1000;
    std::vector<std::size_t> checkpoints;  // empty == default geometric grid
    std::uint32_t m_aug = kUnboundedAug;
    BiasMode bias_mode = BiasMode::AsTrained;
    std::vector<double> loss_tolerances = {0.01, 0.001, 0.0};
    std::uint64_t seed = 0;
    std::string weights_path;
    std::string dataset_csv;     // either this ...
    std::string dataset_images;  // ... or this pair
    std::string dataset_labels;
    std::size_t gap_steps = 1000;

    void validate() const;
};

ExperimentConfig load_experiment_config(const std::string& path);

// FNV-1a over the canonical serialized config; embedded in every artifact.
std::uint64_t config_hash(const ExperimentConfig& config);

struct PipelineArtifacts {
    std::string sweep_csv;
    std::string latency_json;
    std::string similarity_csv;
    std::string gap_json;
};

// train -> convert -> simulate -> sweep, emitting CSV/JSON artifacts into
// out_dir. Any stage failure removes partial artifacts and rethrows with the
// stage name prefixed.
PipelineArtifacts run_pipeline(const ExperimentConfig& config, const std::string& out_dir);

// Well-separated Gaussian blobs, one per class, for desk-scale experiments.
LabeledDataset make_blobs(std::size_t classes, std::size_t features, std::size_t samples,
                          double separation, double sigma, std::uint64_t seed);

}  // namespace spikemap
