#include "spikemap/pipeline.hpp"

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <random>
#include <sstream>

#include <json.hpp>

namespace spikemap {

namespace {

using nlohmann::json;
namespace fs = std::filesystem;

std::string canonical_config(const ExperimentConfig& config) {
    json j;
    j["method"] = config.method;
    j["t_max"] = config.t_max;
    j["checkpoints"] = config.checkpoints;
    j["m_aug"] = config.m_aug;
    j["bias_mode"] = config.bias_mode == BiasMode::Zero ? "zero" : "as-trained";
    j["loss_tolerances"] = config.loss_tolerances;
    j["seed"] = config.seed;
    j["weights"] = config.weights_path;
    j["dataset_csv"] = config.dataset_csv;
    j["dataset_images"] = config.dataset_images;
    j["dataset_labels"] = config.dataset_labels;
    j["gap_steps"] = config.gap_steps;
    return j.dump();
}

std::string hex16(std::uint64_t value) {
    char buf[17];
    std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(value));
    return buf;
}

std::string fmt(double v) { return json(v).dump(); }

}  // namespace

void ExperimentConfig::validate() const {
    if (method != "ter" && method != "aug") {
        throw ConfigError("method must be 'ter' or 'aug', got '" + method + "'");
    }
    if (t_max < 1) throw ConfigError("t_max must be at least 1");
    for (std::size_t t : checkpoints) {
        if (t < 1 || t > t_max) throw ConfigError("checkpoints must lie in [1, t_max]");
    }
    for (double tol : loss_tolerances) {
        if (tol < 0.0 || tol >= 1.0) throw ConfigError("loss tolerances must lie in [0, 1)");
    }
    if (method == "ter" && m_aug != kUnboundedAug) {
        throw ConfigError("m_aug applies only to the aug method");
    }
    if (weights_path.empty()) throw ConfigError("weights path is required");
    const bool has_csv = !dataset_csv.empty();
    const bool has_idx = !dataset_images.empty() && !dataset_labels.empty();
    if (has_csv == has_idx) {
        throw ConfigError("exactly one of dataset_csv or dataset_images+dataset_labels required");
    }
}

ExperimentConfig load_experiment_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open " + path);
    json j;
    try {
        in >> j;
    } catch (const json::exception& e) {
        throw ConfigError(path + ": invalid JSON: " + e.what());
    }
    ExperimentConfig config;
    config.method = j.value("method", "");
    config.t_max = j.value("t_max", std::size_t{1000});
    config.checkpoints = j.value("checkpoints", std::vector<std::size_t>{});
    config.m_aug = j.value("m_aug", kUnboundedAug);
    const std::string bias_mode = j.value("bias_mode", "as-trained");
    if (bias_mode == "zero") {
        config.bias_mode = BiasMode::Zero;
    } else if (bias_mode == "as-trained") {
        config.bias_mode = BiasMode::AsTrained;
    } else {
        throw ConfigError("bias_mode must be 'as-trained' or 'zero'");
    }
    config.loss_tolerances = j.value("loss_tolerances", std::vector<double>{0.01, 0.001, 0.0});
    config.seed = j.value("seed", std::uint64_t{0});
    config.weights_path = j.value("weights", "");
    config.dataset_csv = j.value("dataset_csv", "");
    config.dataset_images = j.value("dataset_images", "");
    config.dataset_labels = j.value("dataset_labels", "");
    config.gap_steps = j.value("gap_steps", std::size_t{1000});
    config.validate();
    return config;
}

std::uint64_t config_hash(const ExperimentConfig& config) {
    const std::string canonical = canonical_config(config);
    std::uint64_t hash = 0xcbf29ce484222325ULL;
    for (unsigned char c : canonical) {
        hash ^= c;
        hash *= 0x100000001b3ULL;
    }
    return hash;
}

PipelineArtifacts run_pipeline(const ExperimentConfig& config, const std::string& out_dir) {
    config.validate();
    fs::create_directories(out_dir);
    PipelineArtifacts artifacts{
        (fs::path(out_dir) / "sweep.csv").string(),
        (fs::path(out_dir) / "latency.json").string(),
        (fs::path(out_dir) / "similarity.csv").string(),
        (fs::path(out_dir) / "gap.json").string(),
    };
    const std::string stamp =
        "config_hash=" + hex16(config_hash(config)) + " seed=" + std::to_string(config.seed);

    std::vector<std::string> written;
    auto cleanup_and_rethrow = [&](const std::string& stage, const std::exception& e) -> void {
        for (const auto& path : written) {
            std::error_code ec;
            fs::remove(path, ec);
        }
        throw IoError("pipeline stage '" + stage + "' failed: " + e.what());
    };

    std::string stage = "load";
    try {
        LabeledDataset dataset = config.dataset_csv.empty()
                                     ? load_idx_dataset(config.dataset_images, config.dataset_labels)
                                     : load_csv_dataset(config.dataset_csv);
        AnnNetwork ann = load_network(config.weights_path);
        if (config.bias_mode == BiasMode::Zero) {
            for (auto& layer : ann.layers) {
                if (auto* dense = std::get_if<DenseLayer>(&layer)) {
                    dense->bias = Tensor();
                } else if (auto* conv = std::get_if<ConvLayer>(&layer)) {
                    conv->bias = Tensor();
                }
            }
        }

        stage = "convert";
        SpikingNetwork snn;
        if (config.method == "ter") {
            snn = ter_map(ann, compute_scaling_factors(record_dataset_stats(ann, dataset)));
        } else {
            snn = aug_map(ann);
            if (config.m_aug != kUnboundedAug) snn = set_aug_bound(snn, config.m_aug);
        }
        const double ann_accuracy = dataset_accuracy(ann, dataset);

        stage = "sweep";
        const std::vector<std::size_t> checkpoints =
            config.checkpoints.empty() ? default_checkpoints(config.t_max) : config.checkpoints;
        SweepResult sweep = error_vs_steps(snn, dataset, config.t_max, checkpoints);
        sweep.method = config.method;
        {
            std::ofstream out(artifacts.sweep_csv);
            if (!out) throw IoError("cannot write " + artifacts.sweep_csv);
            written.push_back(artifacts.sweep_csv);
            out << "# " << stamp << "\n";
            out << "T,error,events\n";
            for (const auto& point : sweep.points) {
                out << point.steps << "," << fmt(point.error_rate) << "," << point.total_events
                    << "\n";
            }
        }

        stage = "latency";
        {
            json doc;
            doc["config_hash"] = hex16(config_hash(config));
            doc["seed"] = config.seed;
            doc["ann_accuracy"] = ann_accuracy;
            json per_tolerance = json::array();
            for (double tol : config.loss_tolerances) {
                const LatencyResult latency = latency_to_criterion(sweep, ann_accuracy, tol);
                json entry;
                entry["tolerance"] = tol;
                if (latency.t_star) {
                    entry["t_star"] = *latency.t_star;
                    entry["events"] = latency.events_at_t_star;
                } else {
                    entry["t_star"] = nullptr;
                }
                per_tolerance.push_back(std::move(entry));
            }
            doc["latency"] = std::move(per_tolerance);
            std::ofstream out(artifacts.latency_json);
            if (!out) throw IoError("cannot write " + artifacts.latency_json);
            written.push_back(artifacts.latency_json);
            out << doc.dump(2) << "\n";
        }

        stage = "similarity";
        {
            const auto curve = similarity_curve(ann, snn, dataset, checkpoints);
            std::ofstream out(artifacts.similarity_csv);
            if (!out) throw IoError("cannot write " + artifacts.similarity_csv);
            written.push_back(artifacts.similarity_csv);
            out << "# " << stamp << "\n";
            out << "T,mean_similarity,skipped\n";
            for (const auto& point : curve) {
                out << point.steps << "," << fmt(point.mean_similarity) << "," << point.skipped
                    << "\n";
            }
        }

        stage = "gap";
        {
            const ApproximationReport report =
                approximation_gap(ann, snn, dataset.inputs[0], config.gap_steps);
            json doc;
            doc["config_hash"] = hex16(config_hash(config));
            doc["seed"] = config.seed;
            doc["steps"] = report.steps;
            json layers = json::array();
            for (const auto& layer : report.layers) {
                layers.push_back({{"max_abs_gap", layer.max_abs_gap},
                                  {"residual_bound", layer.residual_bound},
                                  {"max_residual", layer.max_residual},
                                  {"weight_chain_factor", layer.weight_chain_factor}});
            }
            doc["layers"] = std::move(layers);
            std::ofstream out(artifacts.gap_json);
            if (!out) throw IoError("cannot write " + artifacts.gap_json);
            written.push_back(artifacts.gap_json);
            out << doc.dump(2) << "\n";
        }
    } catch (const std::exception& e) {
        cleanup_and_rethrow(stage, e);
    }
    return artifacts;
}

LabeledDataset make_blobs(std::size_t classes, std::size_t features, std::size_t samples,
                          double separation, double sigma, std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    auto unit = [&rng]() { return static_cast<double>(rng() >> 11) * 0x1.0p-53; };
    // Box-Muller keeps draws platform independent.
    auto gaussian = [&]() {
        const double u1 = std::max(unit(), 1e-300);
        const double u2 = unit();
        return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * M_PI * u2);
    };

    // Axis-aligned centers (+/- separation along distinct coordinates) keep every
    // pair at distance >= separation * sqrt(2), independent of the seed.
    std::vector<Tensor> centers;
    for (std::size_t c = 0; c < classes; ++c) {
        Tensor center = Tensor::zeros({features});
        const double sign = (c / features) % 2 == 0 ? 1.0 : -1.0;
        center[c % features] = sign * separation;
        centers.push_back(std::move(center));
    }

    LabeledDataset dataset;
    for (std::size_t i = 0; i < samples; ++i) {
        const std::size_t label = i % classes;
        Tensor point = centers[label];
        for (double& v : point.raw()) v += sigma * gaussian();
        dataset.inputs.push_back(std::move(point));
        dataset.labels.push_back(static_cast<int>(label));
    }
    return dataset;
}

}  // namespace spikemap
