// spikemap: command-line workbench for ANN-to-SNN conversion experiments.
//
// Subcommands: train, convert, infer, sweep, similarity, gap, pipeline.
// Exit codes: 0 success, 2 configuration error, 3 I/O error, 4 numeric error.

#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "spikemap/analysis.hpp"
#include "spikemap/pipeline.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace spikemap;

namespace {

constexpr int kExitConfig = 2;
constexpr int kExitIo = 3;
constexpr int kExitNumeric = 4;

std::vector<std::size_t> parse_arch(const std::string& text) {
    std::vector<std::size_t> sizes;
    std::stringstream stream(text);
    std::string item;
    while (std::getline(stream, item, ',')) {
        try {
            sizes.push_back(std::stoul(item));
        } catch (const std::exception&) {
            throw ConfigError("invalid --arch entry '" + item + "'");
        }
    }
    if (sizes.size() < 2) throw ConfigError("--arch needs at least two comma-separated sizes");
    return sizes;
}

struct DatasetArgs {
    std::string csv;
    std::string images;
    std::string labels;

    LabeledDataset load() const {
        if (!csv.empty()) return load_csv_dataset(csv);
        if (!images.empty() && !labels.empty()) return load_idx_dataset(images, labels);
        throw ConfigError("provide --dataset or both --images and --labels");
    }
};

void add_dataset_options(CLI::App* cmd, DatasetArgs& args) {
    cmd->add_option("--dataset", args.csv, "CSV dataset (features...,label per row)");
    cmd->add_option("--images", args.images, "IDX image file");
    cmd->add_option("--labels", args.labels, "IDX label file");
}

BiasMode parse_bias_mode(const std::string& mode) {
    if (mode == "as-trained") return BiasMode::AsTrained;
    if (mode == "zero") return BiasMode::Zero;
    throw ConfigError("--bias-mode must be 'as-trained' or 'zero'");
}

AnnNetwork strip_biases(AnnNetwork net) {
    for (auto& layer : net.layers) {
        if (auto* dense = std::get_if<DenseLayer>(&layer)) {
            dense->bias = Tensor();
        } else if (auto* conv = std::get_if<ConvLayer>(&layer)) {
            conv->bias = Tensor();
        }
    }
    return net;
}

// Shared conversion path for convert/infer/sweep/similarity/gap.
struct ConvertArgs {
    std::string method = "aug";
    std::uint32_t m_aug = kUnboundedAug;
    std::string bias_mode = "as-trained";
};

void add_convert_options(CLI::App* cmd, ConvertArgs& args) {
    cmd->add_option("--method", args.method, "conversion method: ter | aug")
        ->check(CLI::IsMember({"ter", "aug"}));
    cmd->add_option("--maug", args.m_aug, "augmented spike coefficient bound (aug only; 0 = unbounded)");
    cmd->add_option("--bias-mode", args.bias_mode, "as-trained | zero")
        ->check(CLI::IsMember({"as-trained", "zero"}));
}

SpikingNetwork convert_network(const AnnNetwork& ann, const ConvertArgs& args,
                               const LabeledDataset* calibration) {
    if (args.method == "ter") {
        if (args.m_aug != kUnboundedAug) throw ConfigError("--maug applies only to --method aug");
        if (!calibration) {
            throw ConfigError("ter conversion needs a calibration dataset for the scaling factors");
        }
        return ter_map(ann, compute_scaling_factors(record_dataset_stats(ann, *calibration)));
    }
    SpikingNetwork snn = aug_map(ann);
    if (snn.relu_warning) {
        std::cerr << "warning: a layer has alpha_neg = 0; its negative threshold is -inf"
                  << " and negative potentials never fire\n";
    }
    if (args.m_aug != kUnboundedAug) snn = set_aug_bound(snn, args.m_aug);
    return snn;
}

void write_text(const std::string& path, const std::string& text) {
    std::ofstream out(path);
    if (!out) throw IoError("cannot write " + path);
    out << text;
}

std::string fmt(double v) { return json(v).dump(); }

int run(int argc, char** argv) {
    CLI::App app{"spikemap: ANN-to-SNN conversion and spiking inference workbench"};
    app.require_subcommand(1);

    // ---- train ----
    auto* train_cmd = app.add_subcommand("train", "Train a LeakyReLU MLP and save its weights");
    DatasetArgs train_data;
    add_dataset_options(train_cmd, train_data);
    std::string arch = "64,16,3";
    double alpha_pos = 1.0, alpha_neg = 0.01, lr = 0.05;
    std::size_t epochs = 30;
    std::uint64_t train_seed = 0;
    bool zero_bias = false;
    std::string train_out = "net.json";
    train_cmd->add_option("--arch", arch, "comma-separated layer sizes, e.g. 64,16,3");
    train_cmd->add_option("--alpha-pos", alpha_pos, "positive activation slope");
    train_cmd->add_option("--alpha-neg", alpha_neg, "negative activation slope");
    train_cmd->add_option("--epochs", epochs, "training epochs");
    train_cmd->add_option("--lr", lr, "SGD learning rate");
    train_cmd->add_option("--seed", train_seed, "RNG seed for init and shuffling");
    train_cmd->add_flag("--zero-bias", zero_bias, "train without bias parameters");
    train_cmd->add_option("--out", train_out, "output weight file");

    // ---- convert ----
    auto* convert_cmd = app.add_subcommand("convert", "Convert a trained network to a spiking one");
    std::string convert_weights, convert_out = "snn.json";
    ConvertArgs convert_args;
    DatasetArgs convert_data;
    convert_cmd->add_option("--weights", convert_weights, "trained ANN weight file")->required();
    add_convert_options(convert_cmd, convert_args);
    add_dataset_options(convert_cmd, convert_data);
    convert_cmd->add_option("--out", convert_out, "output spiking network file");

    // ---- infer ----
    auto* infer_cmd = app.add_subcommand("infer", "Run spiking inference and report accuracy/events");
    std::string infer_weights;
    ConvertArgs infer_args;
    DatasetArgs infer_data;
    std::size_t infer_steps = 1000;
    std::uint64_t infer_seed = 0;
    std::string infer_out;
    infer_cmd->add_option("--weights", infer_weights, "trained ANN weight file")->required();
    add_convert_options(infer_cmd, infer_args);
    add_dataset_options(infer_cmd, infer_data);
    infer_cmd->add_option("--steps", infer_steps, "simulation length T");
    infer_cmd->add_option("--seed", infer_seed, "seed recorded in the report");
    infer_cmd->add_option("--out", infer_out, "write the JSON report here instead of stdout");

    // ---- sweep ----
    auto* sweep_cmd = app.add_subcommand("sweep", "Error-vs-steps sweep plus latency to criterion");
    std::string sweep_weights, sweep_out = "sweep-out";
    ConvertArgs sweep_args;
    DatasetArgs sweep_data;
    std::size_t sweep_steps = 1000;
    std::vector<std::size_t> sweep_checkpoints;
    std::vector<double> sweep_tolerances;
    std::uint64_t sweep_seed = 0;
    sweep_cmd->add_option("--weights", sweep_weights, "trained ANN weight file")->required();
    add_convert_options(sweep_cmd, sweep_args);
    add_dataset_options(sweep_cmd, sweep_data);
    sweep_cmd->add_option("--steps", sweep_steps, "maximum simulation length T_max");
    sweep_cmd->add_option("--checkpoints", sweep_checkpoints,
                          "checkpoint list (default: 1-2-5 grid up to T_max)");
    sweep_cmd->add_option("--tolerance", sweep_tolerances,
                          "accuracy-loss tolerances for the latency report (repeatable)");
    sweep_cmd->add_option("--seed", sweep_seed, "seed recorded in the artifacts");
    sweep_cmd->add_option("--out", sweep_out, "output directory");

    // ---- similarity ----
    auto* sim_cmd = app.add_subcommand("similarity",
                                    "Cosine similarity of SNN rates vs ANN logits over checkpoints");
    std::string sim_weights, sim_out;
    ConvertArgs sim_args;
    DatasetArgs sim_data;
    std::size_t sim_steps = 1000;
    std::vector<std::size_t> sim_checkpoints;
    sim_cmd->add_option("--weights", sim_weights, "trained ANN weight file")->required();
    add_convert_options(sim_cmd, sim_args);
    add_dataset_options(sim_cmd, sim_data);
    sim_cmd->add_option("--steps", sim_steps, "maximum simulation length T_max");
    sim_cmd->add_option("--checkpoints", sim_checkpoints, "checkpoint list");
    sim_cmd->add_option("--out", sim_out, "write CSV here instead of stdout");

    // ---- gap ----
    auto* gap_cmd = app.add_subcommand("gap", "Per-layer activation-vs-rate approximation gap");
    std::string gap_weights, gap_out;
    ConvertArgs gap_args;
    DatasetArgs gap_data;
    std::size_t gap_steps = 1000;
    std::size_t gap_sample = 0;
    gap_cmd->add_option("--weights", gap_weights, "trained ANN weight file")->required();
    add_convert_options(gap_cmd, gap_args);
    add_dataset_options(gap_cmd, gap_data);
    gap_cmd->add_option("--steps", gap_steps, "simulation length T");
    gap_cmd->add_option("--sample", gap_sample, "dataset sample index to probe");
    gap_cmd->add_option("--out", gap_out, "write JSON here instead of stdout");

    // ---- pipeline ----
    auto* pipe_cmd = app.add_subcommand("pipeline", "Run the full sweep pipeline from a config file");
    std::string pipe_config, pipe_out = "pipeline-out";
    pipe_cmd->add_option("--config", pipe_config, "experiment config JSON")->required();
    pipe_cmd->add_option("--out", pipe_out, "output directory");

    CLI11_PARSE(app, argc, argv);

    if (*train_cmd) {
        LabeledDataset dataset = train_data.load();
        AnnNetwork net = init_mlp(parse_arch(arch), alpha_pos, alpha_neg, train_seed, zero_bias);
        net = train(net, dataset, {epochs, lr, train_seed, zero_bias});
        const std::string dataset_id =
            !train_data.csv.empty() ? fs::path(train_data.csv).filename().string()
                                    : fs::path(train_data.images).filename().string();
        save_network(net, {train_seed, epochs, dataset_id}, train_out);
        std::cout << "trained " << arch << ": loss " << fmt(dataset_loss(net, dataset))
                  << ", accuracy " << fmt(dataset_accuracy(net, dataset)) << "\n"
                  << "wrote " << train_out << "\n";
        return 0;
    }

    if (*convert_cmd) {
        NetworkMetadata meta;
        AnnNetwork ann = load_network(convert_weights, &meta);
        if (parse_bias_mode(convert_args.bias_mode) == BiasMode::Zero) ann = strip_biases(ann);
        LabeledDataset calibration;
        const bool has_data = !convert_data.csv.empty() || !convert_data.images.empty();
        if (has_data) calibration = convert_data.load();
        SpikingNetwork snn =
            convert_network(ann, convert_args, has_data ? &calibration : nullptr);
        save_spiking_network(snn, meta, convert_out);
        std::cout << "converted with " << convert_args.method << " mapping; thresholds:";
        for (const auto& layer : snn.layers) {
            if (layer.neuron) {
                std::cout << " (" << fmt(layer.neuron->theta_pos) << ", "
                          << fmt(layer.neuron->theta_neg) << ")";
            }
        }
        std::cout << "\nwrote " << convert_out << "\n";
        return 0;
    }

    if (*infer_cmd) {
        AnnNetwork ann = load_network(infer_weights);
        if (parse_bias_mode(infer_args.bias_mode) == BiasMode::Zero) ann = strip_biases(ann);
        LabeledDataset dataset = infer_data.load();
        SpikingNetwork snn = convert_network(ann, infer_args, &dataset);

        std::size_t correct = 0;
        std::uint64_t events = 0;
        for (std::size_t i = 0; i < dataset.size(); ++i) {
            Simulator sim(snn, dataset.inputs[i]);
            for (std::size_t t = 0; t < infer_steps; ++t) sim.step();
            if (classify(sim.output_rates()) == static_cast<std::size_t>(dataset.labels[i])) {
                ++correct;
            }
            events += sim.total_events();
        }
        json report;
        report["method"] = infer_args.method;
        report["steps"] = infer_steps;
        report["seed"] = infer_seed;
        report["samples"] = dataset.size();
        report["snn_accuracy"] = double(correct) / double(dataset.size());
        report["ann_accuracy"] = dataset_accuracy(ann, dataset);
        report["total_events"] = events;
        const std::string text = report.dump(2) + "\n";
        if (infer_out.empty()) {
            std::cout << text;
        } else {
            write_text(infer_out, text);
        }
        return 0;
    }

    if (*sweep_cmd) {
        ExperimentConfig config;
        config.method = sweep_args.method;
        config.t_max = sweep_steps;
        config.checkpoints = sweep_checkpoints;
        config.m_aug = sweep_args.m_aug;
        config.bias_mode = parse_bias_mode(sweep_args.bias_mode);
        if (!sweep_tolerances.empty()) config.loss_tolerances = sweep_tolerances;
        config.seed = sweep_seed;
        config.weights_path = sweep_weights;
        config.dataset_csv = sweep_data.csv;
        config.dataset_images = sweep_data.images;
        config.dataset_labels = sweep_data.labels;
        PipelineArtifacts artifacts = run_pipeline(config, sweep_out);
        std::cout << "wrote " << artifacts.sweep_csv << "\n"
                  << "wrote " << artifacts.latency_json << "\n"
                  << "wrote " << artifacts.similarity_csv << "\n"
                  << "wrote " << artifacts.gap_json << "\n";
        return 0;
    }

    if (*sim_cmd) {
        AnnNetwork ann = load_network(sim_weights);
        if (parse_bias_mode(sim_args.bias_mode) == BiasMode::Zero) ann = strip_biases(ann);
        LabeledDataset dataset = sim_data.load();
        SpikingNetwork snn = convert_network(ann, sim_args, &dataset);
        const std::vector<std::size_t> checkpoints =
            sim_checkpoints.empty() ? default_checkpoints(sim_steps) : sim_checkpoints;
        const auto curve = similarity_curve(ann, snn, dataset, checkpoints);
        std::ostringstream out;
        out << "T,mean_similarity,skipped\n";
        for (const auto& point : curve) {
            out << point.steps << "," << fmt(point.mean_similarity) << "," << point.skipped << "\n";
        }
        if (sim_out.empty()) {
            std::cout << out.str();
        } else {
            write_text(sim_out, out.str());
        }
        return 0;
    }

    if (*gap_cmd) {
        AnnNetwork ann = load_network(gap_weights);
        if (parse_bias_mode(gap_args.bias_mode) == BiasMode::Zero) ann = strip_biases(ann);
        LabeledDataset dataset = gap_data.load();
        if (gap_sample >= dataset.size()) {
            throw ConfigError("--sample index out of range for the dataset");
        }
        SpikingNetwork snn = convert_network(ann, gap_args, &dataset);
        const ApproximationReport report =
            approximation_gap(ann, snn, dataset.inputs[gap_sample], gap_steps);
        json doc;
        doc["steps"] = report.steps;
        doc["sample"] = gap_sample;
        json layers = json::array();
        for (const auto& layer : report.layers) {
            layers.push_back({{"max_abs_gap", layer.max_abs_gap},
                              {"residual_bound", layer.residual_bound},
                              {"max_residual", layer.max_residual},
                              {"weight_chain_factor", layer.weight_chain_factor}});
        }
        doc["layers"] = std::move(layers);
        const std::string text = doc.dump(2) + "\n";
        if (gap_out.empty()) {
            std::cout << text;
        } else {
            write_text(gap_out, text);
        }
        return 0;
    }

    if (*pipe_cmd) {
        ExperimentConfig config = load_experiment_config(pipe_config);
        PipelineArtifacts artifacts = run_pipeline(config, pipe_out);
        std::cout << "wrote " << artifacts.sweep_csv << "\n"
                  << "wrote " << artifacts.latency_json << "\n"
                  << "wrote " << artifacts.similarity_csv << "\n"
                  << "wrote " << artifacts.gap_json << "\n";
        return 0;
    }

    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    try {
        return run(argc, argv);
    } catch (const ConfigError& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return kExitConfig;
    } catch (const DimensionError& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return kExitConfig;
    } catch (const IoError& e) {
        std::cerr << "io error: " << e.what() << "\n";
        return kExitIo;
    } catch (const NumericError& e) {
        std::cerr << "numeric error: " << e.what() << "\n";
        return kExitNumeric;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
}
