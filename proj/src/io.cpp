#include "spikemap/io.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <sstream>

#include <json.hpp>

namespace spikemap {

namespace {

using nlohmann::json;

constexpr std::uint32_t kImagesMagic = 0x00000803;
constexpr std::uint32_t kLabelsMagic = 0x00000801;
constexpr int kFormatVersion = 1;

std::uint32_t read_be32(std::istream& in, const std::string& path, std::size_t& offset) {
    unsigned char bytes[4];
    in.read(reinterpret_cast<char*>(bytes), 4);
    if (!in) {
        throw IoError(path + ": truncated at byte offset " + std::to_string(offset));
    }
    offset += 4;
    return (std::uint32_t(bytes[0]) << 24) | (std::uint32_t(bytes[1]) << 16) |
           (std::uint32_t(bytes[2]) << 8) | std::uint32_t(bytes[3]);
}

void write_be32(std::ostream& out, std::uint32_t value) {
    unsigned char bytes[4] = {static_cast<unsigned char>(value >> 24),
                              static_cast<unsigned char>(value >> 16),
                              static_cast<unsigned char>(value >> 8),
                              static_cast<unsigned char>(value)};
    out.write(reinterpret_cast<char*>(bytes), 4);
}

json tensor_to_json(const Tensor& t) {
    json j;
    j["shape"] = t.shape();
    j["data"] = t.raw();
    return j;
}

Tensor tensor_from_json(const json& j, std::size_t layer_index) {
    std::vector<std::size_t> shape = j.at("shape").get<std::vector<std::size_t>>();
    std::vector<double> data = j.at("data").get<std::vector<double>>();
    try {
        return Tensor(std::move(shape), std::move(data));
    } catch (const DimensionError& e) {
        throw IoError("layer " + std::to_string(layer_index) +
                      ": shape does not match stored data (" + e.what() + ")");
    }
}

// Consecutive dense layers must compose; conv/pool composition depends on the
// input size and is verified at forward time.
void check_composition(const std::vector<LayerSpec>& layers) {
    std::size_t prev_out = 0;
    bool have_prev = false;
    for (std::size_t i = 0; i < layers.size(); ++i) {
        if (const auto* dense = std::get_if<DenseLayer>(&layers[i])) {
            if (have_prev && dense->weights.shape()[1] != prev_out) {
                throw IoError("layer " + std::to_string(i) + ": input dimension " +
                              std::to_string(dense->weights.shape()[1]) +
                              " does not compose with previous output " +
                              std::to_string(prev_out));
            }
            prev_out = dense->weights.shape()[0];
            have_prev = true;
        } else if (std::holds_alternative<ConvLayer>(layers[i]) ||
                   std::holds_alternative<AvgPoolLayer>(layers[i])) {
            have_prev = false;
        }
    }
}

json metadata_to_json(const NetworkMetadata& metadata) {
    json j;
    j["seed"] = metadata.seed;
    j["epochs"] = metadata.epochs;
    j["dataset_id"] = metadata.dataset_id;
    return j;
}

NetworkMetadata metadata_from_json(const json& j) {
    NetworkMetadata metadata;
    metadata.seed = j.value("seed", std::uint64_t{0});
    metadata.epochs = j.value("epochs", std::uint64_t{0});
    metadata.dataset_id = j.value("dataset_id", std::string{});
    return metadata;
}

json document_header(const NetworkMetadata& metadata, const std::string& network_type) {
    json doc;
    doc["format_version"] = kFormatVersion;
    doc["network_type"] = network_type;
    doc["metadata"] = metadata_to_json(metadata);
    return doc;
}

json parse_document(const std::string& path, const std::string& expected_type) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open " + path);
    json doc;
    try {
        in >> doc;
    } catch (const json::exception& e) {
        throw IoError(path + ": invalid JSON: " + e.what());
    }
    const int version = doc.value("format_version", -1);
    if (version != kFormatVersion) {
        throw IoError(path + ": unsupported format version " + std::to_string(version));
    }
    const std::string type = doc.value("network_type", "ann");
    if (type != expected_type) {
        throw IoError(path + ": expected a " + expected_type + " file, found " + type);
    }
    return doc;
}

void write_document(const json& doc, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw IoError("cannot write " + path);
    out << doc.dump(2) << "\n";
}

json weighted_layer_to_json(const DenseLayer& dense) {
    json j;
    j["kind"] = "dense";
    j["weights"] = tensor_to_json(dense.weights);
    if (!dense.bias.empty()) j["bias"] = dense.bias.raw();
    return j;
}

json weighted_layer_to_json(const ConvLayer& conv) {
    json j;
    j["kind"] = "conv";
    j["weights"] = tensor_to_json(conv.kernels);
    if (!conv.bias.empty()) j["bias"] = conv.bias.raw();
    j["stride"] = conv.stride;
    j["padding"] = conv.padding;
    return j;
}

Tensor bias_from_json(const json& j, std::size_t out_dim) {
    if (!j.contains("bias")) return Tensor();  // absent bias == zero-bias layer
    std::vector<double> data = j.at("bias").get<std::vector<double>>();
    if (data.size() != out_dim) {
        throw IoError("bias length " + std::to_string(data.size()) +
                      " does not match output dimension " + std::to_string(out_dim));
    }
    return Tensor({out_dim}, std::move(data));
}

}  // namespace

LabeledDataset load_idx_dataset(const std::string& images_path, const std::string& labels_path) {
    std::ifstream images(images_path, std::ios::binary);
    if (!images) throw IoError("cannot open " + images_path);
    std::ifstream labels(labels_path, std::ios::binary);
    if (!labels) throw IoError("cannot open " + labels_path);

    std::size_t img_offset = 0;
    const std::uint32_t img_magic = read_be32(images, images_path, img_offset);
    if (img_magic != kImagesMagic) {
        throw IoError(images_path + ": bad magic number (expected 0x00000803)");
    }
    const std::uint32_t n_images = read_be32(images, images_path, img_offset);
    const std::uint32_t rows = read_be32(images, images_path, img_offset);
    const std::uint32_t cols = read_be32(images, images_path, img_offset);

    std::size_t lbl_offset = 0;
    const std::uint32_t lbl_magic = read_be32(labels, labels_path, lbl_offset);
    if (lbl_magic != kLabelsMagic) {
        throw IoError(labels_path + ": bad magic number (expected 0x00000801)");
    }
    const std::uint32_t n_labels = read_be32(labels, labels_path, lbl_offset);
    if (n_images != n_labels) {
        throw IoError("count mismatch: " + std::to_string(n_images) + " images vs " +
                      std::to_string(n_labels) + " labels");
    }

    LabeledDataset dataset;
    std::vector<unsigned char> pixels(static_cast<std::size_t>(rows) * cols);
    for (std::uint32_t i = 0; i < n_images; ++i) {
        images.read(reinterpret_cast<char*>(pixels.data()),
                    static_cast<std::streamsize>(pixels.size()));
        if (!images) {
            throw IoError(images_path + ": truncated at byte offset " + std::to_string(img_offset));
        }
        img_offset += pixels.size();
        Tensor image = Tensor::zeros({1, rows, cols});
        for (std::size_t p = 0; p < pixels.size(); ++p) {
            image[p] = static_cast<double>(pixels[p]) / 255.0;
        }
        dataset.inputs.push_back(std::move(image));

        char label = 0;
        labels.read(&label, 1);
        if (!labels) {
            throw IoError(labels_path + ": truncated at byte offset " + std::to_string(lbl_offset));
        }
        ++lbl_offset;
        dataset.labels.push_back(static_cast<int>(static_cast<unsigned char>(label)));
    }
    return dataset;
}

void save_idx_dataset(const LabeledDataset& dataset, const std::string& images_path,
                      const std::string& labels_path) {
    if (dataset.size() == 0) throw ConfigError("save_idx_dataset: empty dataset");
    const auto& shape = dataset.inputs[0].shape();
    if (shape.size() != 3 || shape[0] != 1) {
        throw ConfigError("save_idx_dataset expects 1xHxW images");
    }
    std::ofstream images(images_path, std::ios::binary);
    if (!images) throw IoError("cannot write " + images_path);
    std::ofstream labels(labels_path, std::ios::binary);
    if (!labels) throw IoError("cannot write " + labels_path);

    write_be32(images, kImagesMagic);
    write_be32(images, static_cast<std::uint32_t>(dataset.size()));
    write_be32(images, static_cast<std::uint32_t>(shape[1]));
    write_be32(images, static_cast<std::uint32_t>(shape[2]));
    write_be32(labels, kLabelsMagic);
    write_be32(labels, static_cast<std::uint32_t>(dataset.size()));
    for (std::size_t i = 0; i < dataset.size(); ++i) {
        for (double v : dataset.inputs[i].raw()) {
            const double clamped = std::min(1.0, std::max(0.0, v));
            images.put(static_cast<char>(std::lround(clamped * 255.0)));
        }
        labels.put(static_cast<char>(dataset.labels[i]));
    }
}

LabeledDataset load_csv_dataset(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open " + path);
    LabeledDataset dataset;
    std::string line;
    std::size_t line_no = 0;
    std::size_t width = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty() || line[0] == '#') continue;
        std::vector<double> values;
        std::stringstream row(line);
        std::string cell;
        while (std::getline(row, cell, ',')) {
            double v = 0.0;
            auto [ptr, ec] = std::from_chars(cell.data(), cell.data() + cell.size(), v);
            if (ec != std::errc() || ptr != cell.data() + cell.size()) {
                throw IoError(path + ":" + std::to_string(line_no) + ": bad number '" + cell + "'");
            }
            values.push_back(v);
        }
        if (values.size() < 2) {
            throw IoError(path + ":" + std::to_string(line_no) + ": need features and a label");
        }
        if (width == 0) width = values.size();
        if (values.size() != width) {
            throw IoError(path + ":" + std::to_string(line_no) + ": inconsistent column count");
        }
        const int label = static_cast<int>(values.back());
        values.pop_back();
        const std::size_t features = values.size();
        dataset.inputs.push_back(Tensor({features}, std::move(values)));
        dataset.labels.push_back(label);
    }
    if (dataset.size() == 0) throw IoError(path + ": no samples");
    return dataset;
}

void save_csv_dataset(const LabeledDataset& dataset, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw IoError("cannot write " + path);
    for (std::size_t i = 0; i < dataset.size(); ++i) {
        for (double v : dataset.inputs[i].raw()) {
            out << json(v).dump() << ",";
        }
        out << dataset.labels[i] << "\n";
    }
}

void save_network(const AnnNetwork& net, const NetworkMetadata& metadata,
                  const std::string& path) {
    json doc = document_header(metadata, "ann");
    json layers = json::array();
    for (const auto& layer : net.layers) {
        if (const auto* dense = std::get_if<DenseLayer>(&layer)) {
            layers.push_back(weighted_layer_to_json(*dense));
        } else if (const auto* conv = std::get_if<ConvLayer>(&layer)) {
            layers.push_back(weighted_layer_to_json(*conv));
        } else if (const auto* pool = std::get_if<AvgPoolLayer>(&layer)) {
            layers.push_back({{"kind", "avg_pool"}, {"window", pool->window},
                              {"stride", pool->stride}});
        } else {
            const auto& act = std::get<ActivationLayer>(layer);
            layers.push_back({{"kind", "activation"}, {"alpha_pos", act.alpha_pos},
                              {"alpha_neg", act.alpha_neg}});
        }
    }
    doc["layers"] = std::move(layers);
    write_document(doc, path);
}

namespace {

LayerSpec ann_layer_from_json(const json& j, std::size_t index) {
    const std::string kind = j.at("kind").get<std::string>();
    if (kind == "dense") {
        Tensor weights = tensor_from_json(j.at("weights"), index);
        if (weights.rank() != 2) {
            throw IoError("layer " + std::to_string(index) + ": dense weights must be 2-D");
        }
        Tensor bias = bias_from_json(j, weights.shape()[0]);
        return DenseLayer{std::move(weights), std::move(bias)};
    }
    if (kind == "conv") {
        Tensor kernels = tensor_from_json(j.at("weights"), index);
        if (kernels.rank() != 4) {
            throw IoError("layer " + std::to_string(index) + ": conv kernels must be 4-D");
        }
        Tensor bias = bias_from_json(j, kernels.shape()[0]);
        return ConvLayer{std::move(kernels), std::move(bias),
                         j.value("stride", std::size_t{1}), j.value("padding", std::size_t{0})};
    }
    if (kind == "avg_pool") {
        return AvgPoolLayer{j.at("window").get<std::size_t>(), j.at("stride").get<std::size_t>()};
    }
    if (kind == "activation") {
        return ActivationLayer{j.at("alpha_pos").get<double>(), j.at("alpha_neg").get<double>()};
    }
    throw IoError("layer " + std::to_string(index) + ": unknown kind '" + kind + "'");
}

}  // namespace

AnnNetwork load_network(const std::string& path, NetworkMetadata* metadata) {
    json doc = parse_document(path, "ann");
    if (metadata) *metadata = metadata_from_json(doc.value("metadata", json::object()));
    AnnNetwork net;
    const json& layers = doc.at("layers");
    for (std::size_t i = 0; i < layers.size(); ++i) {
        net.layers.push_back(ann_layer_from_json(layers[i], i));
    }
    check_composition(net.layers);
    return net;
}

void save_spiking_network(const SpikingNetwork& snn, const NetworkMetadata& metadata,
                          const std::string& path) {
    json doc = document_header(metadata, "snn");
    json layers = json::array();
    for (const auto& layer : snn.layers) {
        json j;
        if (const auto* dense = std::get_if<DenseLayer>(&layer.op)) {
            j = weighted_layer_to_json(*dense);
        } else if (const auto* conv = std::get_if<ConvLayer>(&layer.op)) {
            j = weighted_layer_to_json(*conv);
        } else {
            const auto& pool = std::get<AvgPoolLayer>(layer.op);
            j = {{"kind", "avg_pool"}, {"window", pool.window}, {"stride", pool.stride}};
        }
        if (layer.neuron) {
            j["theta_pos"] = layer.neuron->theta_pos;
            j["theta_neg"] = std::isinf(layer.neuron->theta_neg)
                                 ? json("-inf")
                                 : json(layer.neuron->theta_neg);
            j["neuron_kind"] =
                layer.neuron->kind == NeuronKind::Augmented ? "augmented" : "binary";
            j["m_aug"] = layer.neuron->m_aug;
        }
        layers.push_back(std::move(j));
    }
    doc["layers"] = std::move(layers);
    write_document(doc, path);
}

SpikingNetwork load_spiking_network(const std::string& path, NetworkMetadata* metadata) {
    json doc = parse_document(path, "snn");
    if (metadata) *metadata = metadata_from_json(doc.value("metadata", json::object()));
    SpikingNetwork snn;
    const json& layers = doc.at("layers");
    std::vector<LayerSpec> for_composition;
    for (std::size_t i = 0; i < layers.size(); ++i) {
        const json& j = layers[i];
        LayerSpec spec = ann_layer_from_json(j, i);
        for_composition.push_back(spec);
        SpikingLayer layer;
        if (auto* dense = std::get_if<DenseLayer>(&spec)) {
            layer.op = std::move(*dense);
        } else if (auto* conv = std::get_if<ConvLayer>(&spec)) {
            layer.op = std::move(*conv);
        } else if (auto* pool = std::get_if<AvgPoolLayer>(&spec)) {
            layer.op = *pool;
        } else {
            throw IoError("layer " + std::to_string(i) + ": snn files cannot hold activations");
        }
        if (j.contains("theta_pos")) {
            NeuronParams params;
            params.theta_pos = j.at("theta_pos").get<double>();
            const json& tn = j.at("theta_neg");
            params.theta_neg = tn.is_string() ? -std::numeric_limits<double>::infinity()
                                              : tn.get<double>();
            params.kind = j.at("neuron_kind").get<std::string>() == "augmented"
                              ? NeuronKind::Augmented
                              : NeuronKind::DoubleThresholdBinary;
            params.m_aug = j.value("m_aug", kUnboundedAug);
            if (params.theta_pos <= 0.0 || params.theta_neg >= 0.0) {
                throw IoError("layer " + std::to_string(i) + ": invalid thresholds");
            }
            layer.neuron = params;
        } else if (!std::holds_alternative<AvgPoolLayer>(layer.op)) {
            throw IoError("layer " + std::to_string(i) + ": weighted layer missing thresholds");
        }
        snn.layers.push_back(std::move(layer));
    }
    check_composition(for_composition);
    return snn;
}

}  // namespace spikemap
