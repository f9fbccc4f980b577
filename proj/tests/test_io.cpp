#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <random>
#include <sstream>

#include <json.hpp>

#include "spikemap/io.hpp"
#include "spikemap/pipeline.hpp"

using namespace spikemap;
namespace fs = std::filesystem;

namespace {

struct TempDir {
    fs::path path;
    TempDir() {
        path = fs::temp_directory_path() / ("spikemap-test-" + std::to_string(std::random_device{}()));
        fs::create_directories(path);
    }
    ~TempDir() { fs::remove_all(path); }
    std::string file(const std::string& name) const { return (path / name).string(); }
};

std::string slurp(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    std::ostringstream out;
    out << in.rdbuf();
    return out.str();
}

}  // namespace

TEST_CASE("idx round trip") {
    TempDir dir;
    LabeledDataset dataset;
    dataset.inputs.push_back(Tensor::zeros({1, 28, 28}));
    Tensor second = Tensor::zeros({1, 28, 28});
    for (std::size_t i = 0; i < second.size(); ++i) second[i] = double(i % 256) / 255.0;
    dataset.inputs.push_back(second);
    dataset.labels = {3, 7};

    save_idx_dataset(dataset, dir.file("img.idx"), dir.file("lbl.idx"));
    LabeledDataset loaded = load_idx_dataset(dir.file("img.idx"), dir.file("lbl.idx"));
    REQUIRE(loaded.size() == 2);
    CHECK(loaded.inputs[0].shape() == std::vector<std::size_t>{1, 28, 28});
    CHECK(loaded.labels == std::vector<int>{3, 7});
    for (double v : loaded.inputs[0].raw()) CHECK(v == 0.0);
    for (std::size_t i = 0; i < second.size(); ++i) {
        CHECK(loaded.inputs[1][i] == doctest::Approx(second[i]).epsilon(1.0 / 255.0));
    }
}

TEST_CASE("idx error paths") {
    TempDir dir;
    // bad magic
    {
        std::ofstream bad(dir.file("bad.idx"), std::ios::binary);
        const char bytes[8] = {0, 0, 0, 42, 0, 0, 0, 0};
        bad.write(bytes, 8);
    }
    CHECK_THROWS_AS(load_idx_dataset(dir.file("bad.idx"), dir.file("bad.idx")), IoError);

    // count mismatch: 2 images vs 3 labels
    LabeledDataset two;
    two.inputs = {Tensor::zeros({1, 2, 2}), Tensor::zeros({1, 2, 2})};
    two.labels = {0, 1};
    save_idx_dataset(two, dir.file("img2.idx"), dir.file("lbl2.idx"));
    LabeledDataset three;
    three.inputs = {Tensor::zeros({1, 2, 2}), Tensor::zeros({1, 2, 2}), Tensor::zeros({1, 2, 2})};
    three.labels = {0, 1, 2};
    save_idx_dataset(three, dir.file("img3.idx"), dir.file("lbl3.idx"));
    CHECK_THROWS_WITH_AS(load_idx_dataset(dir.file("img2.idx"), dir.file("lbl3.idx")),
                         doctest::Contains("count mismatch"), IoError);

    // truncated image payload
    {
        std::string bytes = slurp(dir.file("img2.idx"));
        std::ofstream cut(dir.file("cut.idx"), std::ios::binary);
        cut.write(bytes.data(), static_cast<std::streamsize>(bytes.size() - 2));
    }
    CHECK_THROWS_WITH_AS(load_idx_dataset(dir.file("cut.idx"), dir.file("lbl2.idx")),
                         doctest::Contains("byte offset"), IoError);
}

TEST_CASE("csv dataset round trip") {
    TempDir dir;
    LabeledDataset dataset = make_blobs(2, 4, 10, 3.0, 0.5, 91);
    save_csv_dataset(dataset, dir.file("data.csv"));
    LabeledDataset loaded = load_csv_dataset(dir.file("data.csv"));
    REQUIRE(loaded.size() == dataset.size());
    CHECK(loaded.labels == dataset.labels);
    for (std::size_t i = 0; i < dataset.size(); ++i) {
        CHECK(loaded.inputs[i].raw() == dataset.inputs[i].raw());
    }
}

TEST_CASE("network save/load round trip") {
    TempDir dir;
    AnnNetwork net = init_mlp({4, 5, 3}, 1.0, 0.01, 17);
    NetworkMetadata metadata{17, 5, "blobs"};
    save_network(net, metadata, dir.file("net.json"));

    NetworkMetadata loaded_meta;
    AnnNetwork loaded = load_network(dir.file("net.json"), &loaded_meta);
    CHECK(loaded_meta.seed == 17);
    CHECK(loaded_meta.dataset_id == "blobs");

    std::mt19937_64 rng(18);
    std::uniform_real_distribution<double> dist(-1.0, 1.0);
    for (int i = 0; i < 10; ++i) {
        Tensor x = Tensor::zeros({4});
        for (std::size_t j = 0; j < 4; ++j) x[j] = dist(rng);
        CHECK(forward(net, x).raw() == forward(loaded, x).raw());
    }

    // save -> load -> save is byte identical
    save_network(loaded, loaded_meta, dir.file("net2.json"));
    CHECK(slurp(dir.file("net.json")) == slurp(dir.file("net2.json")));
}

TEST_CASE("network file error paths") {
    TempDir dir;
    AnnNetwork net = init_mlp({4, 5, 3}, 1.0, 0.01, 17);
    save_network(net, {}, dir.file("net.json"));

    // corrupted shape field names the layer index
    nlohmann::json doc = nlohmann::json::parse(slurp(dir.file("net.json")));
    doc["layers"][0]["weights"]["shape"][0] = 6;
    {
        std::ofstream out(dir.file("corrupt.json"));
        out << doc.dump(2) << '\n';
    }
    CHECK_THROWS_WITH_AS(load_network(dir.file("corrupt.json")), doctest::Contains("layer 0"),
                         IoError);

    // version mismatch
    std::string original = slurp(dir.file("net.json"));
    auto vpos = original.find("\"format_version\": 1");
    REQUIRE(vpos != std::string::npos);
    original.replace(vpos, 19, "\"format_version\": 9");
    {
        std::ofstream out(dir.file("badver.json"));
        out << original;
    }
    CHECK_THROWS_WITH_AS(load_network(dir.file("badver.json")),
                         doctest::Contains("unsupported format version"), IoError);
}

TEST_CASE("absent bias arrays load as zero-bias layers") {
    TempDir dir;
    AnnNetwork net = init_mlp({3, 2}, 1.0, 0.01, 3, /*zero_bias=*/true);
    save_network(net, {}, dir.file("nobias.json"));
    AnnNetwork loaded = load_network(dir.file("nobias.json"));
    CHECK(std::get<DenseLayer>(loaded.layers[0]).bias.empty());
}

TEST_CASE("spiking network save/load round trip") {
    TempDir dir;
    AnnNetwork net = init_mlp({4, 5, 3}, 1.0, 0.01, 19, true);
    SpikingNetwork snn = aug_map(net);
    save_spiking_network(snn, {}, dir.file("snn.json"));
    SpikingNetwork loaded = load_spiking_network(dir.file("snn.json"));
    REQUIRE(loaded.layers.size() == snn.layers.size());
    for (std::size_t i = 0; i < snn.layers.size(); ++i) {
        CHECK(loaded.layers[i].neuron->theta_pos == snn.layers[i].neuron->theta_pos);
        CHECK(loaded.layers[i].neuron->theta_neg == snn.layers[i].neuron->theta_neg);
        CHECK((loaded.layers[i].neuron->kind == snn.layers[i].neuron->kind));
    }

    // -inf negative threshold survives the round trip
    AnnNetwork relu = init_mlp({4, 5, 3}, 1.0, 0.0, 19, true);
    SpikingNetwork relu_snn = aug_map(relu);
    save_spiking_network(relu_snn, {}, dir.file("relu.json"));
    SpikingNetwork relu_loaded = load_spiking_network(dir.file("relu.json"));
    CHECK(std::isinf(relu_loaded.layers[0].neuron->theta_neg));
}

TEST_CASE("pipeline determinism and artifacts") {
    TempDir dir;
    LabeledDataset train_set = make_blobs(3, 8, 100, 3.0, 0.6, 23);
    LabeledDataset test_set = make_blobs(3, 8, 40, 3.0, 0.6, 24);
    AnnNetwork net = init_mlp({8, 5, 3}, 1.0, 1.0, 23, true);
    net = train(net, train_set, {20, 0.05, 23, true});
    save_network(net, {23, 20, "blobs"}, dir.file("net.json"));
    save_csv_dataset(test_set, dir.file("test.csv"));

    ExperimentConfig config;
    config.method = "aug";
    config.t_max = 200;
    config.seed = 23;
    config.weights_path = dir.file("net.json");
    config.dataset_csv = dir.file("test.csv");
    config.gap_steps = 100;

    PipelineArtifacts a = run_pipeline(config, dir.file("run1"));
    PipelineArtifacts b = run_pipeline(config, dir.file("run2"));
    CHECK(slurp(a.sweep_csv) == slurp(b.sweep_csv));
    CHECK(slurp(a.similarity_csv) == slurp(b.similarity_csv));
    CHECK(slurp(a.latency_json) == slurp(b.latency_json));
    CHECK(slurp(a.gap_json) == slurp(b.gap_json));

    // artifacts embed the config hash
    const std::string stamp = slurp(a.sweep_csv);
    CHECK(stamp.find("config_hash=") != std::string::npos);
    CHECK(stamp.find("seed=23") != std::string::npos);

    // ter and aug sweeps on the same weight file share the dataset order
    ExperimentConfig ter = config;
    ter.method = "ter";
    ter.t_max = 2000;
    PipelineArtifacts t = run_pipeline(ter, dir.file("run-ter"));
    CHECK(fs::exists(t.sweep_csv));
    CHECK(slurp(t.sweep_csv) != slurp(a.sweep_csv));
}

TEST_CASE("experiment config validation") {
    ExperimentConfig config;
    config.method = "nope";
    config.weights_path = "w.json";
    config.dataset_csv = "d.csv";
    CHECK_THROWS_AS(config.validate(), ConfigError);
    config.method = "ter";
    config.m_aug = 3;
    CHECK_THROWS_AS(config.validate(), ConfigError);
    config.m_aug = kUnboundedAug;
    config.validate();
}
