#pragma once

#include <cstdint>
#include <string>

#include "spikemap/convert.hpp"

namespace spikemap {

// MNIST-style IDX pair: big-endian magic 0x803 (images) / 0x801 (labels).
// Pixels are scaled to [0,1]; image tensors are 1 x H x W.
LabeledDataset load_idx_dataset(const std::string& images_path, const std::string& labels_path);

void save_idx_dataset(const LabeledDataset& dataset, const std::string& images_path,
                      const std::string& labels_path);

// CSV fallback: one row = flattened features followed by an integer label.
LabeledDataset load_csv_dataset(const std::string& path);

void save_csv_dataset(const LabeledDataset& dataset, const std::string& path);

struct NetworkMetadata {
    std::uint64_t seed = 0;
    std::uint64_t epochs = 0;
    std::string dataset_id;
};

void save_network(const AnnNetwork& net, const NetworkMetadata& metadata,
                  const std::string& path);

AnnNetwork load_network(const std::string& path, NetworkMetadata* metadata = nullptr);

void save_spiking_network(const SpikingNetwork& snn, const NetworkMetadata& metadata,
                          const std::string& path);

SpikingNetwork load_spiking_network(const std::string& path, NetworkMetadata* metadata = nullptr);

}  // namespace spikemap
