#pragma once

#include <cstddef>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "ocdfl/rng.hpp"

namespace ocdfl::data {

/// Row-major feature matrix with integer labels in [0, num_classes).
struct Dataset {
    std::vector<double> features;
    std::vector<int> labels;
    std::size_t feature_dim = 0;
    std::size_t num_classes = 0;

    std::size_t size() const { return labels.size(); }
    std::span<const double> row(std::size_t i) const {
        return {features.data() + i * feature_dim, feature_dim};
    }
    void validate() const;

    /// Copy of the given rows, in the given order.
    Dataset subset(std::span<const std::size_t> indices) const;
    std::vector<std::size_t> class_counts() const;
};

struct Shard {
    std::size_t owner = 0;
    std::vector<std::size_t> indices;
};

struct DirichletSpec {
    double alpha = 1.0;
    std::size_t num_nodes = 1;
    std::size_t num_classes = 2;

    void validate() const;
};

struct PartitionReport {
    std::size_t retries = 0;   // proportion redraws across all nodes
    std::size_t fallbacks = 0; // nodes filled by proportional rescaling
};

/// Draw from Dir(alpha, ..., alpha) of the given dimension via normalized gammas.
std::vector<double> sample_dirichlet(double alpha, std::size_t dim, Rng& rng);

/// Equal-size shards of floor(D / N) samples each. Every node's class mix is
/// drawn from Dir(alpha); when the remaining pool of a class cannot honor a
/// draw, the node redraws up to `max_retries` times and then falls back to
/// capping at availability and redistributing the deficit by its proportions.
std::vector<Shard> partition_dirichlet(const Dataset& data, const DirichletSpec& spec, Rng& rng,
                                       PartitionReport* report = nullptr,
                                       std::size_t max_retries = 10);

struct SyntheticSpec {
    std::size_t num_samples = 5000;
    std::size_t feature_dim = 32;
    std::size_t num_classes = 10;
    double separation = 3.0; // pairwise center distance, in within-class std units
};

/// Gaussian clusters with identity covariance. Sample j carries label
/// j % num_classes, so any prefix of length m*C is exactly balanced.
Dataset make_synthetic(const SyntheticSpec& spec, Rng& rng);

/// Splits off the trailing `test_size` rows as the test set.
std::pair<Dataset, Dataset> split_tail(const Dataset& data, std::size_t test_size);

/// MNIST-style IDX pair (ubyte images 0x00000803, labels 0x00000801).
/// Pixels are scaled to [0, 1]; at most `max_samples` rows are read.
Dataset load_idx(const std::filesystem::path& images_path,
                 const std::filesystem::path& labels_path, std::size_t max_samples);

/// Writes an IDX pair; images are 8-bit, rows x rows_dim x cols_dim.
void write_idx(const std::filesystem::path& images_path, const std::filesystem::path& labels_path,
               std::span<const std::uint8_t> pixels, std::span<const std::uint8_t> labels,
               std::uint32_t rows, std::uint32_t cols);

} // namespace ocdfl::data
