#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <filesystem>
#include <numeric>
#include <span>
#include <string>
#include <vector>

#include "ocdfl/datagen.hpp"
#include "ocdfl/errors.hpp"
#include "ocdfl/rng.hpp"

namespace ocdfl::learn {

/// Fully connected ReLU network, dims = {input, hidden..., classes}.
/// Parameters are stored layer by layer: W (out x in, row-major), then b.
struct Layout {
    std::vector<std::size_t> dims;

    std::size_t input_dim() const { return dims.front(); }
    std::size_t num_classes() const { return dims.back(); }
    std::size_t num_layers() const { return dims.size() - 1; }
    std::size_t num_params() const;
    void validate() const;
    std::string describe() const;

    friend bool operator==(const Layout&, const Layout&) = default;
};

struct ModelParams {
    Layout layout;
    std::vector<double> values;

    void validate() const;
    /// Size of the checkpoint payload (64-bit floats), in bits.
    std::size_t serialized_bits() const { return values.size() * 64; }
};

struct TrainConfig {
    double learning_rate = 0.05;
    std::size_t local_epochs = 1;
    std::size_t batch_size = 16;

    void validate() const;
};

struct EvalResult {
    double loss = 0.0;
    double accuracy = 0.0;
};

/// Glorot-uniform weights, zero biases.
ModelParams init_model(const Layout& layout, Rng& rng);

/// Mean cross-entropy and top-1 accuracy over the listed rows. Throws
/// std::invalid_argument when there are no rows.
EvalResult evaluate(const ModelParams& model, const data::Dataset& data,
                    std::span<const std::size_t> indices);
EvalResult evaluate(const ModelParams& model, const data::Dataset& data);

/// Mean cross-entropy over `batch`; writes its gradient into `grad`.
double loss_and_gradient(const ModelParams& model, const data::Dataset& data,
                         std::span<const std::size_t> batch, std::span<double> grad);

/// Mini-batch SGD over `num_samples` local samples for `cfg.local_epochs`
/// epochs. `grad_fn(batch_positions, weights, grad)` must fill `grad` with
/// the mean gradient over the batch. Rows are reshuffled each epoch unless a
/// single batch covers the whole set.
template <typename GradFn>
void sgd_epochs(std::vector<double>& weights, std::size_t num_samples, const TrainConfig& cfg,
                Rng& rng, GradFn&& grad_fn) {
    if (num_samples == 0) throw std::invalid_argument("sgd_epochs: no samples");
    std::vector<std::size_t> order(num_samples);
    std::iota(order.begin(), order.end(), 0);
    std::vector<double> grad(weights.size());
    const bool full_batch = cfg.batch_size >= num_samples;
    for (std::size_t epoch = 0; epoch < cfg.local_epochs; ++epoch) {
        if (!full_batch) std::shuffle(order.begin(), order.end(), rng);
        for (std::size_t start = 0; start < num_samples; start += cfg.batch_size) {
            const std::size_t stop = std::min(num_samples, start + cfg.batch_size);
            const std::span<const std::size_t> batch(order.data() + start, stop - start);
            grad_fn(batch, std::span<const double>(weights), std::span<double>(grad));
            for (std::size_t p = 0; p < weights.size(); ++p) {
                weights[p] -= cfg.learning_rate * grad[p];
                if (!std::isfinite(weights[p])) {
                    throw DivergenceError("sgd: non-finite weight at epoch " +
                                          std::to_string(epoch) + "; learning rate " +
                                          std::to_string(cfg.learning_rate) + " diverges");
                }
            }
        }
    }
}

/// Local training of `model` on the rows listed in `shard`.
ModelParams local_update(const ModelParams& model, const data::Dataset& data,
                         std::span<const std::size_t> shard, const TrainConfig& cfg, Rng& rng);

/// Elementwise mean of `own` and every received model. Each coordinate is
/// summed in sorted order, so the result does not depend on argument order.
ModelParams fed_average(const ModelParams& own, std::span<const ModelParams* const> received);
ModelParams fed_average(const ModelParams& own, std::span<const ModelParams> received);

void save_checkpoint(const ModelParams& model, const std::filesystem::path& path);
ModelParams load_checkpoint(const std::filesystem::path& path);

} // namespace ocdfl::learn
