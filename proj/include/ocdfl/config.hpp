#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include <json.hpp>

#include "ocdfl/gain.hpp"
#include "ocdfl/learner.hpp"
#include "ocdfl/radio.hpp"
#include "ocdfl/selector.hpp"
#include "ocdfl/topology.hpp"

namespace ocdfl {

enum class Scheme { ocdfl, full, none };
enum class DataSource { synthetic, idx };
/// Which loss feeds the knowledge gain: the node's own shard or the test set.
enum class GainLoss { local_shard, global_test };

std::string to_string(Scheme s);
Scheme parse_scheme(const std::string& s);

/// Radio ranges as configured (log units); each node draws its own p_tx and
/// bandwidth uniformly from the closed intervals.
struct RadioConfig {
    double p_tx_dbm_min = 10.0;
    double p_tx_dbm_max = 21.0;
    double bandwidth_hz_min = 5e6;
    double bandwidth_hz_max = 20e6;
    double g_tx_dbi = 0.0;
    double g_rx_dbi = 0.0;
    double freq_hz = 1e9;
    double env_exp = 2.0;
    double noise_dbm_per_hz = -174.0;
    double d_max_m = 2000.0;
    double light_speed = 3e8;
    double min_link_distance_m = 1.0; // co-located nodes are treated as this far apart

    void validate() const;
};

struct DataConfig {
    DataSource source = DataSource::synthetic;
    double alpha = 100.0;
    std::size_t train_samples = 4000;
    std::size_t test_samples = 1000;
    std::size_t feature_dim = 32;
    std::size_t num_classes = 10;
    double separation = 3.0;
    std::string idx_images;
    std::string idx_labels;
    std::size_t idx_max_samples = 2000;

    void validate() const;
};

struct ExperimentConfig {
    std::size_t num_nodes = 20;
    std::size_t rounds = 30;
    Scheme scheme = Scheme::ocdfl;
    std::uint64_t seed = 1;
    double payload_bits = 87000.0;
    GainLoss gain_loss = GainLoss::global_test;
    bool local_training = true;
    bool shared_init = true;
    bool mobile = true;

    std::vector<std::size_t> hidden = {64};
    learn::TrainConfig train{.learning_rate = 0.05, .local_epochs = 1, .batch_size = 16};
    select::SelectorConfig selector;
    gain::GainParams gain;
    topology::Arena arena;
    topology::MobilityConfig mobility;
    RadioConfig radio;
    DataConfig data;

    void validate() const;
};

nlohmann::json to_json(const ExperimentConfig& cfg);
/// Strict: unknown sections or keys are rejected with ConfigError.
ExperimentConfig from_json(const nlohmann::json& j);

ExperimentConfig load_config(const std::filesystem::path& path);

/// Applies "section.key=value" overrides. Values are parsed as JSON when
/// possible and taken as strings otherwise.
void apply_overrides(nlohmann::json& j, const std::vector<std::string>& overrides);

} // namespace ocdfl
