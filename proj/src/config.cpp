#include "ocdfl/config.hpp"

#include <fstream>
#include <type_traits>

#include "ocdfl/errors.hpp"

namespace ocdfl {

using nlohmann::json;

std::string to_string(Scheme s) {
    switch (s) {
    case Scheme::ocdfl: return "ocdfl";
    case Scheme::full: return "full";
    case Scheme::none: return "none";
    }
    return "?";
}

Scheme parse_scheme(const std::string& s) {
    if (s == "ocdfl") return Scheme::ocdfl;
    if (s == "full") return Scheme::full;
    if (s == "none") return Scheme::none;
    throw ConfigError("unknown scheme '" + s + "' (expected ocdfl, full or none)");
}

namespace {

std::string to_string(DataSource s) { return s == DataSource::synthetic ? "synthetic" : "idx"; }

DataSource parse_source(const std::string& s) {
    if (s == "synthetic") return DataSource::synthetic;
    if (s == "idx") return DataSource::idx;
    throw ConfigError("unknown data source '" + s + "' (expected synthetic or idx)");
}

std::string to_string(GainLoss g) { return g == GainLoss::local_shard ? "local_shard" : "global_test"; }

GainLoss parse_gain_loss(const std::string& s) {
    if (s == "local_shard") return GainLoss::local_shard;
    if (s == "global_test") return GainLoss::global_test;
    throw ConfigError("unknown gain loss source '" + s + "'");
}

void require(bool ok, const std::string& what) {
    if (!ok) throw ConfigError(what);
}

// Rejects keys of `given` that `reference` does not have, recursively.
void check_known_keys(const json& given, const json& reference, const std::string& prefix) {
    if (!given.is_object()) throw ConfigError("config: '" + prefix + "' must be an object");
    for (const auto& [key, value] : given.items()) {
        const std::string path = prefix.empty() ? key : prefix + "." + key;
        if (!reference.contains(key)) throw ConfigError("config: unknown key '" + path + "'");
        if (reference.at(key).is_object()) check_known_keys(value, reference.at(key), path);
    }
}

template <typename T>
T get(const json& j, const char* section, const char* key) {
    try {
        const json& v = j.at(section).at(key);
        if constexpr (std::is_unsigned_v<T> && !std::is_same_v<T, bool>) {
            if (!v.is_number_unsigned()) throw ConfigError("");
        }
        return v.get<T>();
    } catch (const std::exception&) {
        throw ConfigError(std::string("config: bad value for '") + section + "." + key + "'");
    }
}

} // namespace

void RadioConfig::validate() const {
    require(p_tx_dbm_min <= p_tx_dbm_max, "radio: p_tx_dbm_min must be <= p_tx_dbm_max");
    require(bandwidth_hz_min > 0.0 && bandwidth_hz_min <= bandwidth_hz_max,
            "radio: bandwidth range must be positive and ordered");
    require(freq_hz > 0.0, "radio: freq_hz must be > 0");
    require(env_exp >= 2.0, "radio: env_exp must be >= 2");
    require(d_max_m > 0.0, "radio: d_max_m must be > 0");
    require(light_speed > 0.0, "radio: light_speed must be > 0");
    require(min_link_distance_m > 0.0, "radio: min_link_distance_m must be > 0");
}

void DataConfig::validate() const {
    require(alpha > 0.0, "data: alpha must be > 0");
    require(test_samples > 0, "data: test_samples must be >= 1");
    if (source == DataSource::synthetic) {
        require(num_classes >= 2, "data: num_classes must be >= 2");
        require(feature_dim >= 1, "data: feature_dim must be >= 1");
        require(separation >= 0.0, "data: separation must be >= 0");
    } else {
        require(!idx_images.empty() && !idx_labels.empty(),
                "data: idx source needs idx_images and idx_labels");
        require(idx_max_samples > test_samples, "data: idx_max_samples must exceed test_samples");
    }
}

void ExperimentConfig::validate() const {
    require(num_nodes >= 1, "experiment: num_nodes must be >= 1");
    require(rounds >= 1, "experiment: rounds must be >= 1");
    require(payload_bits > 0.0, "experiment: payload_bits must be > 0");
    for (std::size_t h : hidden) require(h > 0, "model: hidden sizes must be positive");
    train.validate();
    selector.validate();
    gain.validate();
    arena.validate();
    mobility.validate();
    radio.validate();
    data.validate();
    if (data.source == DataSource::synthetic) {
        require(data.train_samples >= num_nodes * data.num_classes,
                "data: train_samples must be >= num_nodes * num_classes");
    }
}

json to_json(const ExperimentConfig& c) {
    json j;
    j["experiment"] = {{"num_nodes", c.num_nodes},
                       {"rounds", c.rounds},
                       {"scheme", to_string(c.scheme)},
                       {"seed", c.seed},
                       {"payload_bits", c.payload_bits},
                       {"gain_loss", to_string(c.gain_loss)},
                       {"local_training", c.local_training},
                       {"shared_init", c.shared_init},
                       {"mobile", c.mobile}};
    j["model"] = {{"hidden", c.hidden}};
    j["train"] = {{"learning_rate", c.train.learning_rate},
                  {"local_epochs", c.train.local_epochs},
                  {"batch_size", c.train.batch_size}};
    j["selector"] = {{"theta", c.selector.theta},
                     {"steps", c.selector.steps},
                     {"step_size", c.selector.step_size},
                     {"threshold", c.selector.threshold},
                     {"init_w", c.selector.init_w},
                     {"exclude_zero_gain", c.selector.exclude_zero_gain}};
    j["gain"] = {{"mu", c.gain.mu}};
    j["arena"] = {{"width", c.arena.width}, {"height", c.arena.height}};
    j["mobility"] = {{"speed_min", c.mobility.speed_min},
                     {"speed_max", c.mobility.speed_max},
                     {"pause_rounds", c.mobility.pause_rounds},
                     {"dt", c.mobility.dt}};
    j["radio"] = {{"p_tx_dbm_min", c.radio.p_tx_dbm_min},
                  {"p_tx_dbm_max", c.radio.p_tx_dbm_max},
                  {"bandwidth_hz_min", c.radio.bandwidth_hz_min},
                  {"bandwidth_hz_max", c.radio.bandwidth_hz_max},
                  {"g_tx_dbi", c.radio.g_tx_dbi},
                  {"g_rx_dbi", c.radio.g_rx_dbi},
                  {"freq_hz", c.radio.freq_hz},
                  {"env_exp", c.radio.env_exp},
                  {"noise_dbm_per_hz", c.radio.noise_dbm_per_hz},
                  {"d_max_m", c.radio.d_max_m},
                  {"light_speed", c.radio.light_speed},
                  {"min_link_distance_m", c.radio.min_link_distance_m}};
    j["data"] = {{"source", to_string(c.data.source)},
                 {"alpha", c.data.alpha},
                 {"train_samples", c.data.train_samples},
                 {"test_samples", c.data.test_samples},
                 {"feature_dim", c.data.feature_dim},
                 {"num_classes", c.data.num_classes},
                 {"separation", c.data.separation},
                 {"idx_images", c.data.idx_images},
                 {"idx_labels", c.data.idx_labels},
                 {"idx_max_samples", c.data.idx_max_samples}};
    return j;
}

ExperimentConfig from_json(const json& given) {
    json j = to_json(ExperimentConfig{});
    check_known_keys(given, j, "");
    j.merge_patch(given);

    ExperimentConfig c;
    c.num_nodes = get<std::size_t>(j, "experiment", "num_nodes");
    c.rounds = get<std::size_t>(j, "experiment", "rounds");
    c.scheme = parse_scheme(get<std::string>(j, "experiment", "scheme"));
    c.seed = get<std::uint64_t>(j, "experiment", "seed");
    c.payload_bits = get<double>(j, "experiment", "payload_bits");
    c.gain_loss = parse_gain_loss(get<std::string>(j, "experiment", "gain_loss"));
    c.local_training = get<bool>(j, "experiment", "local_training");
    c.shared_init = get<bool>(j, "experiment", "shared_init");
    c.mobile = get<bool>(j, "experiment", "mobile");
    c.hidden = get<std::vector<std::size_t>>(j, "model", "hidden");
    c.train.learning_rate = get<double>(j, "train", "learning_rate");
    c.train.local_epochs = get<std::size_t>(j, "train", "local_epochs");
    c.train.batch_size = get<std::size_t>(j, "train", "batch_size");
    c.selector.theta = get<double>(j, "selector", "theta");
    c.selector.steps = get<std::size_t>(j, "selector", "steps");
    c.selector.step_size = get<double>(j, "selector", "step_size");
    c.selector.threshold = get<double>(j, "selector", "threshold");
    c.selector.init_w = get<double>(j, "selector", "init_w");
    c.selector.exclude_zero_gain = get<bool>(j, "selector", "exclude_zero_gain");
    c.gain.mu = get<double>(j, "gain", "mu");
    c.arena.width = get<double>(j, "arena", "width");
    c.arena.height = get<double>(j, "arena", "height");
    c.mobility.speed_min = get<double>(j, "mobility", "speed_min");
    c.mobility.speed_max = get<double>(j, "mobility", "speed_max");
    c.mobility.pause_rounds = get<int>(j, "mobility", "pause_rounds");
    c.mobility.dt = get<double>(j, "mobility", "dt");
    c.radio.p_tx_dbm_min = get<double>(j, "radio", "p_tx_dbm_min");
    c.radio.p_tx_dbm_max = get<double>(j, "radio", "p_tx_dbm_max");
    c.radio.bandwidth_hz_min = get<double>(j, "radio", "bandwidth_hz_min");
    c.radio.bandwidth_hz_max = get<double>(j, "radio", "bandwidth_hz_max");
    c.radio.g_tx_dbi = get<double>(j, "radio", "g_tx_dbi");
    c.radio.g_rx_dbi = get<double>(j, "radio", "g_rx_dbi");
    c.radio.freq_hz = get<double>(j, "radio", "freq_hz");
    c.radio.env_exp = get<double>(j, "radio", "env_exp");
    c.radio.noise_dbm_per_hz = get<double>(j, "radio", "noise_dbm_per_hz");
    c.radio.d_max_m = get<double>(j, "radio", "d_max_m");
    c.radio.light_speed = get<double>(j, "radio", "light_speed");
    c.radio.min_link_distance_m = get<double>(j, "radio", "min_link_distance_m");
    c.data.source = parse_source(get<std::string>(j, "data", "source"));
    c.data.alpha = get<double>(j, "data", "alpha");
    c.data.train_samples = get<std::size_t>(j, "data", "train_samples");
    c.data.test_samples = get<std::size_t>(j, "data", "test_samples");
    c.data.feature_dim = get<std::size_t>(j, "data", "feature_dim");
    c.data.num_classes = get<std::size_t>(j, "data", "num_classes");
    c.data.separation = get<double>(j, "data", "separation");
    c.data.idx_images = get<std::string>(j, "data", "idx_images");
    c.data.idx_labels = get<std::string>(j, "data", "idx_labels");
    c.data.idx_max_samples = get<std::size_t>(j, "data", "idx_max_samples");
    c.validate();
    return c;
}

ExperimentConfig load_config(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open config file " + path.string());
    json j;
    try {
        j = json::parse(in);
    } catch (const json::parse_error& e) {
        throw ConfigError(path.string() + ": " + e.what());
    }
    return from_json(j);
}

void apply_overrides(json& j, const std::vector<std::string>& overrides) {
    for (const auto& item : overrides) {
        const auto eq = item.find('=');
        const auto dot = item.find('.');
        if (eq == std::string::npos || dot == std::string::npos || dot > eq) {
            throw ConfigError("override '" + item + "' is not of the form section.key=value");
        }
        const std::string section = item.substr(0, dot);
        const std::string key = item.substr(dot + 1, eq - dot - 1);
        const std::string text = item.substr(eq + 1);
        json value = json::parse(text, nullptr, false);
        if (value.is_discarded()) value = text;
        j[section][key] = value;
    }
}

} // namespace ocdfl
