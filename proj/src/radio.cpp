#include "ocdfl/radio.hpp"

#include <cmath>
#include <string>

#include "ocdfl/errors.hpp"

namespace ocdfl::radio {

void RadioParams::validate() const {
    auto require = [](bool ok, const char* what) {
        if (!ok) throw ConfigError(std::string("radio: ") + what);
    };
    require(p_tx > 0.0, "p_tx must be > 0");
    require(bandwidth > 0.0, "bandwidth must be > 0");
    require(g_tx > 0.0 && g_rx > 0.0, "antenna gains must be > 0 (linear)");
    require(freq > 0.0, "freq must be > 0");
    require(env_exp >= 2.0, "env_exp must be >= 2");
    require(noise_density > 0.0, "noise_density must be > 0");
    require(d_max > 0.0, "d_max must be > 0");
    require(light_speed > 0.0, "light_speed must be > 0");
}

double dbm_to_watts(double dbm) { return std::pow(10.0, (dbm - 30.0) / 10.0); }
double watts_to_dbm(double watts) { return 10.0 * std::log10(watts) + 30.0; }
double db_to_linear(double db) { return std::pow(10.0, db / 10.0); }
double linear_to_db(double linear) { return 10.0 * std::log10(linear); }

double received_power(const RadioParams& params, double distance) {
    if (!(distance > 0.0)) {
        throw DomainError("received_power: distance must be > 0, got " + std::to_string(distance));
    }
    const double wavelength_term = params.light_speed / (4.0 * kPi * params.freq);
    return params.p_tx * params.g_tx * params.g_rx * wavelength_term * wavelength_term *
           std::pow(distance, -params.env_exp);
}

double channel_gain_db(const RadioParams& params, double distance) {
    return linear_to_db(received_power(params, distance) / params.p_tx);
}

double data_rate(const RadioParams& params, double p_rx) {
    if (p_rx < 0.0) throw DomainError("data_rate: received power must be >= 0");
    const double snr = p_rx / (params.noise_density * params.bandwidth);
    return params.bandwidth * std::log2(1.0 + snr);
}

double tx_energy(const RadioParams& params, double distance, double payload_bits) {
    if (!(payload_bits > 0.0)) throw DomainError("tx_energy: payload_bits must be > 0");
    const double rate = data_rate(params, received_power(params, distance));
    return params.p_tx * payload_bits / rate;
}

double max_energy(const RadioParams& params, double payload_bits) {
    return tx_energy(params, params.d_max, payload_bits);
}

double scaled_energy(const RadioParams& params, double distance, double payload_bits) {
    if (distance > params.d_max) {
        throw DomainError("scaled_energy: distance " + std::to_string(distance) +
                          " m exceeds range " + std::to_string(params.d_max) + " m");
    }
    return tx_energy(params, distance, payload_bits) / max_energy(params, payload_bits);
}

LinkBudget link_budget(const RadioParams& params, double distance, double payload_bits) {
    LinkBudget lb;
    lb.p_rx = received_power(params, distance);
    lb.rate = data_rate(params, lb.p_rx);
    lb.energy = params.p_tx * payload_bits / lb.rate;
    lb.energy_scaled = scaled_energy(params, distance, payload_bits);
    return lb;
}

} // namespace ocdfl::radio
