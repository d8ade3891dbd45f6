#pragma once

namespace ocdfl::radio {

inline constexpr double kPi = 3.14159265358979323846;

/// Link parameters of a transmitting node, all in linear units.
struct RadioParams {
    double p_tx = 0.1;               // W
    double bandwidth = 10e6;         // Hz
    double g_tx = 1.0;               // linear
    double g_rx = 1.0;               // linear
    double freq = 1e9;               // Hz
    double env_exp = 2.0;            // path-loss exponent
    double noise_density = 3.98e-21; // W/Hz
    double d_max = 2000.0;           // m
    double light_speed = 3e8;        // m/s

    void validate() const;
};

struct LinkBudget {
    double p_rx = 0.0;          // W
    double rate = 0.0;          // bit/s
    double energy = 0.0;        // J
    double energy_scaled = 0.0; // E / E_max
};

double dbm_to_watts(double dbm);
double watts_to_dbm(double watts);
double db_to_linear(double db);
double linear_to_db(double linear);

/// Friis: P_t G_t G_r (c / 4 pi f)^2 d^-n. Throws DomainError for d <= 0.
double received_power(const RadioParams& params, double distance);

/// Path loss in dB, 10 log10(P_r / P_t).
double channel_gain_db(const RadioParams& params, double distance);

/// Shannon-Hartley: B log2(1 + P_r / (N_0 B)).
double data_rate(const RadioParams& params, double p_rx);

/// P_t S / rate(d). Throws DomainError for d <= 0 or payload_bits <= 0.
double tx_energy(const RadioParams& params, double distance, double payload_bits);

/// Energy of a transmission to a node at the range edge d_max.
double max_energy(const RadioParams& params, double payload_bits);

/// E(d) / E_max, in (0, 1] for d in (0, d_max]. Throws DomainError outside.
double scaled_energy(const RadioParams& params, double distance, double payload_bits);

LinkBudget link_budget(const RadioParams& params, double distance, double payload_bits);

} // namespace ocdfl::radio
