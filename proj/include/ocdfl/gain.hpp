#pragma once

#include <cstddef>
#include <cstdint>
#include <span>

namespace ocdfl::gain {

struct GainParams {
    double mu = 2.0; // slope of the exponential scaling

    void validate() const;
};

struct GainValue {
    double raw = 0.0;    // max(l_receiver - l_sender, 0)
    double scaled = 0.0; // 1 - exp(-mu * raw), in [0, 1)
};

/// Gain of the receiver from taking the sender's model. Orientation matters:
/// a receiver that already has the lower loss gains nothing.
GainValue knowledge_gain(double loss_sender, double loss_receiver, const GainParams& params);

double euclidean_distance(std::span<const double> a, std::span<const double> b);

/// Outcome of the three aggregation bounds for w_agg = (w1 + w2) / 2, given
/// that w1 is at least as close to the optimum as w2:
///   closer_than_worse: |w* - w_agg| <= |w* - w2|
///   lower_bound:       |w* - w1| - |w2 - w1| / 2 <= |w* - w_agg|
///   upper_bound:       |w* - w_agg| <= |w* - w1| + |w2 - w1| / 2
struct AggregationBounds {
    bool closer_than_worse = false;
    bool lower_bound = false;
    bool upper_bound = false;

    bool all() const { return closer_than_worse && lower_bound && upper_bound; }
};

/// Evaluates the bounds with relative slack `rel_tol` (scaled by the largest
/// norm involved). Throws std::invalid_argument on a dimension mismatch and
/// OrderingError when w1 is farther from w* than w2.
AggregationBounds prop1_check(std::span<const double> w_star, std::span<const double> w1,
                              std::span<const double> w2, double rel_tol = 1e-9);

struct Prop1SuiteResult {
    std::size_t triples = 0;
    std::size_t violations = 0; // triples failing at least one bound
    std::size_t closer_than_worse_failures = 0;
    std::size_t lower_bound_failures = 0;
    std::size_t upper_bound_failures = 0;
};

/// Randomized check of the aggregation bounds. Triples cycle through `dims`;
/// each vector is Gaussian with a random per-vector scale, and w1/w2 are
/// swapped when needed so that w1 is the closer model.
Prop1SuiteResult prop1_suite(std::size_t triples, std::span<const std::size_t> dims,
                             std::uint64_t seed, double rel_tol = 1e-9);

} // namespace ocdfl::gain
