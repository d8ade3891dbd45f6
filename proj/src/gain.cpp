#include "ocdfl/gain.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <vector>

#include "ocdfl/errors.hpp"
#include "ocdfl/rng.hpp"

namespace ocdfl::gain {

void GainParams::validate() const {
    if (!(mu > 0.0)) throw ConfigError("gain: mu must be > 0");
}

GainValue knowledge_gain(double loss_sender, double loss_receiver, const GainParams& params) {
    GainValue g;
    g.raw = std::max(loss_receiver - loss_sender, 0.0);
    g.scaled = -std::expm1(-params.mu * g.raw);
    return g;
}

double euclidean_distance(std::span<const double> a, std::span<const double> b) {
    double s = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        const double d = a[i] - b[i];
        s += d * d;
    }
    return std::sqrt(s);
}

AggregationBounds prop1_check(std::span<const double> w_star, std::span<const double> w1,
                              std::span<const double> w2, double rel_tol) {
    if (w1.size() != w_star.size() || w2.size() != w_star.size()) {
        throw std::invalid_argument("prop1_check: vectors differ in dimension");
    }
    const double d1 = euclidean_distance(w_star, w1);
    const double d2 = euclidean_distance(w_star, w2);
    if (d1 > d2) {
        throw OrderingError("prop1_check: w1 must be at least as close to w* as w2");
    }
    std::vector<double> agg(w_star.size());
    for (std::size_t i = 0; i < agg.size(); ++i) agg[i] = 0.5 * (w1[i] + w2[i]);
    const double d_agg = euclidean_distance(w_star, agg);
    const double half_gap = 0.5 * euclidean_distance(w1, w2);

    const double slack = rel_tol * std::max({d1, d2, d_agg, half_gap, 1e-300});
    AggregationBounds out;
    out.closer_than_worse = d_agg <= d2 + slack;
    out.lower_bound = d1 - half_gap <= d_agg + slack;
    out.upper_bound = d_agg <= d1 + half_gap + slack;
    return out;
}

Prop1SuiteResult prop1_suite(std::size_t triples, std::span<const std::size_t> dims,
                             std::uint64_t seed, double rel_tol) {
    if (dims.empty()) throw std::invalid_argument("prop1_suite: no dimensions");
    Rng rng = make_stream(seed, 0x9a1);
    std::normal_distribution<double> normal(0.0, 1.0);
    std::uniform_real_distribution<double> log_scale(-3.0, 3.0);
    Prop1SuiteResult result;
    std::vector<double> w_star, w1, w2;
    for (std::size_t t = 0; t < triples; ++t) {
        const std::size_t dim = dims[t % dims.size()];
        auto draw = [&](std::vector<double>& v) {
            const double scale = std::pow(10.0, log_scale(rng));
            v.resize(dim);
            for (auto& x : v) x = scale * normal(rng);
        };
        draw(w_star);
        draw(w1);
        draw(w2);
        if (euclidean_distance(w_star, w1) > euclidean_distance(w_star, w2)) std::swap(w1, w2);
        const auto bounds = prop1_check(w_star, w1, w2, rel_tol);
        ++result.triples;
        result.closer_than_worse_failures += !bounds.closer_than_worse;
        result.lower_bound_failures += !bounds.lower_bound;
        result.upper_bound_failures += !bounds.upper_bound;
        result.violations += !bounds.all();
    }
    return result;
}

} // namespace ocdfl::gain
