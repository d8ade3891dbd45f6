#include "ocdfl/selector.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <sstream>

#include "ocdfl/errors.hpp"
#include "ocdfl/format.hpp"

namespace ocdfl::select {

void SelectionInstance::validate() const {
    if (neighbor_ids.empty()) throw std::invalid_argument("selection instance has no neighbors");
    if (gains.size() != neighbor_ids.size() || energies.size() != neighbor_ids.size()) {
        throw std::invalid_argument("selection instance vectors differ in length");
    }
    for (double g : gains) {
        if (!(g >= 0.0 && g < 1.0)) throw std::invalid_argument("scaled gain outside [0, 1)");
    }
    for (double e : energies) {
        if (!(e > 0.0)) throw std::invalid_argument("scaled energy must be > 0");
    }
    std::vector<NodeId> ids = neighbor_ids;
    std::sort(ids.begin(), ids.end());
    if (std::adjacent_find(ids.begin(), ids.end()) != ids.end()) {
        throw std::invalid_argument("selection instance repeats a neighbor id");
    }
}

void SelectorConfig::validate() const {
    if (!(theta >= 0.0)) throw ConfigError("selector: theta must be >= 0");
    if (steps == 0) throw ConfigError("selector: steps must be >= 1");
    if (!(step_size > 0.0)) throw ConfigError("selector: step_size must be > 0");
    if (!(threshold > 0.0 && threshold < 1.0)) throw ConfigError("selector: threshold must be in (0, 1)");
    if (!std::isfinite(init_w)) throw ConfigError("selector: init_w must be finite");
}

double sigmoid(double x) {
    if (x >= 0.0) return 1.0 / (1.0 + std::exp(-x));
    const double e = std::exp(x);
    return e / (1.0 + e);
}

namespace {

double l2_norm(std::span<const double> w) {
    double s = 0.0;
    for (double v : w) s += v * v;
    return std::sqrt(s);
}

struct Ratio {
    double numerator = 0.0;
    double denominator = 0.0;
};

Ratio weighted_sums(std::span<const double> w, const SelectionInstance& inst) {
    Ratio r;
    for (std::size_t k = 0; k < w.size(); ++k) {
        const double beta = sigmoid(w[k]);
        r.numerator += beta * inst.gains[k];
        r.denominator += beta * inst.energies[k];
    }
    return r;
}

void check_size(std::span<const double> w, const SelectionInstance& inst) {
    if (w.size() != inst.size()) throw std::invalid_argument("selector: |w| differs from instance size");
}

} // namespace

double objective(std::span<const double> w, const SelectionInstance& inst, double theta) {
    check_size(w, inst);
    const Ratio r = weighted_sums(w, inst);
    return r.numerator / r.denominator + theta * l2_norm(w);
}

std::vector<double> objective_grad(std::span<const double> w, const SelectionInstance& inst,
                                   double theta) {
    check_size(w, inst);
    const Ratio r = weighted_sums(w, inst);
    const double ratio = r.numerator / r.denominator;
    const double norm = l2_norm(w);
    std::vector<double> grad(w.size());
    for (std::size_t k = 0; k < w.size(); ++k) {
        // d sigma / dw = sigma(w) sigma(-w), stable for large |w|.
        const double dbeta = sigmoid(w[k]) * sigmoid(-w[k]);
        grad[k] = dbeta * (inst.gains[k] - ratio * inst.energies[k]) / r.denominator;
        if (norm > 0.0) grad[k] += theta * w[k] / norm;
    }
    return grad;
}

SelectionDecision optimize(const SelectionInstance& inst, const SelectorConfig& cfg) {
    inst.validate();
    cfg.validate();
    SelectionDecision d;
    d.betas.assign(inst.size(), 0.0);
    if (std::all_of(inst.gains.begin(), inst.gains.end(), [](double g) { return g == 0.0; })) {
        d.skipped = true;
        return d;
    }

    // Positions taking part in the ascent.
    std::vector<std::size_t> active;
    for (std::size_t k = 0; k < inst.size(); ++k) {
        if (!cfg.exclude_zero_gain || inst.gains[k] > 0.0) active.push_back(k);
    }
    SelectionInstance sub;
    for (std::size_t k : active) {
        sub.neighbor_ids.push_back(inst.neighbor_ids[k]);
        sub.gains.push_back(inst.gains[k]);
        sub.energies.push_back(inst.energies[k]);
    }

    std::vector<double> w(sub.size(), cfg.init_w);
    for (std::size_t step = 0; step < cfg.steps; ++step) {
        const auto grad = objective_grad(w, sub, cfg.theta);
        for (std::size_t k = 0; k < w.size(); ++k) w[k] += cfg.step_size * grad[k];
    }

    for (std::size_t j = 0; j < active.size(); ++j) {
        d.betas[active[j]] = sigmoid(w[j]);
        if (d.betas[active[j]] >= cfg.threshold) d.selected.push_back(sub.neighbor_ids[j]);
    }
    if (d.selected.empty()) {
        const auto best = std::max_element(w.begin(), w.end()) - w.begin();
        d.selected.push_back(sub.neighbor_ids[static_cast<std::size_t>(best)]);
    }
    std::sort(d.selected.begin(), d.selected.end());
    d.objective_value = objective(w, sub, cfg.theta);
    return d;
}

SelectionDecision baseline_policy(Baseline kind, const SelectionInstance& inst) {
    SelectionDecision d;
    const double beta = kind == Baseline::full ? 1.0 : 0.0;
    d.betas.assign(inst.size(), beta);
    if (kind == Baseline::full) {
        d.selected = inst.neighbor_ids;
        std::sort(d.selected.begin(), d.selected.end());
        double g = 0.0, e = 0.0;
        for (std::size_t k = 0; k < inst.size(); ++k) {
            g += inst.gains[k];
            e += inst.energies[k];
        }
        d.objective_value = e > 0.0 ? g / e : 0.0;
    }
    return d;
}

std::vector<std::size_t> brute_force_subset(const SelectionInstance& inst) {
    inst.validate();
    const std::size_t k = inst.size();
    if (k > 24) throw std::invalid_argument("brute_force_subset: too many neighbors");
    std::uint32_t best_mask = 1;
    double best_value = -1.0;
    for (std::uint32_t mask = 1; mask < (1u << k); ++mask) {
        double g = 0.0, e = 0.0;
        for (std::size_t j = 0; j < k; ++j) {
            if (mask & (1u << j)) {
                g += inst.gains[j];
                e += inst.energies[j];
            }
        }
        const double value = g / e;
        if (value > best_value) {
            best_value = value;
            best_mask = mask;
        }
    }
    std::vector<std::size_t> positions;
    for (std::size_t j = 0; j < k; ++j) {
        if (best_mask & (1u << j)) positions.push_back(j);
    }
    return positions;
}

SelectionInstance random_instance(std::size_t num_neighbors, Rng& rng) {
    SelectionInstance inst;
    for (std::size_t k = 0; k < num_neighbors; ++k) {
        inst.neighbor_ids.push_back(k);
        inst.gains.push_back(uniform(rng, 0.0, 1.0));
        inst.energies.push_back(1.0 - uniform(rng, 0.0, 1.0));
    }
    return inst;
}

std::vector<NodeId> ids_of(const SelectionInstance& inst, std::span<const std::size_t> positions) {
    std::vector<NodeId> ids;
    ids.reserve(positions.size());
    for (std::size_t p : positions) ids.push_back(inst.neighbor_ids.at(p));
    std::sort(ids.begin(), ids.end());
    return ids;
}

void write_instance(std::ostream& out, const SelectionInstance& inst) {
    out << "# id,gain,energy\n";
    for (std::size_t k = 0; k < inst.size(); ++k) {
        out << inst.neighbor_ids[k] << ',' << text::shortest(inst.gains[k]) << ','
            << text::shortest(inst.energies[k]) << '\n';
    }
}

SelectionInstance read_instance(std::istream& in, const std::string& source_name) {
    SelectionInstance inst;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty() || line[0] == '#') continue;
        std::istringstream fields(line);
        std::string id, gain, energy;
        if (!std::getline(fields, id, ',') || !std::getline(fields, gain, ',') ||
            !std::getline(fields, energy)) {
            throw FormatError(source_name + ":" + std::to_string(line_no) +
                              ": expected id,gain,energy");
        }
        try {
            inst.neighbor_ids.push_back(std::stoull(id));
            inst.gains.push_back(std::stod(gain));
            inst.energies.push_back(std::stod(energy));
        } catch (const std::exception&) {
            throw FormatError(source_name + ":" + std::to_string(line_no) + ": bad number");
        }
    }
    try {
        inst.validate();
    } catch (const std::invalid_argument& e) {
        throw FormatError(source_name + ": " + e.what());
    }
    return inst;
}

void save_instance(const SelectionInstance& inst, const std::filesystem::path& path) {
    std::ofstream out(path);
    if (!out) throw FormatError(path.string() + ": cannot open for writing");
    write_instance(out, inst);
}

SelectionInstance load_instance(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw FormatError(path.string() + ": cannot open");
    return read_instance(in, path.string());
}

} // namespace ocdfl::select
