#pragma once

#include <cstddef>
#include <filesystem>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

#include "ocdfl/rng.hpp"

namespace ocdfl::select {

using NodeId = std::size_t;

/// One node's view of its neighborhood: scaled gains in [0, 1) and scaled
/// energies in (0, 1], aligned with `neighbor_ids`.
struct SelectionInstance {
    std::vector<NodeId> neighbor_ids;
    std::vector<double> gains;
    std::vector<double> energies;

    std::size_t size() const { return neighbor_ids.size(); }
    void validate() const;
};

struct SelectorConfig {
    double theta = 0.02;    // weight of the norm reward
    std::size_t steps = 500;
    double step_size = 50.0;
    double threshold = 0.5; // certainty threshold on beta
    double init_w = 1.0;
    /// Neighbors with zero gain are never selected (beta pinned to 0).
    bool exclude_zero_gain = true;

    void validate() const;
};

struct SelectionDecision {
    std::vector<double> betas;
    std::vector<NodeId> selected;
    double objective_value = 0.0;
    /// True when every gain was zero and the node transmits to nobody.
    bool skipped = false;
};

enum class Baseline { none, full };

double sigmoid(double x);

/// sum(sigma(w) g) / sum(sigma(w) E) + theta * |w|_2
double objective(std::span<const double> w, const SelectionInstance& inst, double theta);

/// Analytic gradient of `objective`. The norm term contributes theta * w / |w|
/// and nothing at w = 0.
std::vector<double> objective_grad(std::span<const double> w, const SelectionInstance& inst,
                                   double theta);

/// Gradient ascent from w = init_w, then beta >= threshold selects. An empty
/// thresholded set falls back to argmax beta; all-zero gains skip the round.
/// With `exclude_zero_gain`, the ascent runs over positive-gain neighbors only.
SelectionDecision optimize(const SelectionInstance& inst, const SelectorConfig& cfg);

SelectionDecision baseline_policy(Baseline kind, const SelectionInstance& inst);

/// Exhaustive search over nonempty subsets for max sum(g) / sum(E).
/// Returns positions into the instance; the first maximal subset in mask
/// order wins ties. Limited to 24 neighbors.
std::vector<std::size_t> brute_force_subset(const SelectionInstance& inst);

/// K neighbors with ids 0..K-1, gains uniform on [0, 1) and energies
/// uniform on (0, 1].
SelectionInstance random_instance(std::size_t num_neighbors, Rng& rng);

/// Neighbor ids of `positions`, sorted ascending.
std::vector<NodeId> ids_of(const SelectionInstance& inst, std::span<const std::size_t> positions);

/// Text dump, one neighbor per line: "id,gain,energy". Lines starting with
/// '#' are comments.
void write_instance(std::ostream& out, const SelectionInstance& inst);
SelectionInstance read_instance(std::istream& in, const std::string& source_name);
void save_instance(const SelectionInstance& inst, const std::filesystem::path& path);
SelectionInstance load_instance(const std::filesystem::path& path);

} // namespace ocdfl::select
