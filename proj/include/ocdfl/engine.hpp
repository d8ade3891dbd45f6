#pragma once

#include <cstddef>
#include <functional>
#include <iosfwd>
#include <string>
#include <vector>

#include "ocdfl/config.hpp"
#include "ocdfl/datagen.hpp"
#include "ocdfl/learner.hpp"
#include "ocdfl/radio.hpp"
#include "ocdfl/rng.hpp"
#include "ocdfl/selector.hpp"
#include "ocdfl/topology.hpp"

namespace ocdfl::engine {

using NodeId = std::size_t;

struct NodeState {
    topology::Mover mover;
    radio::RadioParams radio;
    learn::ModelParams model;
    data::Shard shard;
    double beacon_loss = 0.0; // loss advertised to neighbors this round
    Rng train_rng;
};

struct NodeMetrics {
    double loss = 0.0;
    double accuracy = 0.0;
    double tx_energy_j = 0.0;
    double delivered_gain = 0.0; // sum of raw gains over this node's transmissions
    std::size_t num_selected = 0;
    std::size_t num_received = 0;
    std::size_t num_neighbors = 0;
};

/// One model transmission.
struct Delivery {
    NodeId sender = 0;
    NodeId receiver = 0;
    double distance = 0.0;
    double energy_j = 0.0;
    double raw_gain = 0.0;
};

struct RoundMetrics {
    std::size_t round = 0;
    std::vector<NodeMetrics> nodes;
    std::vector<Delivery> deliveries;
    std::size_t skipped_senders = 0; // ocdfl nodes whose neighbors all had zero gain
};

/// Train/test split plus shards, as handed to a simulation.
struct Workload {
    data::Dataset train;
    data::Dataset test;
    std::vector<data::Shard> shards;
    std::vector<std::string> notes;
};

/// Builds the dataset (synthetic or IDX), the IID test split and the
/// Dirichlet shards described by `cfg`.
Workload make_workload(const ExperimentConfig& cfg);

/// Round-synchronous simulation of the peer-to-peer training loop. Each round:
/// move, rebuild the graph, train locally, exchange loss beacons, select
/// peers, charge transmit energy, deliver, aggregate, evaluate on the test set.
class Simulation {
public:
    Simulation(ExperimentConfig cfg, Workload workload);

    RoundMetrics run_round();

    const ExperimentConfig& config() const { return cfg_; }
    const std::vector<NodeState>& nodes() const { return nodes_; }
    std::vector<NodeState>& mutable_nodes() { return nodes_; }
    const topology::NeighborGraph& graph() const { return graph_; }
    std::size_t rounds_done() const { return round_; }
    const std::vector<std::string>& notes() const { return notes_; }
    /// Selection instance each node built in the last round (empty when the
    /// node had no neighbors or the scheme does not optimize).
    const std::vector<select::SelectionInstance>& last_instances() const { return instances_; }

private:
    double link_distance(NodeId a, NodeId b) const;
    select::SelectionInstance build_instance(NodeId sender) const;

    ExperimentConfig cfg_;
    data::Dataset train_;
    data::Dataset test_;
    std::vector<NodeState> nodes_;
    topology::NeighborGraph graph_;
    Rng mobility_rng_;
    std::size_t round_ = 0;
    std::vector<std::string> notes_;
    std::vector<select::SelectionInstance> instances_;
};

struct ExperimentResult {
    std::vector<RoundMetrics> rounds;
    std::vector<learn::ModelParams> final_models;
    std::vector<std::string> notes;
};

using RoundSink = std::function<void(const RoundMetrics&)>;

ExperimentResult run_experiment(const ExperimentConfig& cfg, const RoundSink& sink = {});

inline constexpr const char* kMetricsHeader =
    "round,node,scheme,loss,accuracy,tx_energy_j,delivered_gain,num_selected,num_received";

void write_metrics_header(std::ostream& out);
void write_metrics_rows(std::ostream& out, Scheme scheme, const RoundMetrics& metrics);

double total_energy(const std::vector<RoundMetrics>& rounds);
/// Mean test accuracy over nodes in the last round.
double final_mean_accuracy(const std::vector<RoundMetrics>& rounds);

} // namespace ocdfl::engine
