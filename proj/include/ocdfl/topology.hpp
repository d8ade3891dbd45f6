#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "ocdfl/rng.hpp"

namespace ocdfl::topology {

using NodeId = std::size_t;

struct Arena {
    double width = 5000.0;  // m
    double height = 5000.0; // m

    void validate() const;
    double diagonal() const;
};

struct Position {
    double x = 0.0;
    double y = 0.0;

    friend bool operator==(const Position&, const Position&) = default;
};

double distance(const Position& a, const Position& b);

struct MobilityConfig {
    double speed_min = 5.0;  // m/s
    double speed_max = 15.0; // m/s
    int pause_rounds = 0;
    double dt = 60.0; // seconds per FL round

    void validate() const;
};

struct WaypointState {
    Position target;
    double speed = 0.0;
    int pause_remaining = 0;
};

/// Position plus random-waypoint state of one node.
struct Mover {
    Position position;
    WaypointState waypoint;
};

Position random_position(const Arena& arena, Rng& rng);

/// Uniform position in the arena with a fresh waypoint and speed.
Mover spawn(const Arena& arena, const MobilityConfig& cfg, Rng& rng);

/// Advance every node toward its waypoint by speed*dt, clamped at the
/// waypoint. A node that reaches its waypoint draws a new target and speed
/// (leftover travel time is discarded) and starts its pause.
void step_mobility(std::span<Mover> nodes, const Arena& arena, const MobilityConfig& cfg,
                   double dt, Rng& rng);

/// Undirected, irreflexive adjacency; each neighbor list sorted ascending.
class NeighborGraph {
public:
    NeighborGraph() = default;
    explicit NeighborGraph(std::vector<std::vector<NodeId>> adjacency);

    std::size_t num_nodes() const { return adjacency_.size(); }
    const std::vector<NodeId>& neighbors(NodeId i) const { return adjacency_.at(i); }
    std::size_t degree(NodeId i) const { return adjacency_.at(i).size(); }
    bool connected(NodeId i, NodeId j) const;
    std::size_t num_edges() const;

private:
    std::vector<std::vector<NodeId>> adjacency_;
};

/// Edge (i, j) iff i != j and distance <= d_max (inclusive boundary).
NeighborGraph build_graph(std::span<const Position> positions, double d_max);

} // namespace ocdfl::topology
