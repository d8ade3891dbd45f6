#include "ocdfl/topology.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "ocdfl/errors.hpp"

namespace ocdfl::topology {

void Arena::validate() const {
    if (!(width > 0.0) || !(height > 0.0)) {
        throw ConfigError("arena dimensions must be positive, got " + std::to_string(width) +
                          " x " + std::to_string(height));
    }
}

double Arena::diagonal() const { return std::hypot(width, height); }

double distance(const Position& a, const Position& b) { return std::hypot(a.x - b.x, a.y - b.y); }

void MobilityConfig::validate() const {
    if (!(speed_min > 0.0) || speed_max < speed_min) {
        throw ConfigError("mobility speeds must satisfy 0 < speed_min <= speed_max");
    }
    if (pause_rounds < 0) throw ConfigError("mobility pause_rounds must be >= 0");
    if (dt < 0.0) throw ConfigError("mobility dt must be >= 0");
}

Position random_position(const Arena& arena, Rng& rng) {
    const double x = uniform(rng, 0.0, arena.width);
    const double y = uniform(rng, 0.0, arena.height);
    return {x, y};
}

namespace {

WaypointState draw_waypoint(const Arena& arena, const MobilityConfig& cfg, Rng& rng) {
    WaypointState w;
    w.target = random_position(arena, rng);
    w.speed = cfg.speed_min == cfg.speed_max ? cfg.speed_min
                                             : uniform(rng, cfg.speed_min, cfg.speed_max);
    w.pause_remaining = cfg.pause_rounds;
    return w;
}

} // namespace

Mover spawn(const Arena& arena, const MobilityConfig& cfg, Rng& rng) {
    Mover m;
    m.position = random_position(arena, rng);
    m.waypoint = draw_waypoint(arena, cfg, rng);
    m.waypoint.pause_remaining = 0;
    return m;
}

void step_mobility(std::span<Mover> nodes, const Arena& arena, const MobilityConfig& cfg,
                   double dt, Rng& rng) {
    for (Mover& node : nodes) {
        WaypointState& wp = node.waypoint;
        if (wp.pause_remaining > 0) {
            --wp.pause_remaining;
            continue;
        }
        const double dx = wp.target.x - node.position.x;
        const double dy = wp.target.y - node.position.y;
        const double remaining = std::hypot(dx, dy);
        const double travel = wp.speed * dt;
        if (travel >= remaining) {
            node.position = wp.target;
            wp = draw_waypoint(arena, cfg, rng);
        } else {
            const double f = travel / remaining;
            node.position.x += f * dx;
            node.position.y += f * dy;
        }
        // Convex combination of two in-arena points; clamp only absorbs rounding.
        node.position.x = std::clamp(node.position.x, 0.0, arena.width);
        node.position.y = std::clamp(node.position.y, 0.0, arena.height);
    }
}

NeighborGraph::NeighborGraph(std::vector<std::vector<NodeId>> adjacency)
    : adjacency_(std::move(adjacency)) {
    for (auto& list : adjacency_) std::sort(list.begin(), list.end());
}

bool NeighborGraph::connected(NodeId i, NodeId j) const {
    const auto& list = adjacency_.at(i);
    return std::binary_search(list.begin(), list.end(), j);
}

std::size_t NeighborGraph::num_edges() const {
    std::size_t twice = 0;
    for (const auto& list : adjacency_) twice += list.size();
    return twice / 2;
}

NeighborGraph build_graph(std::span<const Position> positions, double d_max) {
    const std::size_t n = positions.size();
    std::vector<std::vector<NodeId>> adjacency(n);
    for (NodeId i = 0; i < n; ++i) {
        for (NodeId j = i + 1; j < n; ++j) {
            if (distance(positions[i], positions[j]) <= d_max) {
                adjacency[i].push_back(j);
                adjacency[j].push_back(i);
            }
        }
    }
    return NeighborGraph(std::move(adjacency));
}

} // namespace ocdfl::topology
