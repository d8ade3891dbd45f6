#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <vector>

#include "ocdfl/topology.hpp"

using namespace ocdfl;
using namespace ocdfl::topology;

namespace {

std::vector<Position> positions_of(const std::vector<Mover>& movers) {
    std::vector<Position> out;
    for (const auto& m : movers) out.push_back(m.position);
    return out;
}

std::vector<Mover> spawn_many(std::size_t n, const Arena& arena, const MobilityConfig& cfg, Rng& rng) {
    std::vector<Mover> movers;
    for (std::size_t i = 0; i < n; ++i) movers.push_back(spawn(arena, cfg, rng));
    return movers;
}

} // namespace

TEST_CASE("node sitting on its waypoint draws a new one without moving") {
    const Arena arena;
    const MobilityConfig cfg;
    Rng rng = make_stream(3, 0);
    Mover m;
    m.position = {1000.0, 2000.0};
    m.waypoint = {{1000.0, 2000.0}, 10.0, 0};
    std::vector<Mover> nodes{m};
    step_mobility(nodes, arena, cfg, 60.0, rng);
    CHECK(nodes[0].position == Position{1000.0, 2000.0});
    CHECK_FALSE(nodes[0].waypoint.target == Position{1000.0, 2000.0});
    CHECK(nodes[0].waypoint.speed >= cfg.speed_min);
    CHECK(nodes[0].waypoint.speed <= cfg.speed_max);
}

TEST_CASE("dt = 0 leaves positions unchanged") {
    const Arena arena;
    const MobilityConfig cfg;
    Rng rng = make_stream(4, 0);
    auto nodes = spawn_many(20, arena, cfg, rng);
    const auto before = positions_of(nodes);
    step_mobility(nodes, arena, cfg, 0.0, rng);
    CHECK(positions_of(nodes) == before);
}

TEST_CASE("straight-line travel along the waypoint segment") {
    const Arena arena;
    const MobilityConfig cfg;
    Rng rng = make_stream(5, 0);
    Mover m;
    m.position = {0.0, 0.0};
    m.waypoint = {{3000.0, 4000.0}, 10.0, 0};
    std::vector<Mover> nodes{m};
    step_mobility(nodes, arena, cfg, 100.0, rng);

    // Independent scalar kinematics: 1000 m of a 5000 m segment.
    const double seg = std::sqrt(3000.0 * 3000.0 + 4000.0 * 4000.0);
    const double frac = 10.0 * 100.0 / seg;
    CHECK(nodes[0].position.x == doctest::Approx(frac * 3000.0).epsilon(1e-12));
    CHECK(nodes[0].position.y == doctest::Approx(frac * 4000.0).epsilon(1e-12));
    CHECK(nodes[0].position.x == doctest::Approx(600.0));
    CHECK(nodes[0].position.y == doctest::Approx(800.0));
    CHECK(nodes[0].waypoint.target == Position{3000.0, 4000.0});
}

TEST_CASE("overshooting travel clamps at the waypoint and honors pauses") {
    const Arena arena;
    MobilityConfig cfg;
    cfg.pause_rounds = 2;
    Rng rng = make_stream(6, 0);
    Mover m;
    m.position = {0.0, 0.0};
    m.waypoint = {{30.0, 40.0}, 10.0, 0};
    std::vector<Mover> nodes{m};
    step_mobility(nodes, arena, cfg, 60.0, rng);
    CHECK(nodes[0].position == Position{30.0, 40.0});
    CHECK(nodes[0].waypoint.pause_remaining == 2);
    step_mobility(nodes, arena, cfg, 60.0, rng);
    step_mobility(nodes, arena, cfg, 60.0, rng);
    CHECK(nodes[0].position == Position{30.0, 40.0});
    CHECK(nodes[0].waypoint.pause_remaining == 0);
    step_mobility(nodes, arena, cfg, 60.0, rng);
    CHECK_FALSE(nodes[0].position == Position{30.0, 40.0});
}

TEST_CASE("graph boundary is inclusive") {
    const std::vector<Position> pos{{0.0, 0.0}, {2000.0, 0.0}};
    const auto g = build_graph(pos, 2000.0);
    CHECK(g.connected(0, 1));
    CHECK(g.connected(1, 0));
    CHECK_FALSE(build_graph(pos, 1999.999).connected(0, 1));
}

TEST_CASE("single node has no neighbors") {
    const std::vector<Position> pos{{10.0, 10.0}};
    const auto g = build_graph(pos, 2000.0);
    CHECK(g.num_nodes() == 1);
    CHECK(g.neighbors(0).empty());
}

TEST_CASE("nodes on a line") {
    const std::vector<Position> pos{{0.0, 0.0}, {1500.0, 0.0}, {3500.0, 0.0}};
    const auto g = build_graph(pos, 2000.0);
    CHECK(g.neighbors(0) == std::vector<NodeId>{1});
    CHECK(g.neighbors(1) == std::vector<NodeId>{0, 2});
    CHECK(g.neighbors(2) == std::vector<NodeId>{1});
    CHECK(g.num_edges() == 2);
}

TEST_CASE("graph is symmetric, irreflexive and matches pairwise distances") {
    const Arena arena;
    Rng rng = make_stream(7, 0);
    for (int trial = 0; trial < 1000; ++trial) {
        const std::size_t n = 1 + static_cast<std::size_t>(trial % 25);
        std::vector<Position> pos;
        for (std::size_t i = 0; i < n; ++i) pos.push_back(random_position(arena, rng));
        const double d_max = uniform(rng, 0.0, 4000.0);
        const auto g = build_graph(pos, d_max);
        for (NodeId i = 0; i < n; ++i) {
            CHECK_FALSE(g.connected(i, i));
            for (NodeId j = 0; j < n; ++j) {
                if (i == j) continue;
                const double dx = pos[i].x - pos[j].x, dy = pos[i].y - pos[j].y;
                const bool expect = std::sqrt(dx * dx + dy * dy) <= d_max;
                REQUIRE(g.connected(i, j) == expect);
                REQUIRE(g.connected(i, j) == g.connected(j, i));
            }
        }
    }
}

TEST_CASE("positions stay inside the arena") {
    const Arena arena{1000.0, 300.0};
    MobilityConfig cfg;
    cfg.speed_min = 1.0;
    cfg.speed_max = 50.0;
    Rng rng = make_stream(8, 0);
    auto nodes = spawn_many(10, arena, cfg, rng);
    for (int step = 0; step < 10000; ++step) {
        step_mobility(nodes, arena, cfg, cfg.dt, rng);
        for (const auto& m : nodes) {
            REQUIRE(m.position.x >= 0.0);
            REQUIRE(m.position.x <= arena.width);
            REQUIRE(m.position.y >= 0.0);
            REQUIRE(m.position.y <= arena.height);
        }
    }
}

TEST_CASE("range extremes give complete and empty graphs") {
    const Arena arena;
    Rng rng = make_stream(9, 0);
    std::vector<Position> pos;
    for (int i = 0; i < 20; ++i) pos.push_back(random_position(arena, rng));
    const auto complete = build_graph(pos, arena.diagonal());
    CHECK(complete.num_edges() == 20 * 19 / 2);
    const auto empty = build_graph(pos, 0.0);
    CHECK(empty.num_edges() == 0);
}

TEST_CASE("identical seeds give bitwise identical trajectories") {
    const Arena arena;
    const MobilityConfig cfg;
    auto trajectory = [&](std::uint64_t seed) {
        Rng rng = make_stream(seed, 1);
        auto nodes = spawn_many(20, arena, cfg, rng);
        std::vector<Position> all;
        for (int r = 0; r < 200; ++r) {
            step_mobility(nodes, arena, cfg, cfg.dt, rng);
            const auto p = positions_of(nodes);
            all.insert(all.end(), p.begin(), p.end());
        }
        return all;
    };
    CHECK(trajectory(11) == trajectory(11));
    CHECK_FALSE(trajectory(11) == trajectory(12));
}

TEST_CASE("invalid arena and mobility settings are rejected") {
    CHECK_THROWS((Arena{0.0, 10.0}.validate()));
    MobilityConfig cfg;
    cfg.speed_min = 20.0;
    CHECK_THROWS(cfg.validate());
}
