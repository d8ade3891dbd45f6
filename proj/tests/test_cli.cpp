#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <json.hpp>
#include <sstream>

#include "ocdfl/cli.hpp"
#include "ocdfl/config.hpp"
#include "ocdfl/errors.hpp"
#include "ocdfl/selector.hpp"

using namespace ocdfl;
using namespace ocdfl::cli;
namespace fs = std::filesystem;
using nlohmann::json;

namespace {

fs::path scratch_dir(const std::string& name) {
    const auto dir = fs::temp_directory_path() / "ocdfl_test_cli" / name;
    fs::remove_all(dir);
    fs::create_directories(dir);
    return dir;
}

fs::path write_config(const fs::path& dir, const json& j) {
    const auto path = dir / "config.json";
    std::ofstream(path) << j.dump(2);
    return path;
}

// Small enough to run in well under a second.
std::vector<std::string> tiny() {
    return {"--set", "experiment.num_nodes=5",   "--set", "experiment.rounds=3",
            "--set", "data.train_samples=300",   "--set", "data.test_samples=100",
            "--set", "model.hidden=[8]"};
}

std::vector<std::string> concat(std::vector<std::string> a, const std::vector<std::string>& b) {
    a.insert(a.end(), b.begin(), b.end());
    return a;
}

std::string slurp(const fs::path& p) {
    std::ifstream in(p);
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

} // namespace

TEST_CASE("config file plus flag override") {
    const auto dir = scratch_dir("cfg");
    const auto path = write_config(dir, {{"experiment", {{"seed", 3}, {"rounds", 12}}}});
    const auto spec = parse_and_validate({"run", "--config", path.string(), "--seed", "7"});
    CHECK(spec.command == Command::run);
    CHECK(spec.config.seed == 7);
    CHECK(spec.config.rounds == 12);
    CHECK(spec.schemes == std::vector<Scheme>{Scheme::ocdfl});
}

TEST_CASE("validation errors") {
    CHECK_THROWS_AS(parse_and_validate({"run", "--theta", "-1"}), ConfigError);
    CHECK_THROWS_AS(parse_and_validate({"run", "--scheme", "gossip"}), UsageError);
    CHECK_THROWS_AS(parse_and_validate({"run", "--config", "/nonexistent/x.json"}), UsageError);
    CHECK_THROWS_AS(parse_and_validate({"run", "--bogus"}), UsageError);
    CHECK_THROWS_AS(parse_and_validate({}), UsageError);
    CHECK_THROWS_AS(parse_and_validate({"run", "--set", "selector.nope=1"}), ConfigError);
    CHECK_THROWS_AS(parse_and_validate({"run", "--set", "experiment.rounds=-2"}), ConfigError);
    CHECK_THROWS_AS(parse_and_validate({"run", "--set", "experiment.num_nodes=0"}), ConfigError);
    CHECK_THROWS_AS(parse_and_validate({"sweep-theta", "--scheme", "ocdfl,full"}), UsageError);
    CHECK_THROWS_AS(parse_and_validate({"selector-oracle"}), UsageError);
    try {
        parse_and_validate({"run", "--theta", "-1"});
    } catch (const std::exception& e) {
        CHECK(std::string(e.what()).find("--theta") != std::string::npos);
    }
}

TEST_CASE("theta grid") {
    const auto spec = parse_and_validate({"sweep-theta"});
    CHECK(spec.grid.size() == 6);
    CHECK(spec.grid == std::vector<double>{0, 0.005, 0.01, 0.02, 0.05, 0.1});
    CHECK(parse_grid("0.5").size() == 1);
    CHECK_THROWS(parse_grid("0,abc"));
    CHECK_THROWS(parse_grid("0,-0.1"));
    CHECK_THROWS(parse_grid(""));
}

TEST_CASE("scheme lists") {
    const auto spec = parse_and_validate({"run", "--scheme", "ocdfl,full,none"});
    CHECK(spec.schemes == std::vector<Scheme>{Scheme::ocdfl, Scheme::full, Scheme::none});
}

TEST_CASE("config JSON round trip and strictness") {
    ExperimentConfig cfg;
    cfg.seed = 42;
    cfg.selector.theta = 0.07;
    cfg.hidden = {12, 7};
    const auto back = from_json(to_json(cfg));
    CHECK(to_json(back) == to_json(cfg));
    CHECK(back.seed == 42);

    json j = to_json(cfg);
    j["radio"]["unknown_key"] = 1;
    CHECK_THROWS_AS(from_json(j), ConfigError);
    json k = json::object();
    k["experiment"]["local_training"] = "yes";
    CHECK_THROWS_AS(from_json(k), ConfigError);

    json m = json::object();
    apply_overrides(m, {"experiment.scheme=full", "selector.theta=0.5"});
    const auto o = from_json(m);
    CHECK(o.scheme == Scheme::full);
    CHECK(o.selector.theta == 0.5);
    CHECK_THROWS(apply_overrides(m, {"no_equals_sign"}));
}

TEST_CASE("median of selected counts") {
    CHECK(median_selected({5, 3, 1, 2, 4}) == 3.0);
    CHECK(median_selected({4, 2}) == 3.0);
    CHECK(median_selected({}) == 0.0);
}

TEST_CASE("run writes metrics and a manifest") {
    const auto dir = scratch_dir("run");
    const auto spec = parse_and_validate(
        concat({"run", "--scheme", "ocdfl,none", "--out", dir.string(), "--checkpoints"}, tiny()));
    std::ostringstream out, err;
    REQUIRE(execute(spec, out, err) == kExitOk);

    const auto csv = slurp(dir / "metrics_ocdfl.csv");
    CHECK(csv.rfind("round,node,scheme,loss,accuracy,tx_energy_j,delivered_gain,num_selected,num_received\n", 0) == 0);
    CHECK(std::count(csv.begin(), csv.end(), '\n') == 1 + 3 * 5);
    CHECK(fs::exists(dir / "metrics_none.csv"));
    CHECK(fs::exists(dir / "models_ocdfl" / "node0.ckpt"));

    const auto manifest = json::parse(slurp(dir / "manifest.json"));
    CHECK(manifest.contains("code_version"));
    CHECK(manifest["seed"] == 1);
    CHECK(manifest["config"]["experiment"]["num_nodes"] == 5);
    CHECK(manifest["schemes"] == json::array({"ocdfl", "none"}));
    CHECK(from_json(manifest["config"]).rounds == 3);

    // Same arguments, same bytes.
    const auto again = scratch_dir("run_again");
    const auto spec2 = parse_and_validate(
        concat({"run", "--scheme", "ocdfl,none", "--out", again.string(), "--checkpoints"}, tiny()));
    REQUIRE(execute(spec2, out, err) == kExitOk);
    CHECK(slurp(again / "metrics_ocdfl.csv") == csv);
}

TEST_CASE("selector oracle on a dumped instance") {
    const auto dir = scratch_dir("oracle");
    select::SelectionInstance inst;
    inst.neighbor_ids = {0, 1, 2};
    inst.gains = {0.9, 0.5, 0.1};
    inst.energies = {0.9, 0.3, 0.2};
    select::save_instance(inst, dir / "k3.txt");
    std::ostringstream out, err;
    CHECK(execute(parse_and_validate({"selector-oracle", "--instance", (dir / "k3.txt").string()}), out, err) ==
          kExitOk);
    CHECK(out.str().find("1") != std::string::npos);
}

TEST_CASE("dump-instance writes instances the oracle can read") {
    const auto dir = scratch_dir("dump");
    std::ostringstream out, err;
    REQUIRE(execute(parse_and_validate({"dump-instance", "--random", "--neighbors", "6", "--out", dir.string()}),
                    out, err) == kExitOk);
    REQUIRE(execute(parse_and_validate(concat({"dump-instance", "--round", "2", "--node", "1", "--out", dir.string()},
                                              tiny())),
                    out, err) == kExitOk);
    std::size_t files = 0;
    for (const auto& e : fs::directory_iterator(dir)) {
        ++files;
        const auto path = e.path().string();
        CHECK(path.find("instance_") != std::string::npos);
        if (fs::file_size(e.path()) > 20) CHECK_NOTHROW(select::load_instance(e.path()));
    }
    CHECK(files == 2);
}

TEST_CASE("prop1 suite and random-instance sweep") {
    const auto dir = scratch_dir("suite");
    std::ostringstream out, err;
    CHECK(execute(parse_and_validate({"prop1-suite", "--triples", "2000", "--out", dir.string()}), out, err) ==
          kExitOk);
    CHECK(out.str().find("0 violations") != std::string::npos);

    REQUIRE(execute(parse_and_validate({"sweep-theta", "--instances", "20", "--out", dir.string()}), out, err) ==
            kExitOk);
    const auto summary = slurp(dir / "theta_sweep.csv");
    CHECK(summary.rfind("theta,median_selected\n", 0) == 0);
    CHECK(std::count(summary.begin(), summary.end(), '\n') == 7);
}
