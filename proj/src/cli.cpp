#include "ocdfl/cli.hpp"

#include <algorithm>
#include <fstream>
#include <iomanip>
#include <ostream>
#include <sstream>

#include <CLI11.hpp>

#include "ocdfl/engine.hpp"
#include "ocdfl/format.hpp"
#include "ocdfl/gain.hpp"
#include "ocdfl/selector.hpp"

#ifndef OCDFL_VERSION
#define OCDFL_VERSION "unknown"
#endif

namespace ocdfl::cli {

namespace fs = std::filesystem;
using nlohmann::json;

std::vector<double> parse_grid(const std::string& text) {
    std::vector<double> grid;
    std::stringstream ss(text);
    std::string item;
    while (std::getline(ss, item, ',')) {
        std::size_t used = 0;
        double v = 0.0;
        try {
            v = std::stod(item, &used);
        } catch (const std::exception&) {
            used = 0;
        }
        if (used == 0 || used != item.size()) throw UsageError("--grid: bad entry '" + item + "'");
        if (v < 0.0) throw UsageError("--grid: theta must be >= 0, got " + item);
        grid.push_back(v);
    }
    if (grid.empty()) throw UsageError("--grid: empty list");
    return grid;
}

namespace {

const char* command_name(Command c) {
    switch (c) {
    case Command::run: return "run";
    case Command::sweep_theta: return "sweep-theta";
    case Command::prop1_suite: return "prop1-suite";
    case Command::selector_oracle: return "selector-oracle";
    case Command::dump_instance: return "dump-instance";
    }
    return "?";
}

// Flags shared by every subcommand.
struct CommonFlags {
    std::string config;
    std::vector<std::string> sets;
    std::string out = "out";
    std::string scheme;
    std::optional<double> theta;
    std::optional<double> alpha;
    std::optional<long long> rounds;
    std::optional<long long> seed;
    std::string dataset;
    std::string idx_images;
    std::string idx_labels;
};

void add_common(CLI::App* app, CommonFlags& f) {
    app->add_option("--config", f.config, "Experiment config (JSON)");
    app->add_option("--set", f.sets, "Override, section.key=value (repeatable)");
    app->add_option("--out", f.out, "Output directory");
    app->add_option("--scheme", f.scheme, "ocdfl | full | none (run accepts a comma list)");
    app->add_option("--theta", f.theta, "Regularization weight");
    app->add_option("--alpha", f.alpha, "Dirichlet concentration");
    app->add_option("--rounds", f.rounds, "Number of rounds");
    app->add_option("--seed", f.seed, "Experiment seed");
    app->add_option("--dataset", f.dataset, "synthetic | idx");
    app->add_option("--idx-images", f.idx_images, "IDX image file");
    app->add_option("--idx-labels", f.idx_labels, "IDX label file");
}

std::vector<Scheme> parse_schemes(const std::string& text) {
    std::vector<Scheme> out;
    std::stringstream ss(text);
    std::string item;
    while (std::getline(ss, item, ',')) {
        try {
            out.push_back(parse_scheme(item));
        } catch (const ConfigError& e) {
            throw UsageError(std::string("--scheme: ") + e.what());
        }
    }
    if (out.empty()) throw UsageError("--scheme: empty list");
    return out;
}

} // namespace

RunSpec parse_and_validate(const std::vector<std::string>& args) {
    CLI::App app{"Decentralized federated learning simulator with energy-aware peer selection"};
    app.require_subcommand(1);
    app.set_help_flag();

    CommonFlags flags;
    std::string grid_text = "0,0.005,0.01,0.02,0.05,0.1";
    RunSpec spec;
    long long instances = 0, neighbors = 30, triples = 100000, round = 1, node = 0;
    std::string instance_path;
    bool random_dump = false;

    auto* run = app.add_subcommand("run", "Run experiments and write metrics CSVs");
    add_common(run, flags);
    run->add_flag("--checkpoints", spec.write_checkpoints, "Write final model checkpoints");

    auto* sweep = app.add_subcommand("sweep-theta", "Sweep theta and summarize selected counts");
    add_common(sweep, flags);
    sweep->add_option("--grid", grid_text, "Comma-separated theta values");
    sweep->add_option("--instances", instances, "Random-instance mode: number of instances");
    sweep->add_option("--neighbors", neighbors, "Neighbors per random instance");

    auto* prop1 = app.add_subcommand("prop1-suite", "Randomized check of the aggregation bounds");
    add_common(prop1, flags);
    prop1->add_option("--triples", triples, "Number of random triples");

    auto* oracle = app.add_subcommand("selector-oracle", "Compare optimizer and brute force");
    add_common(oracle, flags);
    oracle->add_option("--instance", instance_path, "Instance dump file")->required();

    auto* dump = app.add_subcommand("dump-instance", "Write a selection instance dump");
    add_common(dump, flags);
    dump->add_option("--round", round, "Round whose instance to dump (1-based)");
    dump->add_option("--node", node, "Node whose instance to dump");
    dump->add_flag("--random", random_dump, "Dump a random instance instead");
    dump->add_option("--neighbors", neighbors, "Neighbors of the random instance");

    std::vector<std::string> reversed(args.rbegin(), args.rend());
    try {
        app.parse(reversed);
    } catch (const CLI::ParseError& e) {
        throw UsageError(e.what());
    }

    if (run->parsed()) spec.command = Command::run;
    if (sweep->parsed()) spec.command = Command::sweep_theta;
    if (prop1->parsed()) spec.command = Command::prop1_suite;
    if (oracle->parsed()) spec.command = Command::selector_oracle;
    if (dump->parsed()) spec.command = Command::dump_instance;

    if (flags.theta && *flags.theta < 0.0) throw UsageError("--theta: must be >= 0");
    if (flags.alpha && !(*flags.alpha > 0.0)) throw UsageError("--alpha: must be > 0");
    if (flags.rounds && *flags.rounds < 1) throw UsageError("--rounds: must be >= 1");
    if (flags.seed && *flags.seed < 0) throw UsageError("--seed: must be >= 0");
    if (instances < 0) throw UsageError("--instances: must be >= 0");
    if (neighbors < 1) throw UsageError("--neighbors: must be >= 1");
    if (triples < 1) throw UsageError("--triples: must be >= 1");
    if (round < 1) throw UsageError("--round: must be >= 1");
    if (node < 0) throw UsageError("--node: must be >= 0");

    if (!flags.config.empty()) {
        if (!fs::is_regular_file(flags.config)) throw UsageError("--config: no such file " + flags.config);
        spec.config_path = flags.config;
    }
    spec.output_dir = flags.out;
    spec.overrides = flags.sets;
    auto add = [&](const std::string& key, const std::string& value) {
        spec.overrides.push_back(key + "=" + value);
    };
    if (flags.theta) add("selector.theta", text::shortest(*flags.theta));
    if (flags.alpha) add("data.alpha", text::shortest(*flags.alpha));
    if (flags.rounds) add("experiment.rounds", std::to_string(*flags.rounds));
    if (flags.seed) add("experiment.seed", std::to_string(*flags.seed));
    if (!flags.dataset.empty()) add("data.source", "\"" + flags.dataset + "\"");
    if (!flags.idx_images.empty()) add("data.idx_images", json(flags.idx_images).dump());
    if (!flags.idx_labels.empty()) add("data.idx_labels", json(flags.idx_labels).dump());
    if (!flags.scheme.empty()) {
        spec.schemes = parse_schemes(flags.scheme);
        if (spec.command != Command::run && spec.schemes.size() > 1) {
            throw UsageError("--scheme: only run accepts a list");
        }
        add("experiment.scheme", "\"" + to_string(spec.schemes.front()) + "\"");
    }

    json base = spec.config_path ? [&] {
        std::ifstream in(*spec.config_path);
        json j = json::parse(in, nullptr, false);
        if (j.is_discarded()) throw ConfigError(spec.config_path->string() + ": not valid JSON");
        return j;
    }()
                                 : json::object();
    apply_overrides(base, spec.overrides);
    spec.config = from_json(base);
    if (spec.schemes.empty()) spec.schemes = {spec.config.scheme};

    spec.grid = parse_grid(grid_text);
    spec.instances = static_cast<std::size_t>(instances);
    spec.neighbors = static_cast<std::size_t>(neighbors);
    spec.triples = static_cast<std::size_t>(triples);
    spec.instance_path = instance_path;
    spec.oracle_theta = flags.theta;
    spec.dump_round = static_cast<std::size_t>(round);
    spec.dump_node = static_cast<std::size_t>(node);
    spec.dump_random = random_dump;
    if (spec.command == Command::selector_oracle && !fs::is_regular_file(spec.instance_path)) {
        throw UsageError("--instance: no such file " + instance_path);
    }
    if (spec.command == Command::dump_instance && !spec.dump_random &&
        spec.dump_node >= spec.config.num_nodes) {
        throw UsageError("--node: out of range");
    }
    return spec;
}

double median_selected(const std::vector<std::size_t>& counts) {
    if (counts.empty()) return 0.0;
    std::vector<std::size_t> v = counts;
    std::sort(v.begin(), v.end());
    const std::size_t mid = v.size() / 2;
    if (v.size() % 2 == 1) return static_cast<double>(v[mid]);
    return 0.5 * static_cast<double>(v[mid - 1] + v[mid]);
}

namespace {

void write_json(const fs::path& path, const json& j) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot write " + path.string());
    out << j.dump(2) << '\n';
}

json manifest_base(const RunSpec& spec, const ExperimentConfig& cfg) {
    json m;
    m["code_version"] = OCDFL_VERSION;
    m["command"] = command_name(spec.command);
    m["seed"] = cfg.seed;
    m["config"] = to_json(cfg);
    return m;
}

struct RunOutcome {
    engine::ExperimentResult result;
    std::vector<std::size_t> selected_counts; // rows that transmitted
};

// One experiment, streaming its CSV into `dir`.
RunOutcome run_one(const ExperimentConfig& cfg, const fs::path& dir) {
    const fs::path csv_path = dir / ("metrics_" + to_string(cfg.scheme) + ".csv");
    std::ofstream csv(csv_path);
    if (!csv) throw std::runtime_error("cannot write " + csv_path.string());
    engine::write_metrics_header(csv);
    RunOutcome outcome;
    outcome.result = engine::run_experiment(cfg, [&](const engine::RoundMetrics& r) {
        engine::write_metrics_rows(csv, cfg.scheme, r);
        for (const auto& m : r.nodes) {
            if (m.num_selected > 0) outcome.selected_counts.push_back(m.num_selected);
        }
    });
    return outcome;
}

json run_summary(const ExperimentConfig& cfg, const engine::ExperimentResult& result) {
    return {{"scheme", to_string(cfg.scheme)},
            {"metrics", "metrics_" + to_string(cfg.scheme) + ".csv"},
            {"total_energy_j", engine::total_energy(result.rounds)},
            {"final_mean_accuracy", engine::final_mean_accuracy(result.rounds)},
            {"notes", result.notes}};
}

int cmd_run(const RunSpec& spec, std::ostream& out, std::ostream& err) {
    fs::create_directories(spec.output_dir);
    json manifest = manifest_base(spec, spec.config);
    manifest["runs"] = json::array();
    for (Scheme scheme : spec.schemes) {
        ExperimentConfig cfg = spec.config;
        cfg.scheme = scheme;
        const RunOutcome outcome = run_one(cfg, spec.output_dir);
        for (const auto& note : outcome.result.notes) err << "note [" << to_string(scheme) << "]: " << note << '\n';
        if (spec.write_checkpoints) {
            const fs::path dir = spec.output_dir / ("models_" + to_string(scheme));
            fs::create_directories(dir);
            for (std::size_t i = 0; i < outcome.result.final_models.size(); ++i) {
                learn::save_checkpoint(outcome.result.final_models[i],
                                       dir / ("node" + std::to_string(i) + ".ckpt"));
            }
        }
        manifest["runs"].push_back(run_summary(cfg, outcome.result));
        out << to_string(scheme) << ": total energy "
            << text::shortest(engine::total_energy(outcome.result.rounds)) << " J, final accuracy "
            << text::shortest(engine::final_mean_accuracy(outcome.result.rounds)) << '\n';
    }
    json schemes = json::array();
    for (Scheme s : spec.schemes) schemes.push_back(to_string(s));
    manifest["schemes"] = schemes;
    write_json(spec.output_dir / "manifest.json", manifest);
    return kExitOk;
}

int cmd_sweep(const RunSpec& spec, std::ostream& out) {
    fs::create_directories(spec.output_dir);
    std::ofstream summary(spec.output_dir / "theta_sweep.csv");
    if (!summary) throw std::runtime_error("cannot write theta_sweep.csv");
    summary << "theta,median_selected\n";
    json manifest = manifest_base(spec, spec.config);
    manifest["grid"] = spec.grid;

    if (spec.instances > 0) {
        manifest["mode"] = "random_instances";
        manifest["instances"] = spec.instances;
        manifest["neighbors"] = spec.neighbors;
        for (double theta : spec.grid) {
            Rng rng = make_stream(spec.config.seed, 0x5e1);
            select::SelectorConfig sc = spec.config.selector;
            sc.theta = theta;
            std::vector<std::size_t> counts;
            for (std::size_t t = 0; t < spec.instances; ++t) {
                const auto inst = select::random_instance(spec.neighbors, rng);
                counts.push_back(select::optimize(inst, sc).selected.size());
            }
            const double med = median_selected(counts);
            summary << text::shortest(theta) << ',' << text::shortest(med) << '\n';
            out << "theta " << text::shortest(theta) << ": median selected " << text::shortest(med) << '\n';
        }
    } else {
        manifest["mode"] = "experiments";
        manifest["children"] = json::array();
        for (std::size_t c = 0; c < spec.grid.size(); ++c) {
            ExperimentConfig cfg = spec.config;
            cfg.scheme = Scheme::ocdfl;
            cfg.selector.theta = spec.grid[c];
            const fs::path dir = spec.output_dir / ("theta_" + std::to_string(c));
            fs::create_directories(dir);
            const RunOutcome outcome = run_one(cfg, dir);
            json child = manifest_base(spec, cfg);
            child["runs"] = json::array({run_summary(cfg, outcome.result)});
            write_json(dir / "manifest.json", child);
            const double med = median_selected(outcome.selected_counts);
            summary << text::shortest(cfg.selector.theta) << ',' << text::shortest(med) << '\n';
            manifest["children"].push_back(dir.filename().string());
            out << "theta " << text::shortest(cfg.selector.theta) << ": median selected "
                << text::shortest(med) << '\n';
        }
    }
    write_json(spec.output_dir / "manifest.json", manifest);
    return kExitOk;
}

int cmd_prop1(const RunSpec& spec, std::ostream& out) {
    const std::vector<std::size_t> dims = {2, 10, 50, 1000};
    const auto r = gain::prop1_suite(spec.triples, dims, spec.config.seed);
    out << r.violations << " violations / " << r.triples << " triples\n";
    if (r.violations > 0) {
        out << "  closer-than-worse: " << r.closer_than_worse_failures
            << ", lower bound: " << r.lower_bound_failures
            << ", upper bound: " << r.upper_bound_failures << '\n';
    }
    return r.violations == 0 ? kExitOk : kExitRuntime;
}

std::string format_set(const std::vector<select::NodeId>& ids) {
    std::string s = "{";
    for (std::size_t i = 0; i < ids.size(); ++i) {
        if (i) s += ",";
        s += std::to_string(ids[i]);
    }
    return s + "}";
}

int cmd_oracle(const RunSpec& spec, std::ostream& out) {
    const auto inst = select::load_instance(spec.instance_path);
    select::SelectorConfig sc = spec.config.selector;
    sc.theta = spec.oracle_theta.value_or(0.0);
    const auto decision = select::optimize(inst, sc);
    const auto brute = select::ids_of(inst, select::brute_force_subset(inst));
    out << "optimizer:   " << format_set(decision.selected) << '\n';
    out << "brute-force: " << format_set(brute) << '\n';
    const bool equal = decision.selected == brute;
    out << (equal ? "match" : "MISMATCH") << '\n';
    return equal ? kExitOk : kExitRuntime;
}

int cmd_dump(const RunSpec& spec, std::ostream& out, std::ostream& err) {
    fs::create_directories(spec.output_dir);
    select::SelectionInstance inst;
    fs::path path;
    if (spec.dump_random) {
        Rng rng = make_stream(spec.config.seed, 0xd0);
        inst = select::random_instance(spec.neighbors, rng);
        path = spec.output_dir / ("instance_random_k" + std::to_string(spec.neighbors) + "_seed" +
                                  std::to_string(spec.config.seed) + ".txt");
    } else {
        ExperimentConfig cfg = spec.config;
        cfg.scheme = Scheme::ocdfl;
        cfg.rounds = std::max(cfg.rounds, spec.dump_round);
        engine::Simulation sim(cfg, engine::make_workload(cfg));
        for (std::size_t r = 0; r < spec.dump_round; ++r) sim.run_round();
        inst = sim.last_instances().at(spec.dump_node);
        if (inst.size() == 0) {
            err << "node " << spec.dump_node << " had no neighbors in round " << spec.dump_round << '\n';
            return kExitRuntime;
        }
        path = spec.output_dir / ("instance_round" + std::to_string(spec.dump_round) + "_node" +
                                  std::to_string(spec.dump_node) + ".txt");
    }
    select::save_instance(inst, path);
    out << path.string() << '\n';
    return kExitOk;
}

} // namespace

int execute(const RunSpec& spec, std::ostream& out, std::ostream& err) {
    try {
        switch (spec.command) {
        case Command::run: return cmd_run(spec, out, err);
        case Command::sweep_theta: return cmd_sweep(spec, out);
        case Command::prop1_suite: return cmd_prop1(spec, out);
        case Command::selector_oracle: return cmd_oracle(spec, out);
        case Command::dump_instance: return cmd_dump(spec, out, err);
        }
    } catch (const std::exception& e) {
        err << "error: " << e.what() << '\n';
        return kExitRuntime;
    }
    return kExitRuntime;
}

} // namespace ocdfl::cli
