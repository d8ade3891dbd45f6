#include "ocdfl/engine.hpp"

#include <algorithm>
#include <numeric>
#include <ostream>

#include "ocdfl/errors.hpp"
#include "ocdfl/format.hpp"
#include "ocdfl/gain.hpp"

namespace ocdfl::engine {

namespace {

// Random stream ids; each subsystem draws from its own stream.
constexpr std::uint64_t kMobilityStream = 1;
constexpr std::uint64_t kRadioStream = 2;
constexpr std::uint64_t kDataStream = 3;
constexpr std::uint64_t kPartitionStream = 4;
constexpr std::uint64_t kSharedInitStream = 5;
constexpr std::uint64_t kNodeInitStreamBase = 1000;
constexpr std::uint64_t kTrainStreamBase = 2000;

double uniform_or_point(Rng& rng, double lo, double hi) {
    return lo == hi ? lo : uniform(rng, lo, hi);
}

learn::Layout layout_for(const ExperimentConfig& cfg, const data::Dataset& train) {
    learn::Layout layout;
    layout.dims.push_back(train.feature_dim);
    layout.dims.insert(layout.dims.end(), cfg.hidden.begin(), cfg.hidden.end());
    layout.dims.push_back(train.num_classes);
    return layout;
}

std::string round_context(std::size_t round) { return "round " + std::to_string(round) + ": "; }

} // namespace

Workload make_workload(const ExperimentConfig& cfg) {
    cfg.validate();
    Workload w;
    Rng data_rng = make_stream(cfg.seed, kDataStream);
    data::Dataset all;
    if (cfg.data.source == DataSource::synthetic) {
        data::SyntheticSpec spec{.num_samples = cfg.data.train_samples + cfg.data.test_samples,
                                 .feature_dim = cfg.data.feature_dim,
                                 .num_classes = cfg.data.num_classes,
                                 .separation = cfg.data.separation};
        all = data::make_synthetic(spec, data_rng);
    } else {
        const data::Dataset raw = data::load_idx(cfg.data.idx_images, cfg.data.idx_labels,
                                                 cfg.data.idx_max_samples);
        std::vector<std::size_t> order(raw.size());
        std::iota(order.begin(), order.end(), 0);
        std::shuffle(order.begin(), order.end(), data_rng);
        all = raw.subset(order);
    }
    std::tie(w.train, w.test) = data::split_tail(all, cfg.data.test_samples);

    const data::DirichletSpec spec{cfg.data.alpha, cfg.num_nodes, w.train.num_classes};
    if (w.train.size() < cfg.num_nodes * w.train.num_classes) {
        throw ConfigError("training set too small: " + std::to_string(w.train.size()) +
                          " samples for " + std::to_string(cfg.num_nodes) + " nodes x " +
                          std::to_string(w.train.num_classes) + " classes");
    }
    Rng part_rng = make_stream(cfg.seed, kPartitionStream);
    data::PartitionReport report;
    w.shards = data::partition_dirichlet(w.train, spec, part_rng, &report);
    if (report.retries > 0 || report.fallbacks > 0) {
        w.notes.push_back("dirichlet partition: " + std::to_string(report.retries) +
                          " proportion redraws, " + std::to_string(report.fallbacks) +
                          " nodes filled by proportional rescaling");
    }
    return w;
}

Simulation::Simulation(ExperimentConfig cfg, Workload workload)
    : cfg_(std::move(cfg)),
      train_(std::move(workload.train)),
      test_(std::move(workload.test)),
      mobility_rng_(make_stream(cfg_.seed, kMobilityStream)),
      notes_(std::move(workload.notes)) {
    cfg_.validate();
    if (workload.shards.size() != cfg_.num_nodes) {
        throw ConfigError("expected " + std::to_string(cfg_.num_nodes) + " shards, got " +
                          std::to_string(workload.shards.size()));
    }
    const learn::Layout layout = layout_for(cfg_, train_);
    Rng radio_rng = make_stream(cfg_.seed, kRadioStream);
    Rng shared_init_rng = make_stream(cfg_.seed, kSharedInitStream);
    const learn::ModelParams shared = learn::init_model(layout, shared_init_rng);

    nodes_.resize(cfg_.num_nodes);
    for (NodeId i = 0; i < cfg_.num_nodes; ++i) {
        NodeState& node = nodes_[i];
        node.mover = topology::spawn(cfg_.arena, cfg_.mobility, mobility_rng_);

        const RadioConfig& rc = cfg_.radio;
        node.radio.p_tx = radio::dbm_to_watts(uniform_or_point(radio_rng, rc.p_tx_dbm_min, rc.p_tx_dbm_max));
        node.radio.bandwidth = uniform_or_point(radio_rng, rc.bandwidth_hz_min, rc.bandwidth_hz_max);
        node.radio.g_tx = radio::db_to_linear(rc.g_tx_dbi);
        node.radio.g_rx = radio::db_to_linear(rc.g_rx_dbi);
        node.radio.freq = rc.freq_hz;
        node.radio.env_exp = rc.env_exp;
        node.radio.noise_density = radio::dbm_to_watts(rc.noise_dbm_per_hz);
        node.radio.d_max = rc.d_max_m;
        node.radio.light_speed = rc.light_speed;
        node.radio.validate();

        if (cfg_.shared_init) {
            node.model = shared;
        } else {
            Rng init_rng = make_stream(cfg_.seed, kNodeInitStreamBase + i);
            node.model = learn::init_model(layout, init_rng);
        }
        node.shard = std::move(workload.shards[i]);
        if (node.shard.indices.empty()) {
            throw ConfigError("node " + std::to_string(i) + " received an empty shard");
        }
        node.train_rng = make_stream(cfg_.seed, kTrainStreamBase + i);
    }

    const std::size_t model_bits = shared.serialized_bits();
    if (static_cast<double>(model_bits) != cfg_.payload_bits) {
        notes_.push_back("payload_bits " + text::shortest(cfg_.payload_bits) +
                         " differs from serialized model size " + std::to_string(model_bits) +
                         " bits; energy uses the configured payload");
    }
}

double Simulation::link_distance(NodeId a, NodeId b) const {
    const double d = topology::distance(nodes_[a].mover.position, nodes_[b].mover.position);
    return std::max(d, cfg_.radio.min_link_distance_m);
}

select::SelectionInstance Simulation::build_instance(NodeId sender) const {
    select::SelectionInstance inst;
    const NodeState& s = nodes_[sender];
    for (NodeId k : graph_.neighbors(sender)) {
        const auto g = gain::knowledge_gain(s.beacon_loss, nodes_[k].beacon_loss, cfg_.gain);
        inst.neighbor_ids.push_back(k);
        inst.gains.push_back(g.scaled);
        inst.energies.push_back(radio::scaled_energy(s.radio, link_distance(sender, k), cfg_.payload_bits));
    }
    return inst;
}

RoundMetrics Simulation::run_round() {
    const std::size_t n = nodes_.size();
    RoundMetrics metrics;
    metrics.round = round_ + 1;
    metrics.nodes.resize(n);
    try {
        if (cfg_.mobile) {
            std::vector<topology::Mover> movers(n);
            for (NodeId i = 0; i < n; ++i) movers[i] = nodes_[i].mover;
            topology::step_mobility(movers, cfg_.arena, cfg_.mobility, cfg_.mobility.dt, mobility_rng_);
            for (NodeId i = 0; i < n; ++i) nodes_[i].mover = movers[i];
        }
        std::vector<topology::Position> positions(n);
        for (NodeId i = 0; i < n; ++i) positions[i] = nodes_[i].mover.position;
        graph_ = topology::build_graph(positions, cfg_.radio.d_max_m);

        for (NodeId i = 0; i < n; ++i) {
            NodeState& node = nodes_[i];
            if (cfg_.local_training) {
                node.model = learn::local_update(node.model, train_, node.shard.indices, cfg_.train,
                                                 node.train_rng);
            }
        }
        // Loss beacons carry no energy cost.
        if (cfg_.scheme == Scheme::ocdfl) {
            for (NodeId i = 0; i < n; ++i) {
                NodeState& node = nodes_[i];
                node.beacon_loss = cfg_.gain_loss == GainLoss::local_shard
                                       ? learn::evaluate(node.model, train_, node.shard.indices).loss
                                       : learn::evaluate(node.model, test_).loss;
            }
        }

        instances_.assign(n, {});
        std::vector<std::vector<NodeId>> mailbox(n);
        for (NodeId i = 0; i < n; ++i) {
            if (cfg_.scheme == Scheme::none || graph_.degree(i) == 0) continue;
            std::vector<NodeId> peers;
            if (cfg_.scheme == Scheme::full) {
                peers = graph_.neighbors(i);
            } else {
                instances_[i] = build_instance(i);
                const auto decision = select::optimize(instances_[i], cfg_.selector);
                if (decision.skipped) ++metrics.skipped_senders;
                peers = decision.selected;
            }
            NodeMetrics& m = metrics.nodes[i];
            m.num_selected = peers.size();
            for (NodeId k : peers) {
                const double d = link_distance(i, k);
                Delivery delivery{i, k, d, radio::tx_energy(nodes_[i].radio, d, cfg_.payload_bits), 0.0};
                if (cfg_.scheme == Scheme::ocdfl) {
                    delivery.raw_gain = gain::knowledge_gain(nodes_[i].beacon_loss, nodes_[k].beacon_loss,
                                                             cfg_.gain).raw;
                }
                m.tx_energy_j += delivery.energy_j;
                m.delivered_gain += delivery.raw_gain;
                mailbox[k].push_back(i);
                metrics.deliveries.push_back(delivery);
            }
        }

        // Aggregation barrier: every node averages the models as they stood
        // after local training.
        std::vector<learn::ModelParams> aggregated(n);
        for (NodeId k = 0; k < n; ++k) {
            std::sort(mailbox[k].begin(), mailbox[k].end());
            std::vector<const learn::ModelParams*> received;
            received.reserve(mailbox[k].size());
            for (NodeId sender : mailbox[k]) received.push_back(&nodes_[sender].model);
            aggregated[k] = learn::fed_average(nodes_[k].model, received);
            metrics.nodes[k].num_received = mailbox[k].size();
            metrics.nodes[k].num_neighbors = graph_.degree(k);
        }
        for (NodeId k = 0; k < n; ++k) {
            nodes_[k].model = std::move(aggregated[k]);
            const auto eval = learn::evaluate(nodes_[k].model, test_);
            metrics.nodes[k].loss = eval.loss;
            metrics.nodes[k].accuracy = eval.accuracy;
        }
    } catch (const std::exception& e) {
        throw std::runtime_error(round_context(round_) + e.what());
    }
    ++round_;
    return metrics;
}

ExperimentResult run_experiment(const ExperimentConfig& cfg, const RoundSink& sink) {
    Simulation sim(cfg, make_workload(cfg));
    ExperimentResult result;
    result.rounds.reserve(cfg.rounds);
    std::size_t skipped = 0;
    for (std::size_t r = 0; r < cfg.rounds; ++r) {
        result.rounds.push_back(sim.run_round());
        skipped += result.rounds.back().skipped_senders;
        if (sink) sink(result.rounds.back());
    }
    for (const auto& node : sim.nodes()) result.final_models.push_back(node.model);
    result.notes = sim.notes();
    if (skipped > 0) {
        result.notes.push_back(std::to_string(skipped) +
                               " sender-rounds skipped transmission (all neighbor gains zero)");
    }
    return result;
}

void write_metrics_header(std::ostream& out) { out << kMetricsHeader << '\n'; }

void write_metrics_rows(std::ostream& out, Scheme scheme, const RoundMetrics& metrics) {
    const std::string name = to_string(scheme);
    for (NodeId i = 0; i < metrics.nodes.size(); ++i) {
        const NodeMetrics& m = metrics.nodes[i];
        out << metrics.round << ',' << i << ',' << name << ',' << text::shortest(m.loss) << ','
            << text::shortest(m.accuracy) << ',' << text::shortest(m.tx_energy_j) << ','
            << text::shortest(m.delivered_gain) << ',' << m.num_selected << ',' << m.num_received
            << '\n';
    }
}

double total_energy(const std::vector<RoundMetrics>& rounds) {
    double total = 0.0;
    for (const auto& r : rounds) {
        for (const auto& m : r.nodes) total += m.tx_energy_j;
    }
    return total;
}

double final_mean_accuracy(const std::vector<RoundMetrics>& rounds) {
    if (rounds.empty()) return 0.0;
    const auto& last = rounds.back().nodes;
    double s = 0.0;
    for (const auto& m : last) s += m.accuracy;
    return s / static_cast<double>(last.size());
}

} // namespace ocdfl::engine
