#include "ocdfl/learner.hpp"

#include <bit>
#include <cstdint>
#include <fstream>
#include <limits>

namespace ocdfl::learn {

std::size_t Layout::num_params() const {
    std::size_t total = 0;
    for (std::size_t l = 0; l + 1 < dims.size(); ++l) total += dims[l + 1] * dims[l] + dims[l + 1];
    return total;
}

void Layout::validate() const {
    if (dims.size() < 2) throw LayoutError("layout needs at least input and output dims");
    for (std::size_t d : dims) {
        if (d == 0) throw LayoutError("layout dims must be positive: " + describe());
    }
}

std::string Layout::describe() const {
    std::string s;
    for (std::size_t i = 0; i < dims.size(); ++i) {
        if (i) s += "->";
        s += std::to_string(dims[i]);
    }
    return s;
}

void ModelParams::validate() const {
    layout.validate();
    if (values.size() != layout.num_params()) {
        throw LayoutError("model has " + std::to_string(values.size()) + " values, layout " +
                          layout.describe() + " needs " + std::to_string(layout.num_params()));
    }
    for (double v : values) {
        if (!std::isfinite(v)) throw DivergenceError("model contains non-finite values");
    }
}

void TrainConfig::validate() const {
    if (!(learning_rate >= 0.0)) throw ConfigError("train: learning_rate must be >= 0");
    if (local_epochs == 0) throw ConfigError("train: local_epochs must be >= 1");
    if (batch_size == 0) throw ConfigError("train: batch_size must be >= 1");
}

ModelParams init_model(const Layout& layout, Rng& rng) {
    layout.validate();
    ModelParams m{layout, std::vector<double>(layout.num_params(), 0.0)};
    std::size_t offset = 0;
    for (std::size_t l = 0; l < layout.num_layers(); ++l) {
        const std::size_t in = layout.dims[l];
        const std::size_t out = layout.dims[l + 1];
        const double limit = std::sqrt(6.0 / static_cast<double>(in + out));
        std::uniform_real_distribution<double> dist(-limit, limit);
        for (std::size_t k = 0; k < in * out; ++k) m.values[offset + k] = dist(rng);
        offset += in * out + out;
    }
    return m;
}

namespace {

// Activations of one sample through every layer; the last layer holds logits.
class Forward {
public:
    explicit Forward(const Layout& layout) : layout_(layout) {
        acts_.resize(layout.dims.size());
        for (std::size_t l = 0; l < layout.dims.size(); ++l) acts_[l].resize(layout.dims[l]);
    }

    void run(std::span<const double> params, std::span<const double> x) {
        std::copy(x.begin(), x.end(), acts_[0].begin());
        std::size_t offset = 0;
        for (std::size_t l = 0; l < layout_.num_layers(); ++l) {
            const std::size_t in = layout_.dims[l];
            const std::size_t out = layout_.dims[l + 1];
            const double* w = params.data() + offset;
            const double* b = w + in * out;
            const auto& prev = acts_[l];
            auto& next = acts_[l + 1];
            const bool hidden = l + 1 < layout_.num_layers();
            for (std::size_t o = 0; o < out; ++o) {
                double z = b[o];
                const double* wrow = w + o * in;
                for (std::size_t i = 0; i < in; ++i) z += wrow[i] * prev[i];
                next[o] = hidden ? std::max(z, 0.0) : z;
            }
            offset += in * out + out;
        }
    }

    const std::vector<double>& logits() const { return acts_.back(); }
    const std::vector<double>& activation(std::size_t layer) const { return acts_[layer]; }

private:
    const Layout& layout_;
    std::vector<std::vector<double>> acts_;
};

// Cross-entropy of softmax(logits) against `label`; optionally the softmax.
double cross_entropy(std::span<const double> logits, std::size_t label,
                     std::vector<double>* probs) {
    const double max_logit = *std::max_element(logits.begin(), logits.end());
    double sum = 0.0;
    for (double z : logits) sum += std::exp(z - max_logit);
    const double log_norm = max_logit + std::log(sum);
    if (probs) {
        probs->resize(logits.size());
        for (std::size_t c = 0; c < logits.size(); ++c) (*probs)[c] = std::exp(logits[c] - log_norm);
    }
    return log_norm - logits[label];
}

void check_compatible(const ModelParams& model, const data::Dataset& data) {
    if (data.feature_dim != model.layout.input_dim()) {
        throw LayoutError("feature dim " + std::to_string(data.feature_dim) +
                          " does not match model input " + model.layout.describe());
    }
    if (data.num_classes > model.layout.num_classes()) {
        throw LayoutError("dataset has more classes than model outputs");
    }
}

} // namespace

EvalResult evaluate(const ModelParams& model, const data::Dataset& data,
                    std::span<const std::size_t> indices) {
    if (indices.empty()) throw std::invalid_argument("evaluate: empty data, loss undefined");
    check_compatible(model, data);
    Forward fwd(model.layout);
    double loss = 0.0;
    std::size_t correct = 0;
    for (std::size_t idx : indices) {
        fwd.run(model.values, data.row(idx));
        const auto& z = fwd.logits();
        const auto label = static_cast<std::size_t>(data.labels[idx]);
        loss += cross_entropy(z, label, nullptr);
        const auto predicted = static_cast<std::size_t>(std::max_element(z.begin(), z.end()) - z.begin());
        if (predicted == label) ++correct;
    }
    const auto n = static_cast<double>(indices.size());
    return {loss / n, static_cast<double>(correct) / n};
}

EvalResult evaluate(const ModelParams& model, const data::Dataset& data) {
    std::vector<std::size_t> all(data.size());
    std::iota(all.begin(), all.end(), 0);
    return evaluate(model, data, all);
}

namespace {

double batch_gradient(const Layout& layout, std::span<const double> params,
                      const data::Dataset& data, std::span<const std::size_t> batch,
                      std::span<double> grad) {
    std::fill(grad.begin(), grad.end(), 0.0);
    Forward fwd(layout);
    std::vector<double> probs;
    std::vector<std::vector<double>> delta(layout.dims.size());
    for (std::size_t l = 0; l < layout.dims.size(); ++l) delta[l].resize(layout.dims[l]);

    // Offsets of each layer's block.
    std::vector<std::size_t> offsets(layout.num_layers());
    for (std::size_t l = 0, off = 0; l < layout.num_layers(); ++l) {
        offsets[l] = off;
        off += layout.dims[l] * layout.dims[l + 1] + layout.dims[l + 1];
    }

    double loss = 0.0;
    for (std::size_t idx : batch) {
        fwd.run(params, data.row(idx));
        const auto label = static_cast<std::size_t>(data.labels[idx]);
        loss += cross_entropy(fwd.logits(), label, &probs);

        auto& top = delta.back();
        for (std::size_t c = 0; c < top.size(); ++c) top[c] = probs[c] - (c == label ? 1.0 : 0.0);

        for (std::size_t l = layout.num_layers(); l-- > 0;) {
            const std::size_t in = layout.dims[l];
            const std::size_t out = layout.dims[l + 1];
            const auto& a_in = fwd.activation(l);
            const auto& d_out = delta[l + 1];
            double* gw = grad.data() + offsets[l];
            double* gb = gw + in * out;
            for (std::size_t o = 0; o < out; ++o) {
                const double d = d_out[o];
                if (d == 0.0) continue;
                double* grow = gw + o * in;
                for (std::size_t i = 0; i < in; ++i) grow[i] += d * a_in[i];
                gb[o] += d;
            }
            if (l == 0) break;
            const double* w = params.data() + offsets[l];
            auto& d_in = delta[l];
            for (std::size_t i = 0; i < in; ++i) {
                if (a_in[i] <= 0.0) {
                    d_in[i] = 0.0; // ReLU gate
                    continue;
                }
                double s = 0.0;
                for (std::size_t o = 0; o < out; ++o) s += w[o * in + i] * d_out[o];
                d_in[i] = s;
            }
        }
    }
    const auto n = static_cast<double>(batch.size());
    for (double& g : grad) g /= n;
    return loss / n;
}

} // namespace

double loss_and_gradient(const ModelParams& model, const data::Dataset& data,
                         std::span<const std::size_t> batch, std::span<double> grad) {
    if (batch.empty()) throw std::invalid_argument("loss_and_gradient: empty batch");
    if (grad.size() != model.values.size()) throw LayoutError("gradient buffer size mismatch");
    check_compatible(model, data);
    return batch_gradient(model.layout, model.values, data, batch, grad);
}

ModelParams local_update(const ModelParams& model, const data::Dataset& data,
                         std::span<const std::size_t> shard, const TrainConfig& cfg, Rng& rng) {
    cfg.validate();
    if (shard.empty()) throw std::invalid_argument("local_update: empty shard");
    check_compatible(model, data);
    ModelParams out = model;
    std::vector<std::size_t> rows;
    sgd_epochs(out.values, shard.size(), cfg, rng,
               [&](std::span<const std::size_t> positions, std::span<const double> w,
                   std::span<double> grad) {
                   rows.resize(positions.size());
                   for (std::size_t k = 0; k < positions.size(); ++k) rows[k] = shard[positions[k]];
                   batch_gradient(model.layout, w, data, rows, grad);
               });
    return out;
}

ModelParams fed_average(const ModelParams& own, std::span<const ModelParams* const> received) {
    for (const ModelParams* m : received) {
        if (m->layout != own.layout || m->values.size() != own.values.size()) {
            throw LayoutError("fed_average: layout mismatch (" + m->layout.describe() + " vs " +
                              own.layout.describe() + ")");
        }
    }
    if (received.empty()) return own;
    ModelParams out = own;
    const std::size_t count = received.size() + 1;
    std::vector<double> column(count);
    for (std::size_t p = 0; p < own.values.size(); ++p) {
        column[0] = own.values[p];
        for (std::size_t r = 0; r < received.size(); ++r) column[r + 1] = received[r]->values[p];
        std::sort(column.begin(), column.end());
        if (column.front() == column.back()) {
            out.values[p] = column.front();
            continue;
        }
        double sum = 0.0;
        for (double v : column) sum += v;
        out.values[p] = sum / static_cast<double>(count);
    }
    return out;
}

ModelParams fed_average(const ModelParams& own, std::span<const ModelParams> received) {
    std::vector<const ModelParams*> ptrs;
    ptrs.reserve(received.size());
    for (const auto& m : received) ptrs.push_back(&m);
    return fed_average(own, ptrs);
}

namespace {

constexpr char kCheckpointMagic[8] = {'O', 'C', 'D', 'F', 'L', 'C', 'K', '1'};

void put_u64(std::ostream& out, std::uint64_t v) {
    char b[8];
    for (int i = 0; i < 8; ++i) b[i] = static_cast<char>((v >> (8 * i)) & 0xFF);
    out.write(b, 8);
}

std::uint64_t get_u64(std::istream& in, const std::filesystem::path& path) {
    unsigned char b[8];
    if (!in.read(reinterpret_cast<char*>(b), 8)) throw FormatError(path.string() + ": truncated checkpoint");
    std::uint64_t v = 0;
    for (int i = 0; i < 8; ++i) v |= std::uint64_t{b[i]} << (8 * i);
    return v;
}

} // namespace

// Layout: magic, u64 num_dims, u64 dims..., u64 count, f64 values (all little-endian).
void save_checkpoint(const ModelParams& model, const std::filesystem::path& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw FormatError(path.string() + ": cannot open for writing");
    out.write(kCheckpointMagic, sizeof kCheckpointMagic);
    put_u64(out, model.layout.dims.size());
    for (std::size_t d : model.layout.dims) put_u64(out, d);
    put_u64(out, model.values.size());
    for (double v : model.values) put_u64(out, std::bit_cast<std::uint64_t>(v));
}

ModelParams load_checkpoint(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw FormatError(path.string() + ": cannot open");
    char magic[8];
    if (!in.read(magic, 8) || !std::equal(magic, magic + 8, kCheckpointMagic)) {
        throw FormatError(path.string() + ": not a model checkpoint");
    }
    ModelParams m;
    const std::uint64_t num_dims = get_u64(in, path);
    if (num_dims > 64) throw FormatError(path.string() + ": implausible layout depth");
    for (std::uint64_t i = 0; i < num_dims; ++i) m.layout.dims.push_back(get_u64(in, path));
    const std::uint64_t count = get_u64(in, path);
    if (count != m.layout.num_params()) throw FormatError(path.string() + ": value count does not match layout");
    m.values.resize(count);
    for (auto& v : m.values) v = std::bit_cast<double>(get_u64(in, path));
    return m;
}

} // namespace ocdfl::learn
