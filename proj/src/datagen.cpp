#include "ocdfl/datagen.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <fstream>
#include <numeric>

#include "ocdfl/errors.hpp"

namespace ocdfl::data {

void Dataset::validate() const {
    if (features.size() != labels.size() * feature_dim) {
        throw FormatError("dataset: feature matrix does not match label count");
    }
    for (int y : labels) {
        if (y < 0 || static_cast<std::size_t>(y) >= num_classes) {
            throw FormatError("dataset: label " + std::to_string(y) + " outside [0, " +
                              std::to_string(num_classes) + ")");
        }
    }
}

Dataset Dataset::subset(std::span<const std::size_t> indices) const {
    Dataset out;
    out.feature_dim = feature_dim;
    out.num_classes = num_classes;
    out.labels.reserve(indices.size());
    out.features.reserve(indices.size() * feature_dim);
    for (std::size_t i : indices) {
        const auto r = row(i);
        out.features.insert(out.features.end(), r.begin(), r.end());
        out.labels.push_back(labels.at(i));
    }
    return out;
}

std::vector<std::size_t> Dataset::class_counts() const {
    std::vector<std::size_t> counts(num_classes, 0);
    for (int y : labels) ++counts[static_cast<std::size_t>(y)];
    return counts;
}

void DirichletSpec::validate() const {
    if (!(alpha > 0.0)) throw ConfigError("dirichlet alpha must be > 0");
    if (num_nodes == 0) throw ConfigError("dirichlet num_nodes must be >= 1");
    if (num_classes == 0) throw ConfigError("dirichlet num_classes must be >= 1");
}

std::vector<double> sample_dirichlet(double alpha, std::size_t dim, Rng& rng) {
    std::gamma_distribution<double> gamma(alpha, 1.0);
    std::vector<double> p(dim);
    double total = 0.0;
    for (auto& v : p) {
        v = gamma(rng);
        total += v;
    }
    if (!(total > 0.0)) {
        // Every gamma draw underflowed (tiny alpha): the limit is a vertex.
        std::fill(p.begin(), p.end(), 0.0);
        p[std::uniform_int_distribution<std::size_t>(0, dim - 1)(rng)] = 1.0;
        return p;
    }
    for (auto& v : p) v /= total;
    return p;
}

namespace {

// Integer apportionment of `total` proportional to `weights` (Sainte-Lague
// highest averages), never exceeding `caps`. Ties go to the lower index.
std::vector<std::size_t> apportion(std::span<const double> weights, std::size_t total,
                                   std::span<const std::size_t> caps) {
    const std::size_t k = weights.size();
    std::vector<std::size_t> counts(k, 0);
    for (std::size_t unit = 0; unit < total; ++unit) {
        std::size_t best = k;
        double best_score = -1.0;
        for (std::size_t c = 0; c < k; ++c) {
            if (counts[c] >= caps[c]) continue;
            const double score = weights[c] / (static_cast<double>(counts[c]) + 0.5);
            if (score > best_score) {
                best_score = score;
                best = c;
            }
        }
        if (best == k) throw std::logic_error("apportion: total exceeds capacity");
        ++counts[best];
    }
    return counts;
}

} // namespace

std::vector<Shard> partition_dirichlet(const Dataset& data, const DirichletSpec& spec, Rng& rng,
                                       PartitionReport* report, std::size_t max_retries) {
    spec.validate();
    const std::size_t num_classes = spec.num_classes;
    if (data.num_classes != num_classes) {
        throw ConfigError("partition_dirichlet: dataset has " + std::to_string(data.num_classes) +
                          " classes, spec has " + std::to_string(num_classes));
    }
    if (data.size() < spec.num_nodes * num_classes) {
        throw ConfigError("partition_dirichlet: need at least N*C = " +
                          std::to_string(spec.num_nodes * num_classes) + " samples, have " +
                          std::to_string(data.size()));
    }

    std::vector<std::vector<std::size_t>> pools(num_classes);
    for (std::size_t i = 0; i < data.size(); ++i) {
        pools[static_cast<std::size_t>(data.labels[i])].push_back(i);
    }
    for (auto& pool : pools) std::shuffle(pool.begin(), pool.end(), rng);

    const std::size_t shard_size = data.size() / spec.num_nodes;
    std::vector<std::size_t> cursor(num_classes, 0);
    PartitionReport local;
    std::vector<Shard> shards(spec.num_nodes);

    for (std::size_t node = 0; node < spec.num_nodes; ++node) {
        std::vector<std::size_t> available(num_classes);
        for (std::size_t c = 0; c < num_classes; ++c) available[c] = pools[c].size() - cursor[c];
        const std::vector<std::size_t> unlimited(num_classes, shard_size);

        std::vector<double> proportions;
        std::vector<std::size_t> counts;
        bool feasible = false;
        for (std::size_t attempt = 0; attempt <= max_retries && !feasible; ++attempt) {
            if (attempt > 0) ++local.retries;
            proportions = sample_dirichlet(spec.alpha, num_classes, rng);
            counts = apportion(proportions, shard_size, unlimited);
            feasible = std::equal(counts.begin(), counts.end(), available.begin(),
                                  [](std::size_t want, std::size_t have) { return want <= have; });
        }
        if (!feasible) {
            ++local.fallbacks;
            counts = apportion(proportions, shard_size, available);
        }

        Shard& shard = shards[node];
        shard.owner = node;
        shard.indices.reserve(shard_size);
        for (std::size_t c = 0; c < num_classes; ++c) {
            for (std::size_t t = 0; t < counts[c]; ++t) shard.indices.push_back(pools[c][cursor[c]++]);
        }
        std::sort(shard.indices.begin(), shard.indices.end());
    }
    if (report) *report = local;
    return shards;
}

Dataset make_synthetic(const SyntheticSpec& spec, Rng& rng) {
    if (spec.num_classes < 2) throw ConfigError("make_synthetic: num_classes must be >= 2");
    if (spec.feature_dim == 0) throw ConfigError("make_synthetic: feature_dim must be >= 1");
    if (spec.separation < 0.0) throw ConfigError("make_synthetic: separation must be >= 0");

    const std::size_t dim = spec.feature_dim;
    const std::size_t classes = spec.num_classes;
    std::normal_distribution<double> normal(0.0, 1.0);

    // Orthonormal directions when dim >= C give pairwise center distance
    // exactly `separation`; otherwise random unit directions.
    std::vector<std::vector<double>> dirs;
    dirs.reserve(classes);
    for (std::size_t c = 0; c < classes; ++c) {
        std::vector<double> v(dim);
        for (auto& x : v) x = normal(rng);
        if (c < dim) {
            for (const auto& q : dirs) {
                const double proj = std::inner_product(v.begin(), v.end(), q.begin(), 0.0);
                for (std::size_t d = 0; d < dim; ++d) v[d] -= proj * q[d];
            }
        }
        const double norm = std::sqrt(std::inner_product(v.begin(), v.end(), v.begin(), 0.0));
        for (auto& x : v) x /= norm;
        dirs.push_back(std::move(v));
    }
    const double radius = spec.separation / std::sqrt(2.0);

    Dataset out;
    out.feature_dim = dim;
    out.num_classes = classes;
    out.features.resize(spec.num_samples * dim);
    out.labels.resize(spec.num_samples);
    for (std::size_t i = 0; i < spec.num_samples; ++i) {
        const std::size_t c = i % classes;
        out.labels[i] = static_cast<int>(c);
        double* row = out.features.data() + i * dim;
        for (std::size_t d = 0; d < dim; ++d) row[d] = radius * dirs[c][d] + normal(rng);
    }
    return out;
}

std::pair<Dataset, Dataset> split_tail(const Dataset& data, std::size_t test_size) {
    if (test_size > data.size()) throw ConfigError("split_tail: test size exceeds dataset size");
    const std::size_t train_size = data.size() - test_size;
    std::vector<std::size_t> head(train_size), tail(test_size);
    std::iota(head.begin(), head.end(), 0);
    std::iota(tail.begin(), tail.end(), train_size);
    return {data.subset(head), data.subset(tail)};
}

namespace {

constexpr std::uint32_t kImageMagic = 0x00000803;
constexpr std::uint32_t kLabelMagic = 0x00000801;

std::uint32_t read_be32(std::istream& in, const std::filesystem::path& path) {
    std::array<unsigned char, 4> b{};
    if (!in.read(reinterpret_cast<char*>(b.data()), 4)) {
        throw FormatError(path.string() + ": truncated IDX header");
    }
    return (std::uint32_t{b[0]} << 24) | (std::uint32_t{b[1]} << 16) |
           (std::uint32_t{b[2]} << 8) | std::uint32_t{b[3]};
}

void write_be32(std::ostream& out, std::uint32_t v) {
    const std::array<char, 4> b{static_cast<char>(v >> 24), static_cast<char>(v >> 16),
                                static_cast<char>(v >> 8), static_cast<char>(v)};
    out.write(b.data(), 4);
}

std::ifstream open_binary(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw FormatError(path.string() + ": cannot open");
    return in;
}

} // namespace

Dataset load_idx(const std::filesystem::path& images_path,
                 const std::filesystem::path& labels_path, std::size_t max_samples) {
    auto images = open_binary(images_path);
    auto labels = open_binary(labels_path);

    const std::uint32_t image_magic = read_be32(images, images_path);
    if (image_magic != kImageMagic) {
        throw FormatError(images_path.string() + ": bad IDX image magic number");
    }
    const std::uint32_t image_count = read_be32(images, images_path);
    const std::uint32_t rows = read_be32(images, images_path);
    const std::uint32_t cols = read_be32(images, images_path);

    const std::uint32_t label_magic = read_be32(labels, labels_path);
    if (label_magic != kLabelMagic) {
        throw FormatError(labels_path.string() + ": bad IDX label magic number");
    }
    const std::uint32_t label_count = read_be32(labels, labels_path);
    if (label_count != image_count) {
        throw FormatError(labels_path.string() + ": label count " + std::to_string(label_count) +
                          " does not match image count " + std::to_string(image_count) + " in " +
                          images_path.string());
    }

    const std::size_t n = std::min<std::size_t>(image_count, max_samples);
    const std::size_t dim = std::size_t{rows} * cols;
    Dataset out;
    out.feature_dim = dim;

    std::vector<unsigned char> pixels(n * dim);
    if (n > 0 && !images.read(reinterpret_cast<char*>(pixels.data()),
                              static_cast<std::streamsize>(pixels.size()))) {
        throw FormatError(images_path.string() + ": truncated image payload");
    }
    std::vector<unsigned char> raw_labels(n);
    if (n > 0 && !labels.read(reinterpret_cast<char*>(raw_labels.data()),
                              static_cast<std::streamsize>(n))) {
        throw FormatError(labels_path.string() + ": truncated label payload");
    }

    out.features.resize(pixels.size());
    std::transform(pixels.begin(), pixels.end(), out.features.begin(),
                   [](unsigned char p) { return static_cast<double>(p) / 255.0; });
    out.labels.assign(raw_labels.begin(), raw_labels.end());
    int max_label = -1;
    for (int y : out.labels) max_label = std::max(max_label, y);
    out.num_classes = static_cast<std::size_t>(max_label + 1);
    return out;
}

void write_idx(const std::filesystem::path& images_path, const std::filesystem::path& labels_path,
               std::span<const std::uint8_t> pixels, std::span<const std::uint8_t> labels,
               std::uint32_t rows, std::uint32_t cols) {
    if (pixels.size() != labels.size() * rows * cols) {
        throw FormatError("write_idx: pixel buffer does not match label count");
    }
    std::ofstream img(images_path, std::ios::binary);
    std::ofstream lab(labels_path, std::ios::binary);
    if (!img || !lab) throw FormatError("write_idx: cannot open output files");
    write_be32(img, kImageMagic);
    write_be32(img, static_cast<std::uint32_t>(labels.size()));
    write_be32(img, rows);
    write_be32(img, cols);
    img.write(reinterpret_cast<const char*>(pixels.data()),
              static_cast<std::streamsize>(pixels.size()));
    write_be32(lab, kLabelMagic);
    write_be32(lab, static_cast<std::uint32_t>(labels.size()));
    lab.write(reinterpret_cast<const char*>(labels.data()),
              static_cast<std::streamsize>(labels.size()));
}

} // namespace ocdfl::data
