#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <numeric>
#include <set>

#include "ocdfl/datagen.hpp"
#include "ocdfl/errors.hpp"

using namespace ocdfl;
using namespace ocdfl::data;
namespace fs = std::filesystem;

namespace {

fs::path scratch(const std::string& name) {
    const auto dir = fs::temp_directory_path() / "ocdfl_test_datagen";
    fs::create_directories(dir);
    return dir / name;
}

Dataset balanced(std::size_t per_class, std::size_t classes) {
    SyntheticSpec spec;
    spec.num_samples = per_class * classes;
    spec.feature_dim = 4;
    spec.num_classes = classes;
    Rng rng = make_stream(1, 0);
    return make_synthetic(spec, rng);
}

void check_partition(const Dataset& data, const std::vector<Shard>& shards, std::size_t nodes) {
    REQUIRE(shards.size() == nodes);
    std::set<std::size_t> seen;
    for (std::size_t k = 0; k < nodes; ++k) {
        CHECK(shards[k].owner == k);
        CHECK(shards[k].indices.size() == data.size() / nodes);
        CHECK(std::is_sorted(shards[k].indices.begin(), shards[k].indices.end()));
        for (auto i : shards[k].indices) {
            REQUIRE(i < data.size());
            REQUIRE(seen.insert(i).second);
        }
    }
}

} // namespace

TEST_CASE("synthetic data is balanced and well formed") {
    const auto d = balanced(50, 10);
    d.validate();
    CHECK(d.size() == 500);
    CHECK(d.features.size() == 500 * 4);
    for (auto c : d.class_counts()) CHECK(c == 50);
    for (std::size_t j = 0; j < d.size(); ++j) CHECK(d.labels[j] == static_cast<int>(j % 10));
}

TEST_CASE("split_tail keeps order") {
    const auto d = balanced(10, 5);
    const auto [train, test] = split_tail(d, 15);
    CHECK(train.size() == 35);
    CHECK(test.size() == 15);
    CHECK(test.labels.front() == d.labels[35]);
    CHECK(std::equal(test.row(0).begin(), test.row(0).end(), d.row(35).begin()));
    CHECK_THROWS(split_tail(d, 51));
}

TEST_CASE("Dirichlet draws lie on the simplex") {
    Rng rng = make_stream(2, 0);
    for (double alpha : {1e-3, 0.1, 1.0, 100.0}) {
        for (int t = 0; t < 200; ++t) {
            const auto p = sample_dirichlet(alpha, 10, rng);
            REQUIRE(p.size() == 10);
            for (double v : p) REQUIRE(v >= 0.0);
            REQUIRE(std::accumulate(p.begin(), p.end(), 0.0) == doctest::Approx(1.0).epsilon(1e-12));
        }
    }
}

TEST_CASE("large alpha gives near-uniform class mixes") {
    const auto d = balanced(200, 10);
    Rng rng = make_stream(3, 0);
    const auto shards = partition_dirichlet(d, {1e6, 10, 10}, rng);
    check_partition(d, shards, 10);
    for (const auto& s : shards) {
        std::vector<std::size_t> counts(10, 0);
        for (auto i : s.indices) ++counts[static_cast<std::size_t>(d.labels[i])];
        for (auto c : counts) CHECK(std::abs(static_cast<long>(c) - 20L) <= 2);
    }
}

TEST_CASE("small alpha concentrates each shard on few classes") {
    const auto d = balanced(200, 10);
    Rng rng = make_stream(4, 0);
    PartitionReport report;
    const auto shards = partition_dirichlet(d, {0.01, 10, 10}, rng, &report);
    check_partition(d, shards, 10);
    std::size_t concentrated = 0;
    for (const auto& s : shards) {
        std::vector<std::size_t> counts(10, 0);
        for (auto i : s.indices) ++counts[static_cast<std::size_t>(d.labels[i])];
        if (*std::max_element(counts.begin(), counts.end()) >= s.indices.size() / 2) ++concentrated;
    }
    CHECK(concentrated >= 5);
}

TEST_CASE("partition is disjoint and equal-sized over many seeds") {
    const auto d = balanced(37, 7);
    for (std::uint64_t seed = 0; seed < 50; ++seed) {
        Rng rng = make_stream(seed, 4);
        for (double alpha : {0.05, 1.0, 100.0}) {
            check_partition(d, partition_dirichlet(d, {alpha, 6, 7}, rng), 6);
        }
    }
}

TEST_CASE("one node gets every sample up to the floor") {
    const auto d = balanced(10, 3);
    Rng rng = make_stream(5, 0);
    const auto shards = partition_dirichlet(d, {1.0, 1, 3}, rng);
    REQUIRE(shards.size() == 1);
    CHECK(shards[0].indices.size() == 30);
}

TEST_CASE("too little data is rejected") {
    const auto d = balanced(1, 10);
    Rng rng = make_stream(6, 0);
    CHECK_THROWS_AS((partition_dirichlet(d, {1.0, 5, 10}, rng)), std::invalid_argument);
    CHECK_THROWS((DirichletSpec{0.0, 5, 10}.validate()));
}

TEST_CASE("IDX round trip") {
    const std::uint32_t rows = 3, cols = 2;
    const std::vector<std::uint8_t> pixels{0, 255, 51, 102, 7, 9, 1, 2, 3, 4, 5, 6, 200, 100, 0, 0, 0, 255};
    const std::vector<std::uint8_t> labels{3, 0, 1};
    const auto img = scratch("rt-images.idx"), lab = scratch("rt-labels.idx");
    write_idx(img, lab, pixels, labels, rows, cols);

    const auto d = load_idx(img, lab, 100);
    CHECK(d.size() == 3);
    CHECK(d.feature_dim == 6);
    CHECK(d.num_classes == 4);
    CHECK(d.labels == std::vector<int>{3, 0, 1});
    for (std::size_t i = 0; i < pixels.size(); ++i) CHECK(d.features[i] == pixels[i] / 255.0);

    const auto head = load_idx(img, lab, 2);
    CHECK(head.size() == 2);
}

TEST_CASE("IDX errors name the offending file") {
    const auto img = scratch("bad-images.idx"), lab = scratch("bad-labels.idx");
    const std::vector<std::uint8_t> pixels(8, 1);
    const std::vector<std::uint8_t> labels{0, 1};
    write_idx(img, lab, pixels, labels, 2, 2);

    SUBCASE("wrong magic") {
        std::fstream f(lab, std::ios::in | std::ios::out | std::ios::binary);
        f.seekp(3);
        f.put(0x03);
        f.close();
        try {
            load_idx(img, lab, 10);
            FAIL("expected FormatError");
        } catch (const FormatError& e) {
            CHECK(std::string(e.what()).find("bad-labels.idx") != std::string::npos);
        }
    }
    SUBCASE("truncated images") {
        fs::resize_file(img, fs::file_size(img) - 3);
        try {
            load_idx(img, lab, 10);
            FAIL("expected FormatError");
        } catch (const FormatError& e) {
            CHECK(std::string(e.what()).find("bad-images.idx") != std::string::npos);
        }
    }
    SUBCASE("count mismatch") {
        const std::vector<std::uint8_t> three{0, 1, 2};
        write_idx(scratch("other-images.idx"), scratch("three-labels.idx"), std::vector<std::uint8_t>(12, 0),
                  three, 2, 2);
        CHECK_THROWS_AS(load_idx(img, scratch("three-labels.idx"), 10), FormatError);
    }
    SUBCASE("missing file") {
        CHECK_THROWS(load_idx(scratch("nope.idx"), lab, 10));
    }
}
