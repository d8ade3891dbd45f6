#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <numeric>

#include "ocdfl/datagen.hpp"
#include "ocdfl/errors.hpp"
#include "ocdfl/learner.hpp"

using namespace ocdfl;
using namespace ocdfl::learn;
namespace fs = std::filesystem;

namespace {

data::Dataset task(std::size_t n, std::size_t dim, std::size_t classes, std::uint64_t seed) {
    data::SyntheticSpec spec;
    spec.num_samples = n;
    spec.feature_dim = dim;
    spec.num_classes = classes;
    Rng rng = make_stream(seed, 3);
    return data::make_synthetic(spec, rng);
}

std::vector<std::size_t> all_rows(std::size_t n) {
    std::vector<std::size_t> idx(n);
    std::iota(idx.begin(), idx.end(), 0);
    return idx;
}

// Central differences against the analytic gradient; returns the relative error in norm.
double gradient_error(const ModelParams& model, const data::Dataset& d, std::span<const std::size_t> batch) {
    std::vector<double> grad(model.values.size());
    loss_and_gradient(model, d, batch, grad);
    std::vector<double> scratch(model.values.size());
    const double h = 1e-5;
    double diff = 0.0, ref = 0.0;
    ModelParams probe = model;
    for (std::size_t p = 0; p < model.values.size(); ++p) {
        probe.values[p] = model.values[p] + h;
        const double up = loss_and_gradient(probe, d, batch, scratch);
        probe.values[p] = model.values[p] - h;
        const double down = loss_and_gradient(probe, d, batch, scratch);
        probe.values[p] = model.values[p];
        const double numeric = (up - down) / (2.0 * h);
        diff += (numeric - grad[p]) * (numeric - grad[p]);
        ref += grad[p] * grad[p];
    }
    return std::sqrt(diff) / std::sqrt(ref);
}

} // namespace

TEST_CASE("parameter count") {
    const Layout layout{{32, 64, 10}};
    std::size_t expected = 0;
    for (std::size_t l = 0; l + 1 < layout.dims.size(); ++l) expected += layout.dims[l] * layout.dims[l + 1] + layout.dims[l + 1];
    CHECK(layout.num_params() == expected);
    CHECK(layout.num_params() == 2762);
    CHECK(Layout{{4, 3}}.num_params() == 15);
    CHECK_THROWS_AS((Layout{{4}}.validate()), LayoutError);
    CHECK_THROWS_AS((Layout{{4, 0, 3}}.validate()), LayoutError);
}

TEST_CASE("Glorot initialization") {
    const Layout layout{{32, 64, 10}};
    Rng a = make_stream(1, 5), b = make_stream(1, 5);
    const auto m = init_model(layout, a);
    CHECK(m.values == init_model(layout, b).values);
    CHECK(m.values.size() == 2762);
    const double limit1 = std::sqrt(6.0 / (32 + 64));
    for (std::size_t p = 0; p < 32 * 64; ++p) REQUIRE(std::fabs(m.values[p]) <= limit1);
    for (std::size_t p = 32 * 64; p < 32 * 64 + 64; ++p) REQUIRE(m.values[p] == 0.0);
    CHECK(m.serialized_bits() == 2762 * 64);
}

TEST_CASE("loss gradient matches central differences") {
    const auto d = task(60, 6, 4, 2);
    for (std::uint64_t seed : {1u, 2u, 3u}) {
        Rng rng = make_stream(seed, 9);
        const auto m = init_model(Layout{{6, 8, 5, 4}}, rng);
        const std::vector<std::size_t> batch{0, 3, 7, 11, 19, 42};
        CHECK(gradient_error(m, d, batch) <= 1e-4);
    }
    const auto big = task(32, 32, 10, 4);
    Rng rng = make_stream(4, 9);
    const auto m = init_model(Layout{{32, 64, 10}}, rng);
    const auto rows = all_rows(16);
    CHECK(gradient_error(m, big, rows) <= 1e-4);
}

TEST_CASE("initial loss is near log(C) and accuracy is a fraction") {
    const auto d = task(200, 32, 10, 5);
    Rng rng = make_stream(5, 9);
    const auto m = init_model(Layout{{32, 64, 10}}, rng);
    const auto r = evaluate(m, d);
    CHECK(r.loss == doctest::Approx(std::log(10.0)).epsilon(0.3));
    CHECK(r.accuracy >= 0.0);
    CHECK(r.accuracy <= 1.0);
    CHECK_THROWS_AS(evaluate(m, d, std::span<const std::size_t>{}), std::invalid_argument);
}

TEST_CASE("local training reduces shard loss") {
    const auto d = task(400, 32, 10, 6);
    Rng rng = make_stream(6, 9);
    const auto m = init_model(Layout{{32, 64, 10}}, rng);
    const auto shard = all_rows(200);
    TrainConfig cfg;
    cfg.local_epochs = 5;
    const double before = evaluate(m, d, shard).loss;
    const auto trained = local_update(m, d, shard, cfg, rng);
    CHECK(evaluate(trained, d, shard).loss < before);
}

TEST_CASE("full-batch training is deterministic and rng-free") {
    const auto d = task(40, 5, 2, 7);
    Rng init = make_stream(7, 9);
    const auto m = init_model(Layout{{5, 3, 2}}, init);
    TrainConfig cfg;
    cfg.batch_size = 100;
    cfg.local_epochs = 3;
    Rng r1 = make_stream(1, 1), r2 = make_stream(2, 2);
    const auto rows = all_rows(40);
    CHECK(local_update(m, d, rows, cfg, r1).values == local_update(m, d, rows, cfg, r2).values);
}

TEST_CASE("diverging learning rate raises") {
    const auto d = task(50, 5, 2, 8);
    Rng rng = make_stream(8, 9);
    const auto m = init_model(Layout{{5, 16, 2}}, rng);
    TrainConfig cfg;
    cfg.learning_rate = 1e300;
    cfg.local_epochs = 20;
    CHECK_THROWS_AS(local_update(m, d, all_rows(50), cfg, rng), DivergenceError);
}

TEST_CASE("federated averaging") {
    Rng rng = make_stream(9, 9);
    const Layout layout{{4, 3, 2}};
    const auto a = init_model(layout, rng), b = init_model(layout, rng), c = init_model(layout, rng);

    SUBCASE("no received models returns own") {
        CHECK(fed_average(a, std::span<const ModelParams>{}).values == a.values);
    }
    SUBCASE("mean of two") {
        const std::vector<ModelParams> rx{b};
        const auto avg = fed_average(a, rx);
        for (std::size_t p = 0; p < a.values.size(); ++p)
            CHECK(avg.values[p] == doctest::Approx((a.values[p] + b.values[p]) / 2.0));
    }
    SUBCASE("identical models are a fixed point") {
        const std::vector<ModelParams> rx{a, a, a};
        CHECK(fed_average(a, rx).values == a.values);
    }
    SUBCASE("order of received models does not matter") {
        const std::vector<ModelParams> r1{b, c}, r2{c, b};
        CHECK(fed_average(a, r1).values == fed_average(a, r2).values);
        const std::vector<ModelParams> r3{a, c};
        CHECK(fed_average(b, r3).values == fed_average(a, r1).values);
    }
    SUBCASE("layout mismatch raises") {
        Rng other = make_stream(10, 9);
        const std::vector<ModelParams> rx{init_model(Layout{{4, 5, 2}}, other)};
        CHECK_THROWS_AS(fed_average(a, rx), LayoutError);
    }
}

TEST_CASE("checkpoint round trip") {
    Rng rng = make_stream(11, 9);
    const auto m = init_model(Layout{{32, 64, 10}}, rng);
    const auto dir = fs::temp_directory_path() / "ocdfl_test_learner";
    fs::create_directories(dir);
    const auto path = dir / "m.ckpt";
    save_checkpoint(m, path);
    const auto back = load_checkpoint(path);
    CHECK(back.layout == m.layout);
    CHECK(back.values == m.values);

    fs::resize_file(path, fs::file_size(path) - 8);
    CHECK_THROWS_AS(load_checkpoint(path), FormatError);
}
