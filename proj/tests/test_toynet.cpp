#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <numeric>

#include "qsamp/serialize.hpp"
#include "qsamp/toynet.hpp"

using namespace qsamp;

namespace {

// Central finite differences against the analytic batch gradient over a
// parameter subset; returns the max relative error (floored denominators).
double fd_max_rel_error(ToyModel model, const LabeledDataset& ds, std::span<const long> idx,
                        int sid, const std::vector<long>& subset, double reg = 0.0) {
    auto analytic = batch_gradient(model, ds, idx, sid, reg);
    const double h = 1e-5;
    double worst = 0;
    for (long j : subset) {
        double saved = model.params[j];
        model.params[j] = saved + h;
        double lp = batch_loss(model, ds, idx, sid, reg);
        model.params[j] = saved - h;
        double lm = batch_loss(model, ds, idx, sid, reg);
        model.params[j] = saved;
        double fd = (lp - lm) / (2 * h);
        double an = analytic[j];
        double denom = std::max(std::abs(fd), std::abs(an));
        if (denom < 1e-7) {
            if (std::abs(fd - an) > 1e-9) worst = std::max(worst, 1.0);
            continue;
        }
        worst = std::max(worst, std::abs(fd - an) / denom);
    }
    return worst;
}

std::vector<long> subset_for(const ToyModel& m, Rng& rng, size_t cap = 1500) {
    std::vector<long> all(m.params.size());
    std::iota(all.begin(), all.end(), 0);
    if (all.size() <= cap) return all;
    // always include the feature table tail plus a random spread of weights
    std::vector<long> pick;
    long feat = m.feature_offset();
    for (long j = feat; j < static_cast<long>(m.params.size()) && pick.size() < cap / 3; ++j)
        pick.push_back(j);
    while (pick.size() < cap) pick.push_back(static_cast<long>(rng.below(feat)));
    return pick;
}

LabeledDataset tiny_dataset(FieldKind kind, uint64_t seed) {
    auto sphere = make_named_shape("sphere");
    auto ds = build_dataset(sphere, "S_HNS", FieldSpec{kind, 0.1}, 10, seed);
    return ds;
}

}  // namespace

TEST_CASE("parameter counts match the architecture arithmetic") {
    ArchConfig plain = ArchConfig::global_mlp();
    plain.feature_dim = 0;  // 3 -> 64 -> 64 -> 64 -> 1
    CHECK(plain.param_count() == 3 * 64 + 64 + 64 * 64 + 64 + 64 * 64 + 64 + 64 * 1 + 1);
    CHECK(plain.param_count() == 8641);

    ArchConfig grid = ArchConfig::grid_interp();
    long grid_seg = 16L * 16 * 16 * 8;
    CHECK(grid_seg == 32768);
    long decoder = 11 * 64 + 64 + 64 * 64 + 64 + 64 * 1 + 1;
    CHECK(grid.param_count() == decoder + grid_seg);

    ArchConfig ad = ArchConfig::auto_decoder(3);
    long dec = 35 * 128 + 128 + 128 * 128 + 128 + 128 * 128 + 128 + 128 + 1;
    CHECK(ad.param_count() == dec + 3 * 32);
}

TEST_CASE("same seed gives identical parameters") {
    auto a = init_model(ArchConfig::global_mlp(), {FieldKind::Occ}, 7);
    auto b = init_model(ArchConfig::global_mlp(), {FieldKind::Occ}, 7);
    CHECK(a.params == b.params);
    auto c = init_model(ArchConfig::global_mlp(), {FieldKind::Occ}, 8);
    CHECK(a.params != c.params);
}

TEST_CASE("constant grid interpolates to the constant everywhere") {
    auto m = init_model(ArchConfig::grid_interp(), {FieldKind::Sdf}, 3);
    long feat = m.feature_offset();
    for (long r = 0; r < m.arch.feature_rows(); ++r)
        for (int f = 0; f < 8; ++f) m.params[feat + r * 8 + f] = 0.25 * (f + 1);

    // zero the decoder weights except a pass-through of feature 0
    NetWorkspace ws;
    Rng rng(4);
    for (int i = 0; i < 100; ++i) {
        Vec3 p = rng.uniform_box();
        forward_raw(m, p, 0, ws);
        for (int f = 0; f < 8; ++f)
            CHECK(ws.input[3 + f] == doctest::Approx(0.25 * (f + 1)).epsilon(1e-12));
    }
}

TEST_CASE("lattice-corner queries return the corner feature exactly") {
    auto m = init_model(ArchConfig::grid_interp(), {FieldKind::Sdf}, 3);
    int g = m.arch.grid_res;
    NetWorkspace ws;
    Rng rng(5);
    for (int trial = 0; trial < 50; ++trial) {
        int i = static_cast<int>(rng.below(g)), j = static_cast<int>(rng.below(g)),
            k = static_cast<int>(rng.below(g));
        double h = 1.0 / (g - 1);
        Vec3 p{-0.5 + i * h, -0.5 + j * h, -0.5 + k * h};
        forward_raw(m, p, 0, ws);
        long row = i + static_cast<long>(g) * (j + static_cast<long>(g) * k);
        auto feat = m.feature_row(row);
        for (int f = 0; f < 8; ++f)
            CHECK(ws.input[3 + f] == doctest::Approx(feat[f]).epsilon(1e-9));
    }
}

TEST_CASE("Occ head output stays in (0,1)") {
    auto m = init_model(ArchConfig::global_mlp(), {FieldKind::Occ}, 11);
    Rng rng(12);
    for (int i = 0; i < 10000; ++i) {
        double v = predict(m, rng.uniform_box());
        CHECK(v > 0.0);
        CHECK(v < 1.0);
    }
}

TEST_CASE("loss examples") {
    FieldSpec sdf{FieldKind::Sdf};
    std::vector<double> pred = {0.3, -0.2, 0.05};
    CHECK(loss_value(sdf, pred, pred) == 0.0);

    FieldSpec occ{FieldKind::Occ};
    std::vector<double> raw = {0.0, 0.0, 0.0};  // sigmoid -> 0.5
    std::vector<double> y = {1.0, 0.0, 1.0};
    CHECK(loss_value(occ, raw, y) == doctest::Approx(std::log(2.0)));

    FieldSpec tsdf{FieldKind::Tsdf, 0.1};
    std::vector<double> p3 = {0.3}, y3 = {0.3};
    CHECK(loss_value(tsdf, p3, y3) == 0.0);  // both clamp to 0.1

    std::vector<double> nan = {std::numeric_limits<double>::quiet_NaN()};
    CHECK_THROWS_AS(loss_value(sdf, nan, std::vector<double>{0.0}), DataError);
}

TEST_CASE("gradients match central finite differences for every archetype and head") {
    std::vector<long> idx(10);
    std::iota(idx.begin(), idx.end(), 0);
    Rng subset_rng(1234);

    for (FieldKind kind : {FieldKind::Occ, FieldKind::Sdf, FieldKind::Tsdf, FieldKind::Udf}) {
        auto ds = tiny_dataset(kind, 42 + static_cast<int>(kind));
        CAPTURE(to_string(kind));

        auto mlp = init_model(ArchConfig::global_mlp(), FieldSpec{kind, 0.1}, 7);
        CHECK(fd_max_rel_error(mlp, ds, idx, 0, subset_for(mlp, subset_rng)) < 1e-4);

        auto grid = init_model(ArchConfig::grid_interp(), FieldSpec{kind, 0.1}, 7);
        CHECK(fd_max_rel_error(grid, ds, idx, 0, subset_for(grid, subset_rng)) < 1e-4);

        // standard init keeps ReLU pre-activations clear of the 1e-5 FD step
        ArchConfig ad_cfg = ArchConfig::auto_decoder(1);
        ad_cfg.init_scale = 1.0;
        auto ad = init_model(ad_cfg, FieldSpec{kind, 0.1}, 7);
        CHECK(fd_max_rel_error(ad, ds, idx, 0, subset_for(ad, subset_rng), 1e-4) < 1e-4);

        // tanh variant of the deep decoder (init away from the FD noise floor)
        ArchConfig ad_tanh = ArchConfig::auto_decoder(1);
        ad_tanh.activation = Activation::Tanh;
        ad_tanh.init_scale = 0.5;
        auto ad2 = init_model(ad_tanh, FieldSpec{kind, 0.1}, 7);
        CHECK(fd_max_rel_error(ad2, ds, idx, 0, subset_for(ad2, subset_rng), 1e-4) < 1e-4);
    }
}

TEST_CASE("tanh variant also passes the gradient check") {
    std::vector<long> idx(10);
    std::iota(idx.begin(), idx.end(), 0);
    Rng subset_rng(99);
    auto ds = tiny_dataset(FieldKind::Sdf, 5);
    ArchConfig cfg = ArchConfig::global_mlp();
    cfg.activation = Activation::Tanh;
    auto m = init_model(cfg, {FieldKind::Sdf}, 7);
    CHECK(fd_max_rel_error(m, ds, idx, 0, subset_for(m, subset_rng)) < 1e-4);
}

TEST_CASE("empty batch yields a zero gradient") {
    auto m = init_model(ArchConfig::global_mlp(), {FieldKind::Sdf}, 7);
    auto ds = tiny_dataset(FieldKind::Sdf, 3);
    auto g = batch_gradient(m, ds, {}, 0);
    for (double v : g) CHECK(v == 0.0);
}

TEST_CASE("zero output weights block upstream gradients") {
    auto m = init_model(ArchConfig::global_mlp(), {FieldKind::Sdf}, 7);
    // zero the last layer's weights: every upstream parameter gradient dies,
    // only the output bias keeps a gradient
    int last = m.arch.layer_count() - 1;
    auto w = m.layer_weights(last);
    long w_off = w.data() - m.params.data();
    for (size_t i = 0; i < w.size(); ++i) m.params[w_off + i] = 0.0;

    std::vector<long> idx(10);
    std::iota(idx.begin(), idx.end(), 0);
    auto ds = tiny_dataset(FieldKind::Sdf, 3);
    auto g = batch_gradient(m, ds, idx, 0);
    long b_off = m.layer_biases(last).data() - m.params.data();
    for (long j = 0; j < static_cast<long>(m.params.size()); ++j) {
        bool is_last_w = j >= w_off && j < w_off + static_cast<long>(w.size());
        bool is_last_b = j == b_off;
        if (!is_last_w && !is_last_b) CHECK(g[j] == 0.0);
    }
    CHECK(g[b_off] != 0.0);
}

TEST_CASE("training: zero epochs change nothing; seeds reproduce traces") {
    auto sphere = make_named_shape("sphere");
    auto ds = build_dataset(sphere, "S_BS", {FieldKind::Occ}, 500, 3);
    auto m0 = init_model(ArchConfig::global_mlp(), {FieldKind::Occ}, 7);

    ToyModel m = m0;
    TrainConfig cfg;
    cfg.epochs = 0;
    cfg.seed = 1;
    train(m, ds, cfg);
    CHECK(m.params == m0.params);

    cfg.epochs = 20;
    ToyModel a = m0, b = m0;
    auto ta = train(a, ds, cfg);
    auto tb = train(b, ds, cfg);
    CHECK(ta.loss_trace == tb.loss_trace);
    CHECK(a.params == b.params);
    CHECK(model_checksum(a) == model_checksum(b));
    CHECK(a.params != m0.params);
}

TEST_CASE("GlobalMLP fits sphere occupancy from S_BS (reference run)") {
    auto sphere = make_named_shape("sphere");
    auto ds = build_dataset(sphere, "S_BS", {FieldKind::Occ}, 2000, 7);
    auto m = init_model(ArchConfig::global_mlp(), {FieldKind::Occ}, 7);
    TrainConfig cfg;
    cfg.epochs = 500;
    cfg.seed = 9;
    auto result = train(m, ds, cfg);
    CHECK(result.loss_trace.back() < 0.1);
}

TEST_CASE("masked points are excluded from training") {
    auto sphere = make_named_shape("sphere");
    auto masked = build_dataset(sphere, "S_UNI", {FieldKind::Udf}, 400, 3, 0.1);
    // keep only the kept points in a clone without mask: training must match
    LabeledDataset kept_only;
    kept_only.field = masked.field;
    for (long i = 0; i < masked.size(); ++i)
        if (masked.mask[i]) {
            kept_only.points.push_back(masked.points[i]);
            kept_only.values.push_back(masked.values[i]);
        }
    TrainConfig cfg;
    cfg.epochs = 5;
    cfg.seed = 4;
    auto a = init_model(ArchConfig::grid_interp(), {FieldKind::Udf}, 7);
    auto b = a;
    train(a, masked, cfg);
    train(b, kept_only, cfg);
    CHECK(a.params == b.params);
}

TEST_CASE("GridInterp locality: a vertex feature only affects its 8-cell support") {
    auto m = init_model(ArchConfig::grid_interp(), {FieldKind::Sdf}, 21);
    int g = m.arch.grid_res;
    double h = 1.0 / (g - 1);
    int vi = 7, vj = 8, vk = 9;
    long row = vi + static_cast<long>(g) * (vj + static_cast<long>(g) * vk);

    Rng rng(31);
    std::vector<Vec3> probes;
    for (int i = 0; i < 3000; ++i) probes.push_back(rng.uniform_box());
    std::vector<double> before;
    for (const auto& p : probes) before.push_back(predict(m, p));

    long off = m.feature_offset() + row * m.arch.feature_dim;
    for (int f = 0; f < m.arch.feature_dim; ++f) m.params[off + f] += 0.5;

    for (size_t i = 0; i < probes.size(); ++i) {
        double after = predict(m, probes[i]);
        const Vec3& p = probes[i];
        bool in_support = std::abs(p.x - (-0.5 + vi * h)) < h &&
                          std::abs(p.y - (-0.5 + vj * h)) < h &&
                          std::abs(p.z - (-0.5 + vk * h)) < h;
        if (!in_support)
            CHECK(after == before[i]);
    }
}

TEST_CASE("fit_latent leaves the decoder untouched and zero iterations return the init") {
    auto sphere = make_named_shape("sphere");
    auto ds = build_dataset(sphere, "S_BS", {FieldKind::Sdf}, 300, 5);
    auto m = init_model(ArchConfig::auto_decoder(1), {FieldKind::Sdf}, 7);
    TrainConfig cfg;
    cfg.epochs = 10;
    cfg.seed = 3;
    train(m, ds, cfg);
    uint32_t before = model_checksum(m);

    cfg.latent_iterations = 0;
    auto z0 = fit_latent(m, ds, cfg);
    Rng expect(cfg.seed, 0x1A7E);
    for (double v : z0) CHECK(v == expect.normal() * m.arch.feature_init_sigma);

    cfg.latent_iterations = 50;
    auto z = fit_latent(m, ds, cfg);
    CHECK(model_checksum(m) == before);
    CHECK(z.size() == 32);
    CHECK(z != z0);
}

TEST_CASE("grid_eval equals pointwise forward and handles R=2") {
    auto m = init_model(ArchConfig::global_mlp(), {FieldKind::Sdf}, 13);
    auto grid = grid_eval(m, 0, 2);
    CHECK(grid.values.size() == 8);
    for (int k = 0; k < 2; ++k)
        for (int j = 0; j < 2; ++j)
            for (int i = 0; i < 2; ++i)
                CHECK(grid.at(i, j, k) == predict(m, grid.position(i, j, k)));

    // constant-function model: zero all weights, bias at the output
    for (auto& p : m.params) p = 0;
    m.params[m.layer_biases(m.arch.layer_count() - 1).data() - m.params.data()] = 0.25;
    auto flat = grid_eval(m, 0, 5);
    for (double v : flat.values) CHECK(v == 0.25);
}

TEST_CASE("checkpoint round-trip and corruption detection") {
    auto m = init_model(ArchConfig::auto_decoder(2), {FieldKind::Tsdf, 0.1}, 77);
    m.command = "unit-test";
    m.train_info = R"({"epochs": 3})";
    std::string path = "/tmp/qsamp_test_model.json";
    save_model(m, path);
    auto back = load_model(path);
    CHECK(back.params == m.params);
    CHECK(back.arch.archetype == Archetype::AutoDecoder);
    CHECK(back.arch.n_shapes == 2);
    CHECK(back.field.kind == FieldKind::Tsdf);
    CHECK(back.init_seed == 77);
    CHECK(model_checksum(back) == model_checksum(m));

    auto bytes = read_file_bytes(path + ".bin");
    bytes[9] ^= 0x01;
    write_file_bytes(path + ".bin", bytes);
    CHECK_THROWS_AS(load_model(path), DataError);
}

TEST_CASE("training diverging to NaN is reported") {
    auto sphere = make_named_shape("sphere");
    auto ds = build_dataset(sphere, "S_UNI", {FieldKind::Sdf}, 64, 3);
    ds.values[5] = std::numeric_limits<double>::quiet_NaN();
    auto m = init_model(ArchConfig::global_mlp(), {FieldKind::Sdf}, 7);
    TrainConfig cfg;
    cfg.epochs = 2;
    cfg.seed = 1;
    CHECK_THROWS_AS(train(m, ds, cfg), DataError);
}
