#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "qsamp/fields.hpp"
#include "test_helpers.hpp"

using namespace qsamp;

TEST_CASE("analytic sphere SDF at hand points") {
    auto sphere = make_sphere({0, 0, 0}, 0.4);
    CHECK(evaluate_field(*sphere, {FieldKind::Sdf}, {0, 0, 0}) == doctest::Approx(-0.4));
    CHECK(evaluate_field(*sphere, {FieldKind::Sdf}, {0.4, 0, 0}) == doctest::Approx(0.0));
    CHECK(evaluate_field(*sphere, {FieldKind::Tsdf, 0.1}, {0.7, 0, 0}) == doctest::Approx(0.1));
    CHECK(evaluate_field(*sphere, {FieldKind::Tsdf, 0.1}, {0, 0, 0}) == doctest::Approx(-0.1));
    CHECK(evaluate_field(*sphere, {FieldKind::Udf}, {0, 0, 0}) == doctest::Approx(0.4));
    CHECK(evaluate_field(*sphere, {FieldKind::Occ}, {0, 0, 0}) == 1.0);
    CHECK(evaluate_field(*sphere, {FieldKind::Occ}, {0.45, 0, 0}) == 0.0);
}

TEST_CASE("analytic box SDF at hand points") {
    auto box = make_box({0, 0, 0}, {0.35, 0.35, 0.35});
    CHECK(box->signed_distance({0, 0, 0}) == doctest::Approx(-0.35));
    CHECK(box->signed_distance({0.35, 0, 0}) == doctest::Approx(0.0));
    CHECK(box->signed_distance({0.45, 0, 0}) == doctest::Approx(0.1));
    CHECK(box->signed_distance({0.45, 0.45, 0.45}) ==
          doctest::Approx(std::sqrt(3) * 0.1));
    CHECK(box->signed_distance({0.3, 0.3, 0.3}) == doctest::Approx(-0.05));
}

TEST_CASE("analytic torus SDF at hand points") {
    auto torus = make_torus({0, 0, 0}, 0.3, 0.1);
    CHECK(torus->signed_distance({0.3, 0, 0}) == doctest::Approx(-0.1));
    CHECK(torus->signed_distance({0.4, 0, 0}) == doctest::Approx(0.0));
    CHECK(torus->signed_distance({0, 0, 0}) == doctest::Approx(0.2));
    CHECK(torus->signed_distance({0, 0.3, 0.1}) == doctest::Approx(0.0));
}

TEST_CASE("field algebra: |SDF| = UDF, TSDF clamps, Occ matches SDF sign") {
    for (const auto& name : {"sphere", "box", "torus"}) {
        auto shape = make_named_shape(name);
        Rng rng(11);
        for (int i = 0; i < 2000; ++i) {
            Vec3 p = rng.uniform_box();
            double sdf = evaluate_field(*shape, {FieldKind::Sdf}, p);
            double udf = evaluate_field(*shape, {FieldKind::Udf}, p);
            double tsdf = evaluate_field(*shape, {FieldKind::Tsdf, 0.1}, p);
            double occ = evaluate_field(*shape, {FieldKind::Occ}, p);
            CHECK(std::abs(sdf) == doctest::Approx(udf).epsilon(1e-12));
            if (std::abs(sdf) <= 0.1)
                CHECK(tsdf == doctest::Approx(sdf));
            else
                CHECK(std::abs(tsdf) == doctest::Approx(0.1));
            if (udf > 1e-7) CHECK(occ == (sdf < 0 ? 1.0 : 0.0));
        }
    }
}

TEST_CASE("mesh sphere SDF tracks the analytic sphere within the mesh deviation") {
    auto mesh = make_icosphere(4, 0.4);
    double deviation = test::sphere_deviation(mesh, 0.4);
    REQUIRE(deviation < 2e-3);
    auto shape = make_mesh_shape(mesh, "icosphere4");
    Rng rng(5);
    for (int i = 0; i < 10000; ++i) {
        Vec3 p = rng.uniform_box();
        double analytic = norm(p) - 0.4;
        if (std::abs(analytic) <= deviation) continue;  // sign may differ inside the band
        double sdf = shape->signed_distance(p);
        CHECK(std::abs(sdf - analytic) <= deviation + 1e-12);
    }
}

TEST_CASE("batch_label equals the per-point loop and preserves order") {
    auto box = make_box({0, 0, 0}, {0.35, 0.35, 0.35});
    CHECK(batch_label(*box, {FieldKind::Occ}, {}).empty());
    std::vector<Vec3> pts = {{0, 0, 0}, {0.49, 0, 0}};
    auto out = batch_label(*box, {FieldKind::Occ}, pts);
    CHECK(out == std::vector<double>{1.0, 0.0});
    Rng rng(3);
    std::vector<Vec3> many;
    for (int i = 0; i < 1000; ++i) many.push_back(rng.uniform_box());
    auto batch = batch_label(*box, {FieldKind::Sdf}, many);
    for (size_t i = 0; i < many.size(); ++i)
        CHECK(batch[i] == evaluate_field(*box, {FieldKind::Sdf}, many[i]));
}

TEST_CASE("non-finite points are rejected") {
    auto sphere = make_named_shape("sphere");
    CHECK_THROWS_AS(
        evaluate_field(*sphere, {FieldKind::Occ},
                       {std::numeric_limits<double>::quiet_NaN(), 0, 0}),
        UsageError);
}
