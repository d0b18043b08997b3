#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cstdio>
#include <fstream>
#include <set>

#include "qsamp/mesh.hpp"
#include "test_helpers.hpp"

using namespace qsamp;

namespace {

std::string write_temp(const std::string& name, const std::string& content) {
    std::string path = "/tmp/qsamp_test_" + name;
    std::ofstream out(path);
    out << content;
    return path;
}

}  // namespace

TEST_CASE("single-triangle OFF") {
    auto path = write_temp("tri.off", "OFF\n3 1 0\n0 0 0\n1 0 0\n0 1 0\n3 0 1 2\n");
    auto mesh = load_mesh(path);
    CHECK(mesh.vertex_count() == 3);
    CHECK(mesh.triangle_count() == 1);
    CHECK(norm(mesh.normal(0) - Vec3{0, 0, 1}) < 1e-12);
}

TEST_CASE("cube OFF has 12 unit normals in 6 directions") {
    auto cube = make_cube(0.5);
    auto path = "/tmp/qsamp_test_cube.off";
    save_off(cube, path);
    auto mesh = load_mesh(path);
    REQUIRE(mesh.vertex_count() == 8);
    REQUIRE(mesh.triangle_count() == 12);
    std::set<std::array<int, 3>> directions;
    for (int t = 0; t < 12; ++t) {
        Vec3 n = mesh.normal(t);
        CHECK(std::abs(norm(n) - 1.0) < 1e-9);
        directions.insert({static_cast<int>(std::round(n.x)), static_cast<int>(std::round(n.y)),
                           static_cast<int>(std::round(n.z))});
    }
    CHECK(directions.size() == 6);
}

TEST_CASE("face index out of range is rejected") {
    auto path = write_temp("bad.off", "OFF\n8 1 0\n0 0 0\n1 0 0\n0 1 0\n0 0 1\n"
                                      "1 1 0\n1 0 1\n0 1 1\n1 1 1\n3 0 1 99\n");
    CHECK_THROWS_AS(load_mesh(path), DataError);
}

TEST_CASE("quad faces need the triangulation flag") {
    auto content = "OFF\n4 1 0\n0 0 0\n1 0 0\n1 1 0\n0 1 0\n4 0 1 2 3\n";
    auto path = write_temp("quad.off", content);
    CHECK_THROWS_AS(load_mesh(path), DataError);
    auto mesh = load_mesh(path, MeshFormat::Auto, /*fan_triangulate=*/true);
    CHECK(mesh.triangle_count() == 2);
}

TEST_CASE("OBJ subset with v/f lines and slash syntax") {
    auto path = write_temp("tri.obj",
                           "# comment\nv 0 0 0\nv 1 0 0\nv 0 1 0\nvn 0 0 1\nf 1/1/1 2/2/1 3/3/1\n");
    auto mesh = load_mesh(path);
    CHECK(mesh.vertex_count() == 3);
    CHECK(mesh.triangle_count() == 1);
}

TEST_CASE("empty and malformed files error") {
    CHECK_THROWS_AS(load_mesh(write_temp("empty.off", "")), DataError);
    CHECK_THROWS_AS(load_mesh(write_temp("noheader.off", "3 1 0\n")), DataError);
    CHECK_THROWS_AS(load_mesh("/nonexistent/file.off"), DataError);
}

TEST_CASE("normalize maps a [0,2]^3 cube onto the unit box") {
    auto cube = make_cube(1.0);
    for (auto& v : cube.vertices) v += Vec3{1, 1, 1};  // spans [0,2]^3
    auto out = normalize(cube, 0.0);
    Aabb box = out.bounds();
    CHECK(norm(box.lo - Vec3{-0.5, -0.5, -0.5}) < 1e-12);
    CHECK(norm(box.hi - Vec3{0.5, 0.5, 0.5}) < 1e-12);
}

TEST_CASE("normalize is idempotent") {
    auto sphere = make_icosphere(2, 0.37);
    auto once = normalize(sphere, 0.0);
    auto twice = normalize(once, 0.0);
    for (size_t i = 0; i < once.vertices.size(); ++i)
        CHECK(norm(once.vertices[i] - twice.vertices[i]) < 1e-12);
}

TEST_CASE("normalize with padding rescales a shifted sphere") {
    auto sphere = make_icosphere(3, 3.0);
    for (auto& v : sphere.vertices) v += Vec3{5, 5, 5};
    auto out = normalize(sphere, 0.05);
    // all coordinates inside the box, extremes touch +-0.45 on the longest axis
    Aabb box = out.bounds();
    CHECK(box.lo.x == doctest::Approx(-0.45).epsilon(1e-9));
    CHECK(box.hi.x == doctest::Approx(0.45).epsilon(1e-9));
    double dev = test::sphere_deviation(out, 0.45);
    CHECK(dev < 0.45);  // still a sphere around the origin
    for (const auto& v : out.vertices) CHECK(std::abs(norm(v) - 0.45) < 1e-9);
}

TEST_CASE("normalize rejects degenerate input") {
    TriangleMesh flatline;
    flatline.vertices = {{0, 0, 0}, {0, 0, 0}, {0, 0, 0}};
    flatline.triangles = {{0, 1, 2}};
    CHECK_THROWS_AS(normalize(flatline), DataError);
}

TEST_CASE("validate flags boundary edges") {
    auto cube = make_cube(0.5);
    CHECK(validate(cube).watertight());
    TriangleMesh open = cube;
    open.triangles.pop_back();  // hole: 3 boundary edges
    auto report = validate(open);
    CHECK(report.boundary_edges == 3);
    CHECK_FALSE(report.watertight());
}

TEST_CASE("icosphere subdivision-4 deviation is below 2e-3") {
    auto sphere = make_icosphere(4, 0.4);
    CHECK(sphere.triangle_count() == 5120);
    CHECK(validate(sphere).watertight());
    CHECK(test::sphere_deviation(sphere, 0.4) < 2e-3);
}
