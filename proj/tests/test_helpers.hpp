// Shared test oracles. These stay independent of the library's accelerated
// paths: brute-force loops over all triangles, analytic closed forms.
#pragma once

#include <limits>
#include <vector>

#include "qsamp/bvh.hpp"
#include "qsamp/mesh.hpp"

namespace qsamp::test {

// O(n) closest-point oracle over every triangle.
inline ClosestPoint brute_force_closest(const TriangleMesh& mesh, const Vec3& p) {
    ClosestPoint best{{}, std::numeric_limits<double>::infinity(), -1};
    for (int t = 0; t < mesh.triangle_count(); ++t) {
        const auto& tri = mesh.triangles[t];
        Vec3 q = closest_point_on_triangle(p, mesh.vertices[tri[0]], mesh.vertices[tri[1]],
                                           mesh.vertices[tri[2]]);
        double d = norm(p - q);
        if (d < best.distance) best = {q, d, t};
    }
    return best;
}

// Largest distance from the unit-sphere surface over a mesh's triangles,
// probed at vertices, edge midpoints, and centroids (icosphere deviation).
inline double sphere_deviation(const TriangleMesh& mesh, double radius) {
    double worst = 0;
    auto probe = [&](const Vec3& p) { worst = std::max(worst, std::abs(norm(p) - radius)); };
    for (const auto& t : mesh.triangles) {
        const Vec3 &a = mesh.vertices[t[0]], &b = mesh.vertices[t[1]], &c = mesh.vertices[t[2]];
        probe(a);
        probe((a + b) * 0.5);
        probe((b + c) * 0.5);
        probe((a + c) * 0.5);
        probe((a + b + c) / 3.0);
    }
    return worst;
}

}  // namespace qsamp::test
