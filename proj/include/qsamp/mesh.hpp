// Triangle mesh container, OFF/OBJ I/O, normalization into the canonical
// [-0.5, 0.5]^3 box, and analytic test primitives.
#pragma once

#include <array>
#include <string>
#include <vector>

#include "qsamp/errors.hpp"
#include "qsamp/vec3.hpp"

namespace qsamp {

struct TriangleMesh {
    std::vector<Vec3> vertices;
    std::vector<std::array<int, 3>> triangles;

    int vertex_count() const { return static_cast<int>(vertices.size()); }
    int triangle_count() const { return static_cast<int>(triangles.size()); }
    bool empty() const { return triangles.empty(); }

    // Unit normal of triangle t (right-hand rule over the index order).
    // Degenerate triangles yield a zero vector.
    Vec3 normal(int t) const {
        const auto& tri = triangles[t];
        Vec3 n = cross(vertices[tri[1]] - vertices[tri[0]], vertices[tri[2]] - vertices[tri[0]]);
        return normalized(n);
    }

    double area(int t) const {
        const auto& tri = triangles[t];
        return 0.5 * norm(cross(vertices[tri[1]] - vertices[tri[0]],
                                vertices[tri[2]] - vertices[tri[0]]));
    }

    double total_area() const {
        double a = 0;
        for (int t = 0; t < triangle_count(); ++t) a += area(t);
        return a;
    }

    Aabb bounds() const {
        Aabb b;
        for (const auto& v : vertices) b.grow(v);
        return b;
    }
};

struct MeshValidation {
    int boundary_edges = 0;       // edges used by != 2 triangles
    int degenerate_triangles = 0; // zero-area
    bool indices_ok = true;
    bool watertight() const { return boundary_edges == 0 && indices_ok; }
};

MeshValidation validate(const TriangleMesh& mesh);

enum class MeshFormat { Off, Obj, Auto };

// Loads an OFF or OBJ-subset file. OBJ support is v/f lines only; faces with
// more than three vertices are fan-triangulated when `fan_triangulate` is set
// and rejected otherwise.
TriangleMesh load_mesh(const std::string& path, MeshFormat format = MeshFormat::Auto,
                       bool fan_triangulate = false);

void save_off(const TriangleMesh& mesh, const std::string& path);

// Translates the bounding-box center to the origin and scales uniformly so the
// longest axis spans (1 - 2*padding). padding in [0, 0.5).
TriangleMesh normalize(const TriangleMesh& mesh, double padding = 0.0);

// Test/demo primitives (already inside the canonical box).
TriangleMesh make_cube(double half_extent = 0.5);
TriangleMesh make_icosphere(int subdivisions, double radius);

}  // namespace qsamp
