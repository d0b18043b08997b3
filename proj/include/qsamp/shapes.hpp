// Shape oracles: a normalized mesh behind its spatial index, or an analytic
// stand-in (sphere / box / torus) with closed-form distances. Both answer the
// queries the samplers and labelers need: unsigned distance g_S(p), signed
// distance, and area-uniform surface samples.
#pragma once

#include <memory>
#include <string>

#include "qsamp/bvh.hpp"

namespace qsamp {

class Shape {
  public:
    virtual ~Shape() = default;

    // Unsigned distance g_S(p) to the surface.
    virtual double distance(const Vec3& p) const = 0;

    // Signed distance, negative inside (DeepSDF convention). Mesh-backed
    // shapes resolve the sign by ray parity; points within 1e-9 of the
    // surface are reported non-negative (ties resolve to outside).
    virtual double signed_distance(const Vec3& p) const = 0;

    virtual SurfaceSample sample_surface_one(Rng& rng) const = 0;

    virtual std::string id() const = 0;

    bool inside(const Vec3& p) const { return signed_distance(p) < 0; }
};

using ShapeRef = std::shared_ptr<const Shape>;

ShapeRef make_sphere(const Vec3& center, double radius);
ShapeRef make_box(const Vec3& center, const Vec3& half_extents);
// Torus around the z axis through `center`: ring radius R, tube radius r.
ShapeRef make_torus(const Vec3& center, double ring_radius, double tube_radius);
ShapeRef make_mesh_shape(const TriangleMesh& mesh, const std::string& id = "mesh");
ShapeRef make_mesh_shape(std::shared_ptr<const Bvh> index, const std::string& id = "mesh");

// The bench's canonical analytic trio.
ShapeRef make_named_shape(const std::string& name);  // "sphere" | "box" | "torus"

// "sphere", "box", "torus", or "mesh:<path>" (normalized on load).
ShapeRef parse_shape(const std::string& desc);

}  // namespace qsamp
