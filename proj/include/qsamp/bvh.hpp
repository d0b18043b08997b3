// Bounding-volume hierarchy over mesh triangles: exact closest-point queries,
// watertight inside/outside tests by ray parity, and area-weighted surface
// sampling. Immutable after construction; concurrent reads are safe.
#pragma once

#include <memory>
#include <vector>

#include "qsamp/errors.hpp"
#include "qsamp/mesh.hpp"
#include "qsamp/rng.hpp"

namespace qsamp {

struct ClosestPoint {
    Vec3 point;       // closest point on the surface
    double distance;  // |p - point|
    int triangle;     // owning triangle id
};

struct SurfaceSample {
    Vec3 point;
    Vec3 normal;
    int triangle;
};

// Thrown when every vote ray keeps grazing edges/vertices after the retry
// budget and the inside/outside parity cannot be decided.
struct IndeterminateParityError : DataError {
    using DataError::DataError;
};

// Exact closest point on a single triangle (Ericson's region method).
Vec3 closest_point_on_triangle(const Vec3& p, const Vec3& a, const Vec3& b, const Vec3& c);

class Bvh {
  public:
    explicit Bvh(const TriangleMesh& mesh);

    const TriangleMesh& mesh() const { return *mesh_; }

    ClosestPoint closest_point(const Vec3& p) const;

    // Ray-crossing parity with 3 fixed pseudo-random directions, majority
    // vote. Grazing rays are re-cast (budget 8 per ray); throws
    // IndeterminateParityError when no ray yields a certain parity.
    bool inside(const Vec3& p) const;

    // Area-uniform surface samples; deterministic for a given rng state.
    std::vector<SurfaceSample> sample_surface(int n, Rng& rng) const;
    SurfaceSample sample_surface_one(Rng& rng) const;

    // Leaf audit: triangle ids listed in leaves, in traversal order.
    std::vector<int> leaf_triangles() const;

    const Aabb& bounds() const { return nodes_[0].box; }

  private:
    struct Node {
        Aabb box;
        int left = -1, right = -1;  // internal children
        int first = 0, count = 0;   // leaf triangle range in order_
    };

    int build(std::vector<int>& items, int first, int count,
              const std::vector<Vec3>& centroids, const std::vector<Aabb>& tri_boxes);
    void closest_recurse(int node, const Vec3& p, ClosestPoint& best) const;
    // Counts ray crossings; returns false if any hit grazes an edge/vertex.
    bool count_crossings(const Vec3& origin, const Vec3& dir, int& crossings) const;

    std::shared_ptr<const TriangleMesh> mesh_;
    std::vector<Node> nodes_;
    std::vector<int> order_;          // triangle ids, leaf-contiguous
    std::vector<double> cumulative_;  // cumulative area over triangles (original order)
    double total_area_ = 0;
};

}  // namespace qsamp
