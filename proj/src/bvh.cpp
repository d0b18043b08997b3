#include "qsamp/bvh.hpp"

#include <algorithm>
#include <cmath>

namespace qsamp {

namespace {
constexpr int kLeafSize = 4;
constexpr double kGrazeTol = 1e-10;  // barycentric distance to an edge/vertex
constexpr int kRayVotes = 3;
constexpr int kRecastBudget = 8;
}  // namespace

Vec3 closest_point_on_triangle(const Vec3& p, const Vec3& a, const Vec3& b, const Vec3& c) {
    Vec3 ab = b - a, ac = c - a, ap = p - a;
    double d1 = dot(ab, ap), d2 = dot(ac, ap);
    if (d1 <= 0 && d2 <= 0) return a;

    Vec3 bp = p - b;
    double d3 = dot(ab, bp), d4 = dot(ac, bp);
    if (d3 >= 0 && d4 <= d3) return b;

    double vc = d1 * d4 - d3 * d2;
    if (vc <= 0 && d1 >= 0 && d3 <= 0) return a + ab * (d1 / (d1 - d3));

    Vec3 cp = p - c;
    double d5 = dot(ab, cp), d6 = dot(ac, cp);
    if (d6 >= 0 && d5 <= d6) return c;

    double vb = d5 * d2 - d1 * d6;
    if (vb <= 0 && d2 >= 0 && d6 <= 0) return a + ac * (d2 / (d2 - d6));

    double va = d3 * d6 - d5 * d4;
    if (va <= 0 && (d4 - d3) >= 0 && (d5 - d6) >= 0) {
        double w = (d4 - d3) / ((d4 - d3) + (d5 - d6));
        return b + (c - b) * w;
    }

    double denom = 1.0 / (va + vb + vc);
    return a + ab * (vb * denom) + ac * (vc * denom);
}

Bvh::Bvh(const TriangleMesh& mesh) : mesh_(std::make_shared<TriangleMesh>(mesh)) {
    int n = mesh_->triangle_count();
    if (n == 0) throw DataError("Bvh: empty mesh");

    std::vector<Vec3> centroids(n);
    std::vector<Aabb> tri_boxes(n);
    for (int t = 0; t < n; ++t) {
        const auto& tri = mesh_->triangles[t];
        Aabb box;
        for (int i : tri) box.grow(mesh_->vertices[i]);
        tri_boxes[t] = box;
        centroids[t] = (mesh_->vertices[tri[0]] + mesh_->vertices[tri[1]] +
                        mesh_->vertices[tri[2]]) / 3.0;
    }

    order_.resize(n);
    for (int t = 0; t < n; ++t) order_[t] = t;
    nodes_.reserve(2 * n);
    build(order_, 0, n, centroids, tri_boxes);

    cumulative_.resize(n);
    double acc = 0;
    for (int t = 0; t < n; ++t) {
        acc += mesh_->area(t);
        cumulative_[t] = acc;
    }
    total_area_ = acc;
    if (!(total_area_ > 0)) throw DataError("Bvh: mesh has zero surface area");
}

int Bvh::build(std::vector<int>& items, int first, int count,
               const std::vector<Vec3>& centroids, const std::vector<Aabb>& tri_boxes) {
    int index = static_cast<int>(nodes_.size());
    nodes_.emplace_back();
    Aabb box;
    for (int i = first; i < first + count; ++i) box.grow(tri_boxes[items[i]]);
    nodes_[index].box = box;

    if (count <= kLeafSize) {
        nodes_[index].first = first;
        nodes_[index].count = count;
        return index;
    }

    Vec3 ext = box.extent();
    int axis = ext.x >= ext.y ? (ext.x >= ext.z ? 0 : 2) : (ext.y >= ext.z ? 1 : 2);
    int mid = first + count / 2;
    std::nth_element(items.begin() + first, items.begin() + mid, items.begin() + first + count,
                     [&](int a, int b) { return centroids[a][axis] < centroids[b][axis]; });

    int left = build(items, first, mid - first, centroids, tri_boxes);
    int right = build(items, mid, first + count - mid, centroids, tri_boxes);
    nodes_[index].left = left;
    nodes_[index].right = right;
    return index;
}

void Bvh::closest_recurse(int node_idx, const Vec3& p, ClosestPoint& best) const {
    const Node& node = nodes_[node_idx];
    if (node.box.dist2(p) >= best.distance * best.distance) return;

    if (node.count > 0) {
        for (int i = node.first; i < node.first + node.count; ++i) {
            int t = order_[i];
            const auto& tri = mesh_->triangles[t];
            Vec3 q = closest_point_on_triangle(p, mesh_->vertices[tri[0]],
                                               mesh_->vertices[tri[1]], mesh_->vertices[tri[2]]);
            double d = norm(p - q);
            if (d < best.distance) best = {q, d, t};
        }
        return;
    }

    // visit the nearer child first for tighter pruning
    double dl = nodes_[node.left].box.dist2(p);
    double dr = nodes_[node.right].box.dist2(p);
    int a = node.left, b = node.right;
    if (dr < dl) std::swap(a, b);
    closest_recurse(a, p, best);
    closest_recurse(b, p, best);
}

ClosestPoint Bvh::closest_point(const Vec3& p) const {
    ClosestPoint best{{}, std::numeric_limits<double>::infinity(), -1};
    closest_recurse(0, p, best);
    return best;
}

namespace {

// Ray/AABB slab test for t in [0, inf).
bool ray_hits_box(const Vec3& o, const Vec3& inv_dir, const Aabb& box) {
    double tmin = 0.0, tmax = std::numeric_limits<double>::infinity();
    for (int i = 0; i < 3; ++i) {
        double t1 = (box.lo[i] - o[i]) * inv_dir[i];
        double t2 = (box.hi[i] - o[i]) * inv_dir[i];
        if (t1 > t2) std::swap(t1, t2);
        tmin = std::max(tmin, t1);
        tmax = std::min(tmax, t2);
        if (tmin > tmax) return false;
    }
    return true;
}

// Moller-Trumbore. Returns 0 = miss, 1 = clean hit, 2 = grazing (parallel,
// near an edge/vertex, or t near 0).
int ray_triangle(const Vec3& o, const Vec3& d, const Vec3& a, const Vec3& b, const Vec3& c) {
    Vec3 e1 = b - a, e2 = c - a;
    Vec3 pv = cross(d, e2);
    double det = dot(e1, pv);
    double scale = norm(e1) * norm(e2);
    if (std::abs(det) <= kGrazeTol * scale) {
        // parallel ray: a miss unless the origin sits in the triangle plane
        Vec3 n = cross(e1, e2);
        double plane = dot(o - a, n);
        return std::abs(plane) <= kGrazeTol * norm(n) ? 2 : 0;
    }

    double inv = 1.0 / det;
    Vec3 tv = o - a;
    double u = dot(tv, pv) * inv;
    Vec3 qv = cross(tv, e1);
    double v = dot(d, qv) * inv;
    double w = 1.0 - u - v;
    if (u < -kGrazeTol || v < -kGrazeTol || w < -kGrazeTol) return 0;
    double t = dot(e2, qv) * inv;
    if (t < -kGrazeTol) return 0;
    if (u <= kGrazeTol || v <= kGrazeTol || w <= kGrazeTol || t <= kGrazeTol) return 2;
    return 1;
}

Vec3 vote_direction(int ray, int attempt) {
    uint64_t h = splitmix64(0x51A3C0DEull + ray * 97 + attempt);
    double z = 2.0 * (static_cast<double>(h >> 11) * 0x1.0p-53) - 1.0;
    double angle = 2.0 * 3.14159265358979323846 *
                   (static_cast<double>(splitmix64(h) >> 11) * 0x1.0p-53);
    double r = std::sqrt(std::max(0.0, 1.0 - z * z));
    return {r * std::cos(angle), r * std::sin(angle), z};
}

}  // namespace

bool Bvh::count_crossings(const Vec3& origin, const Vec3& dir, int& crossings) const {
    Vec3 inv{1.0 / dir.x, 1.0 / dir.y, 1.0 / dir.z};
    crossings = 0;
    std::vector<int> stack{0};
    while (!stack.empty()) {
        int ni = stack.back();
        stack.pop_back();
        const Node& node = nodes_[ni];
        if (!ray_hits_box(origin, inv, node.box)) continue;
        if (node.count > 0) {
            for (int i = node.first; i < node.first + node.count; ++i) {
                const auto& tri = mesh_->triangles[order_[i]];
                int hit = ray_triangle(origin, dir, mesh_->vertices[tri[0]],
                                       mesh_->vertices[tri[1]], mesh_->vertices[tri[2]]);
                if (hit == 2) return false;
                crossings += hit;
            }
        } else {
            stack.push_back(node.left);
            stack.push_back(node.right);
        }
    }
    return true;
}

bool Bvh::inside(const Vec3& p) const {
    if (nodes_[0].box.dist2(p) > 0) return false;  // outside the root box

    int votes_inside = 0, votes_total = 0;
    for (int ray = 0; ray < kRayVotes; ++ray) {
        for (int attempt = 0; attempt < kRecastBudget; ++attempt) {
            int crossings = 0;
            if (count_crossings(p, vote_direction(ray, attempt), crossings)) {
                votes_inside += crossings & 1;
                ++votes_total;
                break;
            }
        }
    }
    if (votes_total == 0)
        throw IndeterminateParityError("inside: all vote rays grazed edges/vertices");
    if (2 * votes_inside == votes_total)
        throw IndeterminateParityError("inside: parity vote tied");
    return 2 * votes_inside > votes_total;
}

SurfaceSample Bvh::sample_surface_one(Rng& rng) const {
    double target = rng.uniform() * total_area_;
    auto it = std::upper_bound(cumulative_.begin(), cumulative_.end(), target);
    int t = std::min(static_cast<int>(it - cumulative_.begin()),
                     mesh_->triangle_count() - 1);
    const auto& tri = mesh_->triangles[t];
    // uniform barycentric via the sqrt trick
    double r1 = std::sqrt(rng.uniform());
    double r2 = rng.uniform();
    double wa = 1.0 - r1, wb = r1 * (1.0 - r2), wc = r1 * r2;
    Vec3 point = mesh_->vertices[tri[0]] * wa + mesh_->vertices[tri[1]] * wb +
                 mesh_->vertices[tri[2]] * wc;
    return {point, mesh_->normal(t), t};
}

std::vector<SurfaceSample> Bvh::sample_surface(int n, Rng& rng) const {
    std::vector<SurfaceSample> out;
    out.reserve(std::max(n, 0));
    for (int i = 0; i < n; ++i) out.push_back(sample_surface_one(rng));
    return out;
}

std::vector<int> Bvh::leaf_triangles() const {
    std::vector<int> out;
    out.reserve(order_.size());
    for (const auto& node : nodes_)
        if (node.count > 0)
            for (int i = node.first; i < node.first + node.count; ++i)
                out.push_back(order_[i]);
    return out;
}

}  // namespace qsamp
