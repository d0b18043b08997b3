#include "qsamp/shapes.hpp"

#include <cmath>

namespace qsamp {

namespace {

constexpr double kSurfaceTie = 1e-9;
constexpr double kPi = 3.14159265358979323846;

class SphereShape final : public Shape {
  public:
    SphereShape(const Vec3& c, double r) : c_(c), r_(r) {
        if (!(r > 0)) throw UsageError("sphere radius must be positive");
    }
    double distance(const Vec3& p) const override { return std::abs(signed_distance(p)); }
    double signed_distance(const Vec3& p) const override { return norm(p - c_) - r_; }
    SurfaceSample sample_surface_one(Rng& rng) const override {
        Vec3 d = rng.unit_vector();
        return {c_ + d * r_, d, -1};
    }
    std::string id() const override { return "sphere"; }

  private:
    Vec3 c_;
    double r_;
};

class BoxShape final : public Shape {
  public:
    BoxShape(const Vec3& c, const Vec3& h) : c_(c), h_(h) {
        if (!(h.x > 0 && h.y > 0 && h.z > 0))
            throw UsageError("box half-extents must be positive");
    }
    double distance(const Vec3& p) const override { return std::abs(signed_distance(p)); }
    double signed_distance(const Vec3& p) const override {
        Vec3 d = p - c_;
        Vec3 q{std::abs(d.x) - h_.x, std::abs(d.y) - h_.y, std::abs(d.z) - h_.z};
        Vec3 qo{std::max(q.x, 0.0), std::max(q.y, 0.0), std::max(q.z, 0.0)};
        return norm(qo) + std::min(std::max({q.x, q.y, q.z}), 0.0);
    }
    SurfaceSample sample_surface_one(Rng& rng) const override {
        double areas[3] = {h_.y * h_.z, h_.x * h_.z, h_.x * h_.y};  // per axis pair
        double total = 2 * (areas[0] + areas[1] + areas[2]);
        double pick = rng.uniform() * total;
        int axis = 0;
        for (; axis < 2; ++axis) {
            if (pick < 2 * areas[axis]) break;
            pick -= 2 * areas[axis];
        }
        double sign = pick < areas[axis] ? 1.0 : -1.0;
        int u = (axis + 1) % 3, v = (axis + 2) % 3;
        Vec3 p = c_;
        p[axis] += sign * h_[axis];
        p[u] += rng.uniform(-h_[u], h_[u]);
        p[v] += rng.uniform(-h_[v], h_[v]);
        Vec3 n{0, 0, 0};
        n[axis] = sign;
        return {p, n, -1};
    }
    std::string id() const override { return "box"; }

  private:
    Vec3 c_, h_;
};

class TorusShape final : public Shape {
  public:
    TorusShape(const Vec3& c, double R, double r) : c_(c), R_(R), r_(r) {
        if (!(R > 0 && r > 0 && r < R)) throw UsageError("torus requires 0 < r < R");
    }
    double distance(const Vec3& p) const override { return std::abs(signed_distance(p)); }
    double signed_distance(const Vec3& p) const override {
        Vec3 d = p - c_;
        double ring = std::sqrt(d.x * d.x + d.y * d.y) - R_;
        return std::sqrt(ring * ring + d.z * d.z) - r_;
    }
    SurfaceSample sample_surface_one(Rng& rng) const override {
        // area element ~ (R + r cos t); rejection on the tube angle
        double phi = rng.uniform(0.0, 2 * kPi);
        double t;
        do {
            t = rng.uniform(0.0, 2 * kPi);
        } while (rng.uniform() >= (R_ + r_ * std::cos(t)) / (R_ + r_));
        double ring = R_ + r_ * std::cos(t);
        Vec3 p{ring * std::cos(phi), ring * std::sin(phi), r_ * std::sin(t)};
        Vec3 n{std::cos(t) * std::cos(phi), std::cos(t) * std::sin(phi), std::sin(t)};
        return {c_ + p, n, -1};
    }
    std::string id() const override { return "torus"; }

  private:
    Vec3 c_;
    double R_, r_;
};

class MeshShape final : public Shape {
  public:
    MeshShape(std::shared_ptr<const Bvh> index, std::string id)
        : index_(std::move(index)), id_(std::move(id)) {}
    double distance(const Vec3& p) const override { return index_->closest_point(p).distance; }
    double signed_distance(const Vec3& p) const override {
        double d = index_->closest_point(p).distance;
        if (d <= kSurfaceTie) return d;  // tie -> outside
        return index_->inside(p) ? -d : d;
    }
    SurfaceSample sample_surface_one(Rng& rng) const override {
        return index_->sample_surface_one(rng);
    }
    std::string id() const override { return id_; }
    const Bvh& index() const { return *index_; }

  private:
    std::shared_ptr<const Bvh> index_;
    std::string id_;
};

}  // namespace

ShapeRef make_sphere(const Vec3& c, double r) { return std::make_shared<SphereShape>(c, r); }
ShapeRef make_box(const Vec3& c, const Vec3& h) { return std::make_shared<BoxShape>(c, h); }
ShapeRef make_torus(const Vec3& c, double R, double r) {
    return std::make_shared<TorusShape>(c, R, r);
}

ShapeRef make_mesh_shape(const TriangleMesh& mesh, const std::string& id) {
    return std::make_shared<MeshShape>(std::make_shared<Bvh>(mesh), id);
}

ShapeRef make_mesh_shape(std::shared_ptr<const Bvh> index, const std::string& id) {
    return std::make_shared<MeshShape>(std::move(index), id);
}

ShapeRef make_named_shape(const std::string& name) {
    if (name == "sphere") return make_sphere({0, 0, 0}, 0.4);
    if (name == "box") return make_box({0, 0, 0}, {0.35, 0.35, 0.35});
    if (name == "torus") return make_torus({0, 0, 0}, 0.3, 0.1);
    throw UsageError("unknown shape '" + name + "' (expected sphere|box|torus)");
}

ShapeRef parse_shape(const std::string& desc) {
    if (desc.rfind("mesh:", 0) == 0) {
        std::string path = desc.substr(5);
        TriangleMesh mesh = normalize(load_mesh(path));
        return make_mesh_shape(mesh, "mesh:" + path);
    }
    return make_named_shape(desc);
}

}  // namespace qsamp
