#include "qsamp/fields.hpp"

#include <algorithm>
#include <cmath>

namespace qsamp {

std::string to_string(FieldKind kind) {
    switch (kind) {
        case FieldKind::Occ: return "Occ";
        case FieldKind::Sdf: return "SDF";
        case FieldKind::Tsdf: return "TSDF";
        case FieldKind::Udf: return "UDF";
    }
    return "?";
}

FieldKind field_kind_from_string(const std::string& name) {
    if (name == "Occ" || name == "occ") return FieldKind::Occ;
    if (name == "SDF" || name == "sdf") return FieldKind::Sdf;
    if (name == "TSDF" || name == "tsdf") return FieldKind::Tsdf;
    if (name == "UDF" || name == "udf") return FieldKind::Udf;
    throw UsageError("unknown field kind '" + name + "'");
}

double evaluate_field(const Shape& shape, const FieldSpec& field, const Vec3& p) {
    if (!std::isfinite(p.x) || !std::isfinite(p.y) || !std::isfinite(p.z))
        throw UsageError("evaluate_field: non-finite query point");
    switch (field.kind) {
        case FieldKind::Udf:
            return shape.distance(p);
        case FieldKind::Occ:
            return shape.signed_distance(p) < 0 ? 1.0 : 0.0;
        case FieldKind::Sdf:
            return shape.signed_distance(p);
        case FieldKind::Tsdf: {
            if (!(field.tau_t > 0)) throw UsageError("TSDF truncation tau_t must be positive");
            return std::clamp(shape.signed_distance(p), -field.tau_t, field.tau_t);
        }
    }
    throw UsageError("evaluate_field: bad kind");
}

std::vector<double> batch_label(const Shape& shape, const FieldSpec& field,
                                const std::vector<Vec3>& points) {
    std::vector<double> out;
    out.reserve(points.size());
    for (size_t i = 0; i < points.size(); ++i) {
        try {
            out.push_back(evaluate_field(shape, field, points[i]));
        } catch (const IndeterminateParityError& e) {
            throw IndeterminateParityError("point " + std::to_string(i) + ": " + e.what());
        }
    }
    return out;
}

}  // namespace qsamp
