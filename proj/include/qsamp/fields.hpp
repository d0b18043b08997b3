// Implicit-function labels: the spatial property pro(p) of a query point
// under Occ / SDF / TSDF / UDF against a shape oracle.
#pragma once

#include <string>
#include <vector>

#include "qsamp/shapes.hpp"

namespace qsamp {

enum class FieldKind { Occ, Sdf, Tsdf, Udf };

struct FieldSpec {
    FieldKind kind = FieldKind::Occ;
    double tau_t = 0.1;  // TSDF truncation distance

    bool is_signed() const { return kind == FieldKind::Sdf || kind == FieldKind::Tsdf; }
    bool classification() const { return kind == FieldKind::Occ; }
};

std::string to_string(FieldKind kind);
FieldKind field_kind_from_string(const std::string& name);

// Occ: 1 iff inside (sign of SDF; exact-surface ties label 0).
// SDF: signed distance, negative inside. TSDF: SDF clamped to [-tau_t, tau_t].
// UDF: unsigned distance.
double evaluate_field(const Shape& shape, const FieldSpec& field, const Vec3& p);

std::vector<double> batch_label(const Shape& shape, const FieldSpec& field,
                                const std::vector<Vec3>& points);

}  // namespace qsamp
