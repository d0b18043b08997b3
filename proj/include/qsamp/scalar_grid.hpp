#pragma once

#include <vector>

#include "qsamp/errors.hpp"
#include "qsamp/vec3.hpp"

namespace qsamp {

// R^3 scalar samples on the cell-corner lattice over [-0.5, 0.5]^3.
// Index layout: x fastest, i.e. value(i,j,k) = values[(k*R + j)*R + i].
struct ScalarGrid {
    int resolution = 0;
    std::vector<double> values;

    ScalarGrid() = default;
    explicit ScalarGrid(int r) : resolution(r), values(static_cast<size_t>(r) * r * r) {
        if (r < 2) throw UsageError("grid resolution must be >= 2");
    }

    double spacing() const { return 1.0 / (resolution - 1); }
    Vec3 position(int i, int j, int k) const {
        double h = spacing();
        return {-kBoxHalf + i * h, -kBoxHalf + j * h, -kBoxHalf + k * h};
    }
    double& at(int i, int j, int k) {
        return values[(static_cast<size_t>(k) * resolution + j) * resolution + i];
    }
    double at(int i, int j, int k) const {
        return values[(static_cast<size_t>(k) * resolution + j) * resolution + i];
    }
};

}  // namespace qsamp
