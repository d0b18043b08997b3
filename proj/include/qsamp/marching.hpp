// Marching-cubes isosurface extraction on a ScalarGrid. Cell polygons are
// built from marching-squares segments on the six cell faces (face-average
// decider for the ambiguous diagonal cases, so neighboring cells always
// agree), stitched into closed loops, fan-triangulated, and oriented along
// the field gradient. Shared edge vertices are deduplicated, so the output is
// watertight wherever the isosurface stays inside the grid.
#pragma once

#include "qsamp/mesh.hpp"
#include "qsamp/scalar_grid.hpp"

namespace qsamp {

// Vertices sit on lattice edges by linear interpolation; "inside" is value <
// iso. A constant grid (or any grid never crossing iso) gives an empty mesh.
TriangleMesh marching_cubes(const ScalarGrid& grid, double iso);

}  // namespace qsamp
