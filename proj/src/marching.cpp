#include "qsamp/marching.hpp"

#include <array>
#include <cmath>
#include <unordered_map>
#include <vector>

namespace qsamp {

namespace {

// Cell corners are coded c = dx | dy<<1 | dz<<2. A cell edge is (low corner
// code, axis); globally an edge is (i, j, k, axis) of its lattice low end.
struct CellContext {
    const ScalarGrid* grid;
    int i, j, k;
    double value[8];

    double corner_value(int c) const { return value[c]; }
    bool corner_inside(int c, double iso) const { return value[c] < iso; }
};

int corner_code(int dx, int dy, int dz) { return dx | (dy << 1) | (dz << 2); }

// cyclic corners of the face with normal axis n at side s (0 = low, 1 = high)
std::array<int, 4> face_corners(int n, int s) {
    int u = (n + 1) % 3, v = (n + 2) % 3;
    std::array<int, 4> corners{};
    const int uv[4][2] = {{0, 0}, {1, 0}, {1, 1}, {0, 1}};
    for (int q = 0; q < 4; ++q) {
        int d[3];
        d[n] = s;
        d[u] = uv[q][0];
        d[v] = uv[q][1];
        corners[q] = corner_code(d[0], d[1], d[2]);
    }
    return corners;
}

// cell edge between two corner codes differing in exactly one bit
std::pair<int, int> cell_edge(int a, int b) {
    int diff = a ^ b;
    int axis = diff == 1 ? 0 : (diff == 2 ? 1 : 2);
    return {std::min(a, b) == (a & b) ? (a & b) : (a & b), axis};  // low corner, axis
}

uint64_t global_edge_key(const CellContext& cell, int low_corner, int axis) {
    int i = cell.i + (low_corner & 1);
    int j = cell.j + ((low_corner >> 1) & 1);
    int k = cell.k + ((low_corner >> 2) & 1);
    return (static_cast<uint64_t>(axis) << 60) | (static_cast<uint64_t>(i) << 40) |
           (static_cast<uint64_t>(j) << 20) | static_cast<uint64_t>(k);
}

}  // namespace

TriangleMesh marching_cubes(const ScalarGrid& grid, double iso) {
    const int r = grid.resolution;
    TriangleMesh mesh;
    std::unordered_map<uint64_t, int> edge_vertex;
    std::vector<std::pair<int, int>> segments;  // local edge slots per cell
    double h = grid.spacing();

    auto vertex_for_edge = [&](const CellContext& cell, int low_corner, int axis) {
        uint64_t key = global_edge_key(cell, low_corner, axis);
        auto it = edge_vertex.find(key);
        if (it != edge_vertex.end()) return it->second;
        int i = cell.i + (low_corner & 1);
        int j = cell.j + ((low_corner >> 1) & 1);
        int k = cell.k + ((low_corner >> 2) & 1);
        double v0 = grid.at(i, j, k);
        int i1 = i + (axis == 0), j1 = j + (axis == 1), k1 = k + (axis == 2);
        double v1 = grid.at(i1, j1, k1);
        double t = (iso - v0) / (v1 - v0);
        t = std::clamp(t, 0.0, 1.0);
        Vec3 p = grid.position(i, j, k);
        p[axis] += t * h;
        mesh.vertices.push_back(p);
        int idx = static_cast<int>(mesh.vertices.size()) - 1;
        edge_vertex.emplace(key, idx);
        return idx;
    };

    // local edge slot = low_corner * 3 + axis (unique per cell edge)
    auto slot = [](int a, int b) {
        int low = a & b;
        int diff = a ^ b;
        int axis = diff == 1 ? 0 : (diff == 2 ? 1 : 2);
        return low * 3 + axis;
    };

    for (int k = 0; k + 1 < r; ++k)
        for (int j = 0; j + 1 < r; ++j)
            for (int i = 0; i + 1 < r; ++i) {
                CellContext cell{&grid, i, j, k, {}};
                int config = 0;
                for (int c = 0; c < 8; ++c) {
                    cell.value[c] =
                        grid.at(i + (c & 1), j + ((c >> 1) & 1), k + ((c >> 2) & 1));
                    config |= (cell.value[c] < iso) << c;
                }
                if (config == 0 || config == 0xFF) continue;

                segments.clear();
                for (int n = 0; n < 3; ++n)
                    for (int s = 0; s < 2; ++s) {
                        auto fc = face_corners(n, s);
                        bool b[4];
                        for (int q = 0; q < 4; ++q) b[q] = cell.corner_inside(fc[q], iso);
                        int crossings[4], n_cross = 0;
                        for (int q = 0; q < 4; ++q)
                            if (b[q] != b[(q + 1) % 4]) crossings[n_cross++] = q;
                        if (n_cross == 0) continue;
                        auto edge_slot = [&](int q) { return slot(fc[q], fc[(q + 1) % 4]); };
                        if (n_cross == 2) {
                            segments.emplace_back(edge_slot(crossings[0]),
                                                  edge_slot(crossings[1]));
                        } else {
                            // ambiguous diagonal: the face-average decider keeps
                            // both cells sharing this face consistent
                            double avg = (cell.corner_value(fc[0]) + cell.corner_value(fc[1]) +
                                          cell.corner_value(fc[2]) + cell.corner_value(fc[3])) /
                                         4.0;
                            bool center_inside = avg < iso;
                            // corners alternate inside/outside around the face;
                            // connect crossings around the corners matching the center
                            if (center_inside == b[0]) {
                                // pair edges around corners 1 and 3
                                segments.emplace_back(edge_slot(0), edge_slot(1));
                                segments.emplace_back(edge_slot(2), edge_slot(3));
                            } else {
                                // pair edges around corners 0 and 2
                                segments.emplace_back(edge_slot(3), edge_slot(0));
                                segments.emplace_back(edge_slot(1), edge_slot(2));
                            }
                        }
                    }

                // stitch segments into closed loops via shared edge slots
                std::unordered_map<int, std::array<int, 2>> adjacency;
                for (int s_i = 0; s_i < static_cast<int>(segments.size()); ++s_i) {
                    for (int endpoint : {segments[s_i].first, segments[s_i].second}) {
                        auto [it, inserted] = adjacency.try_emplace(endpoint,
                                                                    std::array<int, 2>{-1, -1});
                        it->second[it->second[0] == -1 ? 0 : 1] = s_i;
                    }
                }
                std::vector<bool> used(segments.size(), false);
                for (size_t start = 0; start < segments.size(); ++start) {
                    if (used[start]) continue;
                    std::vector<int> loop;  // sequence of edge slots
                    int seg = static_cast<int>(start);
                    int entry = segments[start].first;
                    while (!used[seg]) {
                        used[seg] = true;
                        loop.push_back(entry);
                        int exit = segments[seg].first == entry ? segments[seg].second
                                                                : segments[seg].first;
                        const auto& adj = adjacency[exit];
                        int next = adj[0] == seg ? adj[1] : adj[0];
                        entry = exit;
                        seg = next;
                        if (seg < 0) break;  // open chain (degenerate grid); drop
                    }
                    if (loop.size() < 3 || seg < 0) continue;

                    // resolve vertices
                    std::vector<int> verts;
                    verts.reserve(loop.size());
                    for (int slot_id : loop)
                        verts.push_back(vertex_for_edge(cell, slot_id / 3, slot_id % 3));

                    // orient the loop so triangle normals follow the gradient
                    // (from inside/low values toward outside/high values)
                    Vec3 g{};
                    for (int c = 0; c < 8; ++c) {
                        double v = cell.value[c];
                        g.x += ((c & 1) ? v : -v);
                        g.y += (((c >> 1) & 1) ? v : -v);
                        g.z += (((c >> 2) & 1) ? v : -v);
                    }
                    double orient = 0;
                    const Vec3& a = mesh.vertices[verts[0]];
                    for (size_t t = 1; t + 1 < verts.size(); ++t) {
                        Vec3 n = cross(mesh.vertices[verts[t]] - a,
                                       mesh.vertices[verts[t + 1]] - a);
                        orient += dot(n, g);
                    }
                    if (orient < 0) std::reverse(verts.begin(), verts.end());
                    for (size_t t = 1; t + 1 < verts.size(); ++t) {
                        if (verts[0] == verts[t] || verts[t] == verts[t + 1] ||
                            verts[0] == verts[t + 1])
                            continue;  // collapsed edge crossing
                        mesh.triangles.push_back({verts[0], static_cast<int>(verts[t]),
                                                  static_cast<int>(verts[t + 1])});
                    }
                }
            }
    return mesh;
}

}  // namespace qsamp
