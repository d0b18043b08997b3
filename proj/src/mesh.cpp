#include "qsamp/mesh.hpp"

#include <algorithm>
#include <cctype>
#include <cstdio>
#include <fstream>
#include <map>
#include <sstream>

namespace qsamp {

namespace {

std::string lowercase_ext(const std::string& path) {
    auto pos = path.rfind('.');
    if (pos == std::string::npos) return "";
    std::string ext = path.substr(pos + 1);
    std::transform(ext.begin(), ext.end(), ext.begin(),
                   [](unsigned char c) { return std::tolower(c); });
    return ext;
}

// Next line that is neither blank nor a '#' comment.
bool next_content_line(std::istream& in, std::string& line) {
    while (std::getline(in, line)) {
        auto pos = line.find('#');
        if (pos != std::string::npos) line.erase(pos);
        if (line.find_first_not_of(" \t\r\n") != std::string::npos) return true;
    }
    return false;
}

void check_indices(const std::string& path, const std::vector<int>& idx, int nv) {
    for (int i : idx) {
        if (i < 0 || i >= nv)
            throw DataError(path + ": face references vertex " + std::to_string(i) + " of " +
                            std::to_string(nv));
    }
}

TriangleMesh load_off(const std::string& path, std::istream& in, bool fan_triangulate) {
    std::string line;
    if (!next_content_line(in, line)) throw DataError(path + ": empty OFF file");
    std::istringstream header(line);
    std::string magic;
    header >> magic;
    if (magic != "OFF") throw DataError(path + ": missing OFF header");

    int nv = 0, nf = 0, ne = 0;
    // counts may share the header line ("OFF 8 12 0") or follow on their own
    if (!(header >> nv >> nf >> ne)) {
        if (!next_content_line(in, line)) throw DataError(path + ": missing OFF counts");
        std::istringstream counts(line);
        if (!(counts >> nv >> nf >> ne)) throw DataError(path + ": malformed OFF counts");
    }
    if (nv <= 0 || nf <= 0) throw DataError(path + ": empty mesh");

    TriangleMesh mesh;
    mesh.vertices.reserve(nv);
    for (int i = 0; i < nv; ++i) {
        if (!next_content_line(in, line)) throw DataError(path + ": truncated vertex list");
        std::istringstream ls(line);
        Vec3 v;
        if (!(ls >> v.x >> v.y >> v.z)) throw DataError(path + ": malformed vertex line");
        mesh.vertices.push_back(v);
    }
    for (int i = 0; i < nf; ++i) {
        if (!next_content_line(in, line)) throw DataError(path + ": truncated face list");
        std::istringstream ls(line);
        int k = 0;
        if (!(ls >> k) || k < 3) throw DataError(path + ": malformed face line");
        std::vector<int> idx(k);
        for (int j = 0; j < k; ++j)
            if (!(ls >> idx[j])) throw DataError(path + ": malformed face line");
        check_indices(path, idx, nv);
        if (k > 3 && !fan_triangulate)
            throw DataError(path + ": non-triangle face (pass fan_triangulate to split)");
        for (int j = 2; j < k; ++j)
            mesh.triangles.push_back({idx[0], idx[j - 1], idx[j]});
    }
    return mesh;
}

TriangleMesh load_obj(const std::string& path, std::istream& in, bool fan_triangulate) {
    TriangleMesh mesh;
    std::string line;
    while (next_content_line(in, line)) {
        std::istringstream ls(line);
        std::string tag;
        ls >> tag;
        if (tag == "v") {
            Vec3 v;
            if (!(ls >> v.x >> v.y >> v.z)) throw DataError(path + ": malformed v line");
            mesh.vertices.push_back(v);
        } else if (tag == "f") {
            std::vector<int> idx;
            std::string tok;
            while (ls >> tok) {
                // "i", "i/t", "i/t/n", "i//n" -> take the vertex index
                size_t slash = tok.find('/');
                std::string head = slash == std::string::npos ? tok : tok.substr(0, slash);
                try {
                    idx.push_back(std::stoi(head) - 1);  // OBJ is 1-based
                } catch (const std::exception&) {
                    throw DataError(path + ": malformed f line token '" + tok + "'");
                }
            }
            if (idx.size() < 3) throw DataError(path + ": face with fewer than 3 vertices");
            check_indices(path, idx, static_cast<int>(mesh.vertices.size()));
            if (idx.size() > 3 && !fan_triangulate)
                throw DataError(path + ": non-triangle face (pass fan_triangulate to split)");
            for (size_t j = 2; j < idx.size(); ++j)
                mesh.triangles.push_back({idx[0], idx[j - 1], idx[j]});
        }
        // everything else (vn, vt, usemtl, o, g, s, ...) is ignored
    }
    if (mesh.vertices.empty() || mesh.triangles.empty()) throw DataError(path + ": empty mesh");
    return mesh;
}

}  // namespace

TriangleMesh load_mesh(const std::string& path, MeshFormat format, bool fan_triangulate) {
    std::ifstream in(path);
    if (!in) throw DataError(path + ": cannot open file");
    if (format == MeshFormat::Auto) {
        std::string ext = lowercase_ext(path);
        if (ext == "off") format = MeshFormat::Off;
        else if (ext == "obj") format = MeshFormat::Obj;
        else throw UsageError(path + ": unknown mesh extension '" + ext + "'");
    }
    return format == MeshFormat::Off ? load_off(path, in, fan_triangulate)
                                     : load_obj(path, in, fan_triangulate);
}

void save_off(const TriangleMesh& mesh, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw DataError(path + ": cannot open for writing");
    out << "OFF\n" << mesh.vertex_count() << ' ' << mesh.triangle_count() << " 0\n";
    char buf[96];
    for (const auto& v : mesh.vertices) {
        std::snprintf(buf, sizeof buf, "%.17g %.17g %.17g\n", v.x, v.y, v.z);
        out << buf;
    }
    for (const auto& t : mesh.triangles)
        out << "3 " << t[0] << ' ' << t[1] << ' ' << t[2] << '\n';
    if (!out) throw DataError(path + ": write failed");
}

MeshValidation validate(const TriangleMesh& mesh) {
    MeshValidation result;
    std::map<std::pair<int, int>, int> edge_use;
    for (const auto& t : mesh.triangles) {
        for (int i : t)
            if (i < 0 || i >= mesh.vertex_count()) result.indices_ok = false;
        if (!result.indices_ok) continue;
        for (int e = 0; e < 3; ++e) {
            int a = t[e], b = t[(e + 1) % 3];
            edge_use[{std::min(a, b), std::max(a, b)}]++;
        }
    }
    for (const auto& [edge, uses] : edge_use)
        if (uses != 2) result.boundary_edges++;
    for (int t = 0; t < mesh.triangle_count(); ++t)
        if (mesh.area(t) <= 0) result.degenerate_triangles++;
    return result;
}

TriangleMesh normalize(const TriangleMesh& mesh, double padding) {
    if (padding < 0 || padding >= 0.5) throw UsageError("padding must lie in [0, 0.5)");
    if (mesh.vertices.empty()) throw DataError("normalize: empty mesh");
    Aabb box = mesh.bounds();
    Vec3 ext = box.extent();
    double longest = std::max({ext.x, ext.y, ext.z});
    if (!(longest > 0)) throw DataError("normalize: degenerate mesh (zero extent)");
    double scale = (1.0 - 2.0 * padding) / longest;
    Vec3 center = box.center();
    TriangleMesh out = mesh;
    for (auto& v : out.vertices) v = (v - center) * scale;
    return out;
}

TriangleMesh make_cube(double h) {
    TriangleMesh m;
    for (int i = 0; i < 8; ++i)
        m.vertices.push_back({(i & 1) ? h : -h, (i & 2) ? h : -h, (i & 4) ? h : -h});
    // two triangles per face, outward winding
    const int faces[6][4] = {
        {0, 4, 6, 2},  // -x
        {1, 3, 7, 5},  // +x
        {0, 1, 5, 4},  // -y
        {2, 6, 7, 3},  // +y
        {0, 2, 3, 1},  // -z
        {4, 5, 7, 6},  // +z
    };
    for (const auto& f : faces) {
        m.triangles.push_back({f[0], f[1], f[2]});
        m.triangles.push_back({f[0], f[2], f[3]});
    }
    return m;
}

TriangleMesh make_icosphere(int subdivisions, double radius) {
    const double phi = (1.0 + std::sqrt(5.0)) / 2.0;
    std::vector<Vec3> verts = {
        {-1, phi, 0}, {1, phi, 0}, {-1, -phi, 0}, {1, -phi, 0},
        {0, -1, phi}, {0, 1, phi}, {0, -1, -phi}, {0, 1, -phi},
        {phi, 0, -1}, {phi, 0, 1}, {-phi, 0, -1}, {-phi, 0, 1},
    };
    std::vector<std::array<int, 3>> tris = {
        {0, 11, 5}, {0, 5, 1},  {0, 1, 7},   {0, 7, 10}, {0, 10, 11},
        {1, 5, 9},  {5, 11, 4}, {11, 10, 2}, {10, 7, 6}, {7, 1, 8},
        {3, 9, 4},  {3, 4, 2},  {3, 2, 6},   {3, 6, 8},  {3, 8, 9},
        {4, 9, 5},  {2, 4, 11}, {6, 2, 10},  {8, 6, 7},  {9, 8, 1},
    };
    for (auto& v : verts) v = normalized(v);

    for (int s = 0; s < subdivisions; ++s) {
        std::map<std::pair<int, int>, int> midpoint;
        auto mid = [&](int a, int b) {
            auto key = std::make_pair(std::min(a, b), std::max(a, b));
            auto it = midpoint.find(key);
            if (it != midpoint.end()) return it->second;
            verts.push_back(normalized((verts[a] + verts[b]) * 0.5));
            int idx = static_cast<int>(verts.size()) - 1;
            midpoint[key] = idx;
            return idx;
        };
        std::vector<std::array<int, 3>> next;
        next.reserve(tris.size() * 4);
        for (const auto& t : tris) {
            int ab = mid(t[0], t[1]), bc = mid(t[1], t[2]), ca = mid(t[2], t[0]);
            next.push_back({t[0], ab, ca});
            next.push_back({t[1], bc, ab});
            next.push_back({t[2], ca, bc});
            next.push_back({ab, bc, ca});
        }
        tris = std::move(next);
    }

    TriangleMesh m;
    m.vertices.reserve(verts.size());
    for (const auto& v : verts) m.vertices.push_back(v * radius);
    m.triangles = std::move(tris);
    return m;
}

}  // namespace qsamp
