#pragma once

#include <Eigen/Dense>

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>
#include <numeric>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "lsd/error.hpp"

namespace lsd
{

using Vertices = Eigen::Matrix<double, Eigen::Dynamic, 3, Eigen::RowMajor>;
using Triangles = Eigen::Matrix<int, Eigen::Dynamic, 3, Eigen::RowMajor>;

/** @brief Triangle mesh with a stable identifier */
struct Mesh {
    std::string shape_id;
    Vertices vertices;
    Triangles triangles;

    [[nodiscard]] Eigen::Index num_vertices() const { return vertices.rows(); }
    [[nodiscard]] Eigen::Index num_triangles() const { return triangles.rows(); }
};

enum class MeshFormat { Off, Obj, PlyAscii };

inline MeshFormat format_from_extension(const std::filesystem::path& path)
{
    auto ext = path.extension().string();
    std::transform(ext.begin(), ext.end(), ext.begin(), [](unsigned char c) { return std::tolower(c); });
    if (ext == ".off") {
        return MeshFormat::Off;
    }
    if (ext == ".obj") {
        return MeshFormat::Obj;
    }
    if (ext == ".ply") {
        return MeshFormat::PlyAscii;
    }
    fail(ErrorCode::ParseError, "unrecognized mesh extension '" + ext + "'");
}

inline MeshFormat parse_format(const std::string& name)
{
    if (name == "off" || name == "OFF") {
        return MeshFormat::Off;
    }
    if (name == "obj" || name == "OBJ") {
        return MeshFormat::Obj;
    }
    if (name == "ply" || name == "PLY" || name == "ply-ascii") {
        return MeshFormat::PlyAscii;
    }
    fail(ErrorCode::ParseError, "unknown mesh format '" + name + "'");
}

inline double triangle_area(const Mesh& mesh, Eigen::Index t)
{
    const Eigen::Vector3d a = mesh.vertices.row(mesh.triangles(t, 0));
    const Eigen::Vector3d b = mesh.vertices.row(mesh.triangles(t, 1));
    const Eigen::Vector3d c = mesh.vertices.row(mesh.triangles(t, 2));
    return 0.5 * (b - a).cross(c - a).norm();
}

/// Number of connected components of the vertex graph induced by the triangles.
inline int connected_components(const Mesh& mesh)
{
    std::vector<int> parent(static_cast<std::size_t>(mesh.num_vertices()));
    std::iota(parent.begin(), parent.end(), 0);
    auto find = [&](int x) {
        while (parent[x] != x) {
            parent[x] = parent[parent[x]];
            x = parent[x];
        }
        return x;
    };
    for (Eigen::Index t = 0; t < mesh.num_triangles(); ++t) {
        for (int e = 0; e < 3; ++e) {
            const int a = find(mesh.triangles(t, e));
            const int b = find(mesh.triangles(t, (e + 1) % 3));
            if (a != b) {
                parent[std::max(a, b)] = std::min(a, b);
            }
        }
    }
    int count = 0;
    for (int v = 0; v < static_cast<int>(parent.size()); ++v) {
        count += find(v) == v ? 1 : 0;
    }
    return count;
}

/**
 * @brief Checks index range, zero-area triangles and edge manifoldness.
 *
 * Throws on violations. A mesh with several components is accepted; a
 * warning is appended instead.
 */
inline void validate_mesh(const Mesh& mesh, std::vector<std::string>* warnings = nullptr)
{
    const auto nv = mesh.num_vertices();
    require(nv > 0, ErrorCode::ParseError, mesh.shape_id + ": mesh has no vertices");
    require(mesh.vertices.allFinite(), ErrorCode::ParseError, mesh.shape_id + ": non-finite vertex coordinate");
    for (Eigen::Index t = 0; t < mesh.num_triangles(); ++t) {
        for (int c = 0; c < 3; ++c) {
            const int idx = mesh.triangles(t, c);
            if (idx < 0 || idx >= nv) {
                fail(ErrorCode::IndexOutOfRange, mesh.shape_id + ": triangle " + std::to_string(t) +
                                                     " references vertex " + std::to_string(idx) + " of " +
                                                     std::to_string(nv));
            }
        }
    }
    const double diag2 =
        (mesh.vertices.colwise().maxCoeff() - mesh.vertices.colwise().minCoeff()).squaredNorm();
    std::map<std::pair<int, int>, int> edge_use;
    for (Eigen::Index t = 0; t < mesh.num_triangles(); ++t) {
        if (!(triangle_area(mesh, t) > 1e-14 * diag2)) {
            fail(ErrorCode::DegenerateGeometry, mesh.shape_id + ": zero-area triangle " + std::to_string(t));
        }
        for (int e = 0; e < 3; ++e) {
            int a = mesh.triangles(t, e);
            int b = mesh.triangles(t, (e + 1) % 3);
            if (a > b) {
                std::swap(a, b);
            }
            if (++edge_use[{a, b}] > 2) {
                fail(ErrorCode::NonManifold, mesh.shape_id + ": edge (" + std::to_string(a) + "," +
                                                 std::to_string(b) + ") shared by more than two triangles");
            }
        }
    }
    const int comps = connected_components(mesh);
    if (comps != 1 && warnings != nullptr) {
        warnings->push_back(mesh.shape_id + ": mesh has " + std::to_string(comps) + " connected components");
    }
}

namespace detail
{

inline std::string next_content_line(std::istream& in)
{
    std::string line;
    while (std::getline(in, line)) {
        const auto hash = line.find('#');
        if (hash != std::string::npos) {
            line.erase(hash);
        }
        if (line.find_first_not_of(" \t\r") != std::string::npos) {
            return line;
        }
    }
    return {};
}

inline void push_polygon(std::vector<std::array<int, 3>>& tris, const std::vector<int>& poly, const std::string& ctx)
{
    if (poly.size() < 3) {
        fail(ErrorCode::ParseError, ctx + ": face with fewer than 3 vertices");
    }
    for (std::size_t i = 1; i + 1 < poly.size(); ++i) {
        tris.push_back({poly[0], poly[i], poly[i + 1]});
    }
}

inline Mesh assemble(std::string id, const std::vector<Eigen::Vector3d>& verts,
                     const std::vector<std::array<int, 3>>& tris)
{
    Mesh mesh;
    mesh.shape_id = std::move(id);
    mesh.vertices.resize(static_cast<Eigen::Index>(verts.size()), 3);
    for (std::size_t i = 0; i < verts.size(); ++i) {
        mesh.vertices.row(static_cast<Eigen::Index>(i)) = verts[i].transpose();
    }
    mesh.triangles.resize(static_cast<Eigen::Index>(tris.size()), 3);
    for (std::size_t i = 0; i < tris.size(); ++i) {
        for (int c = 0; c < 3; ++c) {
            mesh.triangles(static_cast<Eigen::Index>(i), c) = tris[i][c];
        }
    }
    return mesh;
}

inline Mesh read_off(std::istream& in, const std::string& id)
{
    std::string header = next_content_line(in);
    std::istringstream hs(header);
    std::string magic;
    hs >> magic;
    if (magic.rfind("OFF", 0) != 0) {
        fail(ErrorCode::ParseError, id + ": missing OFF header");
    }
    long nv = -1;
    long nf = -1;
    long ne = 0;
    if (!(hs >> nv)) {
        std::istringstream cs(next_content_line(in));
        cs >> nv >> nf >> ne;
    } else {
        hs >> nf >> ne;
    }
    if (nv < 0 || nf < 0) {
        fail(ErrorCode::ParseError, id + ": bad OFF counts line");
    }
    std::vector<Eigen::Vector3d> verts;
    verts.reserve(static_cast<std::size_t>(nv));
    for (long i = 0; i < nv; ++i) {
        std::istringstream ls(next_content_line(in));
        Eigen::Vector3d p;
        if (!(ls >> p.x() >> p.y() >> p.z())) {
            fail(ErrorCode::ParseError, id + ": bad vertex line " + std::to_string(i));
        }
        verts.push_back(p);
    }
    std::vector<std::array<int, 3>> tris;
    for (long i = 0; i < nf; ++i) {
        std::istringstream ls(next_content_line(in));
        int count = 0;
        if (!(ls >> count) || count < 0) {
            fail(ErrorCode::ParseError, id + ": bad face line " + std::to_string(i));
        }
        std::vector<int> poly(static_cast<std::size_t>(count));
        for (auto& v : poly) {
            if (!(ls >> v)) {
                fail(ErrorCode::ParseError, id + ": truncated face line " + std::to_string(i));
            }
        }
        push_polygon(tris, poly, id);
    }
    return assemble(id, verts, tris);
}

inline Mesh read_obj(std::istream& in, const std::string& id)
{
    std::vector<Eigen::Vector3d> verts;
    std::vector<std::array<int, 3>> tris;
    std::string line;
    while (std::getline(in, line)) {
        std::istringstream ls(line);
        std::string tag;
        ls >> tag;
        if (tag == "v") {
            Eigen::Vector3d p;
            if (!(ls >> p.x() >> p.y() >> p.z())) {
                fail(ErrorCode::ParseError, id + ": bad OBJ vertex");
            }
            verts.push_back(p);
        } else if (tag == "f") {
            std::vector<int> poly;
            std::string tok;
            while (ls >> tok) {
                const auto slash = tok.find('/');
                int idx = 0;
                try {
                    idx = std::stoi(tok.substr(0, slash));
                } catch (const std::exception&) {
                    fail(ErrorCode::ParseError, id + ": bad OBJ face token '" + tok + "'");
                }
                // OBJ indices are 1-based; negatives count back from the end.
                poly.push_back(idx < 0 ? static_cast<int>(verts.size()) + idx : idx - 1);
            }
            push_polygon(tris, poly, id);
        }
    }
    return assemble(id, verts, tris);
}

inline Mesh read_ply_ascii(std::istream& in, const std::string& id)
{
    std::string line;
    std::getline(in, line);
    if (line.rfind("ply", 0) != 0) {
        fail(ErrorCode::ParseError, id + ": missing ply magic");
    }
    long nv = 0;
    long nf = 0;
    int vprops = 0;
    int xyz[3] = {-1, -1, -1};
    std::string current;
    while (std::getline(in, line)) {
        std::istringstream ls(line);
        std::string tag;
        ls >> tag;
        if (tag == "format") {
            std::string fmt;
            ls >> fmt;
            if (fmt != "ascii") {
                fail(ErrorCode::ParseError, id + ": only ASCII PLY is supported");
            }
        } else if (tag == "element") {
            long count = 0;
            ls >> current >> count;
            if (current == "vertex") {
                nv = count;
            } else if (current == "face") {
                nf = count;
            }
        } else if (tag == "property" && current == "vertex") {
            std::string type;
            std::string name;
            ls >> type >> name;
            if (name == "x") {
                xyz[0] = vprops;
            } else if (name == "y") {
                xyz[1] = vprops;
            } else if (name == "z") {
                xyz[2] = vprops;
            }
            ++vprops;
        } else if (tag == "end_header") {
            break;
        }
    }
    if (xyz[0] < 0 || xyz[1] < 0 || xyz[2] < 0) {
        fail(ErrorCode::ParseError, id + ": PLY vertex element lacks x/y/z");
    }
    std::vector<Eigen::Vector3d> verts;
    for (long i = 0; i < nv; ++i) {
        if (!std::getline(in, line)) {
            fail(ErrorCode::ParseError, id + ": truncated PLY vertex list");
        }
        std::istringstream ls(line);
        std::vector<double> vals(static_cast<std::size_t>(vprops));
        for (auto& v : vals) {
            if (!(ls >> v)) {
                fail(ErrorCode::ParseError, id + ": bad PLY vertex line");
            }
        }
        verts.emplace_back(vals[xyz[0]], vals[xyz[1]], vals[xyz[2]]);
    }
    std::vector<std::array<int, 3>> tris;
    for (long i = 0; i < nf; ++i) {
        if (!std::getline(in, line)) {
            fail(ErrorCode::ParseError, id + ": truncated PLY face list");
        }
        std::istringstream ls(line);
        int count = 0;
        ls >> count;
        std::vector<int> poly(static_cast<std::size_t>(std::max(count, 0)));
        for (auto& v : poly) {
            if (!(ls >> v)) {
                fail(ErrorCode::ParseError, id + ": bad PLY face line");
            }
        }
        push_polygon(tris, poly, id);
    }
    return assemble(id, verts, tris);
}

}  // namespace detail

/// Reads a mesh from a stream; the result is validated.
inline Mesh read_mesh(std::istream& in, MeshFormat format, const std::string& shape_id,
                      std::vector<std::string>* warnings = nullptr)
{
    Mesh mesh;
    switch (format) {
        case MeshFormat::Off: mesh = detail::read_off(in, shape_id); break;
        case MeshFormat::Obj: mesh = detail::read_obj(in, shape_id); break;
        case MeshFormat::PlyAscii: mesh = detail::read_ply_ascii(in, shape_id); break;
    }
    validate_mesh(mesh, warnings);
    return mesh;
}

/// Loads and validates a mesh file. The shape id defaults to the file stem.
inline Mesh load_mesh(const std::filesystem::path& path, MeshFormat format,
                      std::vector<std::string>* warnings = nullptr)
{
    std::ifstream in(path);
    if (!in) {
        fail(ErrorCode::IoError, "cannot open " + path.string());
    }
    return read_mesh(in, format, path.stem().string(), warnings);
}

inline Mesh load_mesh(const std::filesystem::path& path, std::vector<std::string>* warnings = nullptr)
{
    return load_mesh(path, format_from_extension(path), warnings);
}

/// Writes OFF with round-trip exact coordinates.
inline void write_off(const Mesh& mesh, std::ostream& out)
{
    out << "OFF\n" << mesh.num_vertices() << ' ' << mesh.num_triangles() << " 0\n";
    char buf[96];
    for (Eigen::Index v = 0; v < mesh.num_vertices(); ++v) {
        std::snprintf(buf, sizeof(buf), "%.17g %.17g %.17g\n", mesh.vertices(v, 0), mesh.vertices(v, 1),
                      mesh.vertices(v, 2));
        out << buf;
    }
    for (Eigen::Index t = 0; t < mesh.num_triangles(); ++t) {
        out << "3 " << mesh.triangles(t, 0) << ' ' << mesh.triangles(t, 1) << ' ' << mesh.triangles(t, 2) << '\n';
    }
}

inline void write_off(const Mesh& mesh, const std::filesystem::path& path)
{
    std::ofstream out(path);
    if (!out) {
        fail(ErrorCode::IoError, "cannot write " + path.string());
    }
    write_off(mesh, out);
}

}  // namespace lsd
