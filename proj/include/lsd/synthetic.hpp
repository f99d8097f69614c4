#pragma once

// Deterministic generators of shared-connectivity test families: bumped
// spheres, perturbation families, chains of frames and two-cluster
// collections. Ground truth is returned next to the meshes.

#include <Eigen/Geometry>

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdio>
#include <map>
#include <numeric>
#include <numbers>
#include <random>
#include <string>
#include <utility>
#include <vector>

#include "lsd/mesh.hpp"
#include "lsd/partition.hpp"

namespace lsd::synthetic
{

/** @brief C2 radial bump on the unit sphere, displacing along the normal */
struct Bump {
    Eigen::Vector3d direction{0.0, 0.0, 1.0};
    /// Angular support radius (radians).
    double radius{0.6};
    double height{0.0};
};

/** @brief Base ellipsoid axes and bumps applied to the subdivided icosahedron */
struct ShapeParams {
    Eigen::Vector3d axes{1.0, 1.0, 1.0};
    std::vector<Bump> bumps;
};

/// Icosphere of unit radius: 10*4^s + 2 vertices, 20*4^s triangles.
inline Mesh icosphere(int subdivisions, std::string shape_id = "icosphere")
{
    const double t = (1.0 + std::sqrt(5.0)) / 2.0;
    std::vector<Eigen::Vector3d> v = {{-1, t, 0}, {1, t, 0},  {-1, -t, 0}, {1, -t, 0}, {0, -1, t},  {0, 1, t},
                                      {0, -1, -t}, {0, 1, -t}, {t, 0, -1},  {t, 0, 1},  {-t, 0, -1}, {-t, 0, 1}};
    for (auto& p : v) {
        p.normalize();
    }
    std::vector<std::array<int, 3>> f = {{0, 11, 5}, {0, 5, 1},  {0, 1, 7},   {0, 7, 10}, {0, 10, 11},
                                         {1, 5, 9},  {5, 11, 4}, {11, 10, 2}, {10, 7, 6}, {7, 1, 8},
                                         {3, 9, 4},  {3, 4, 2},  {3, 2, 6},   {3, 6, 8},  {3, 8, 9},
                                         {4, 9, 5},  {2, 4, 11}, {6, 2, 10},  {8, 6, 7},  {9, 8, 1}};
    for (int s = 0; s < subdivisions; ++s) {
        std::map<std::pair<int, int>, int> midpoint;
        auto mid = [&](int a, int b) {
            const auto key = std::minmax(a, b);
            auto it = midpoint.find(key);
            if (it != midpoint.end()) {
                return it->second;
            }
            v.push_back((0.5 * (v[a] + v[b])).normalized());
            const int idx = static_cast<int>(v.size()) - 1;
            midpoint.emplace(key, idx);
            return idx;
        };
        std::vector<std::array<int, 3>> next;
        next.reserve(f.size() * 4);
        for (const auto& tri : f) {
            const int a = mid(tri[0], tri[1]);
            const int b = mid(tri[1], tri[2]);
            const int c = mid(tri[2], tri[0]);
            next.push_back({tri[0], a, c});
            next.push_back({tri[1], b, a});
            next.push_back({tri[2], c, b});
            next.push_back({a, b, c});
        }
        f = std::move(next);
    }
    return detail::assemble(std::move(shape_id), v, f);
}

/// Squared raised cosine: C2 at the support boundary.
inline double bump_profile(double angle, double radius)
{
    if (angle >= radius) {
        return 0.0;
    }
    const double g = 0.5 * (1.0 + std::cos(std::numbers::pi * angle / radius));
    return g * g;
}

/// Displaces a unit-sphere mesh radially by the bumps, then scales by the axes.
inline Mesh deform_sphere(const Mesh& sphere, const ShapeParams& params, std::string shape_id)
{
    Mesh out = sphere;
    out.shape_id = std::move(shape_id);
    for (Eigen::Index i = 0; i < out.num_vertices(); ++i) {
        const Eigen::Vector3d p = sphere.vertices.row(i).transpose().normalized();
        double r = 1.0;
        for (const auto& b : params.bumps) {
            const double angle = std::acos(std::clamp(p.dot(b.direction.normalized()), -1.0, 1.0));
            r += b.height * bump_profile(angle, b.radius);
        }
        out.vertices.row(i) = (r * p).cwiseProduct(params.axes).transpose();
    }
    return out;
}

/// Vertices of `sphere` within the angular radius of a direction.
inline std::vector<int> cap_region(const Mesh& sphere, const Eigen::Vector3d& direction, double radius)
{
    std::vector<int> out;
    const Eigen::Vector3d d = direction.normalized();
    for (Eigen::Index i = 0; i < sphere.num_vertices(); ++i) {
        const Eigen::Vector3d p = sphere.vertices.row(i).transpose().normalized();
        if (std::acos(std::clamp(p.dot(d), -1.0, 1.0)) < radius) {
            out.push_back(static_cast<int>(i));
        }
    }
    return out;
}

inline Eigen::Vector3d random_direction(std::mt19937_64& rng)
{
    std::normal_distribution<double> normal(0.0, 1.0);
    Eigen::Vector3d d(normal(rng), normal(rng), normal(rng));
    return d.normalized();
}

struct SphereBumpOptions {
    double horizontal_height{0.3};
    /// One vertical-bump height per cluster.
    std::vector<double> vertical_heights{0.15, 0.0};
    int per_cluster{2};
    int subdivisions{3};
    double bump_radius{0.7};
    /// Amplitude of seeded radial noise; zero keeps the family exactly smooth.
    double noise{0.0};
    std::uint64_t seed{7};
};

/** @brief Generated collection plus ground truth that only tests consume */
struct Family {
    std::vector<Mesh> meshes;
    std::map<std::string, std::vector<int>> regions;
    std::vector<int> labels;
    std::vector<std::pair<int, int>> pairing;
    std::vector<double> parameters;
    Partition partition;
};

/**
 * @brief Spheres with a horizontal bump whose height sweeps
 * [0, horizontal_height] inside every cluster and a vertical bump whose
 * height is set per cluster.
 *
 * Regions "horizontal" and "vertical" hold the bump supports.
 */
inline Family sphere_bump_family(const SphereBumpOptions& opts = {})
{
    require(opts.horizontal_height >= 0.0, ErrorCode::PreconditionViolation, "heights must be nonnegative");
    require(opts.per_cluster >= 1 && opts.vertical_heights.size() == 2, ErrorCode::PreconditionViolation,
            "sphere_bump_family needs two clusters");
    const Mesh sphere = icosphere(opts.subdivisions);
    const Eigen::Vector3d horizontal(1.0, 0.0, 0.0);
    const Eigen::Vector3d vertical(0.0, 0.0, 1.0);
    std::mt19937_64 rng(opts.seed);
    std::uniform_real_distribution<double> uni(-1.0, 1.0);
    Family fam;
    for (std::size_t c = 0; c < opts.vertical_heights.size(); ++c) {
        require(opts.vertical_heights[c] >= 0.0, ErrorCode::PreconditionViolation, "heights must be nonnegative");
        for (int j = 0; j < opts.per_cluster; ++j) {
            const double frac = opts.per_cluster == 1 ? 0.0 : static_cast<double>(j) / (opts.per_cluster - 1);
            ShapeParams params;
            params.bumps.push_back({horizontal, opts.bump_radius, opts.horizontal_height * frac});
            params.bumps.push_back({vertical, opts.bump_radius, opts.vertical_heights[c]});
            const std::string id = std::string("sphere_") + static_cast<char>('A' + c) + std::to_string(j);
            Mesh m = deform_sphere(sphere, params, id);
            if (opts.noise > 0.0) {
                for (Eigen::Index i = 0; i < m.num_vertices(); ++i) {
                    m.vertices.row(i) *= 1.0 + opts.noise * uni(rng);
                }
            }
            fam.meshes.push_back(std::move(m));
            fam.labels.push_back(static_cast<int>(c));
            fam.parameters.push_back(opts.horizontal_height * frac);
            (c == 0 ? fam.partition.cluster_a : fam.partition.cluster_b).push_back(id);
        }
    }
    fam.regions["horizontal"] = cap_region(sphere, horizontal, opts.bump_radius);
    fam.regions["vertical"] = cap_region(sphere, vertical, opts.bump_radius);
    return fam;
}

struct ChainOptions {
    int subdivisions{2};
    double base_height{0.25};
    double amplitude{0.15};
    double bump_radius{0.8};
};

/**
 * @brief Frames whose two bump heights follow (cos, sin) of a phase that
 * winds once around the circle when `cycle` is set, or ramp monotonically
 * otherwise. `parameters` holds the phase per frame.
 */
inline Family chain_family(int count, bool cycle, const ChainOptions& opts = {})
{
    require(count >= 3, ErrorCode::PreconditionViolation, "chain_family needs at least 3 frames");
    const Mesh sphere = icosphere(opts.subdivisions);
    const Eigen::Vector3d dir_a = Eigen::Vector3d(1.0, 0.2, 0.3).normalized();
    const Eigen::Vector3d dir_b = Eigen::Vector3d(-0.3, 0.4, 1.0).normalized();
    Family fam;
    for (int f = 0; f < count; ++f) {
        const double phase = cycle ? 2.0 * std::numbers::pi * f / count : static_cast<double>(f) / (count - 1);
        ShapeParams params;
        params.axes = Eigen::Vector3d(1.0, 0.85, 0.7);
        if (cycle) {
            params.bumps.push_back({dir_a, opts.bump_radius, opts.base_height + opts.amplitude * std::cos(phase)});
            params.bumps.push_back({dir_b, opts.bump_radius, opts.base_height + opts.amplitude * std::sin(phase)});
        } else {
            params.bumps.push_back({dir_a, opts.bump_radius, opts.base_height + opts.amplitude * phase});
            params.bumps.push_back({dir_b, opts.bump_radius, opts.base_height});
        }
        char id[32];
        std::snprintf(id, sizeof(id), "frame_%02d", f);
        fam.meshes.push_back(deform_sphere(sphere, params, id));
        fam.parameters.push_back(phase);
        fam.labels.push_back(0);
    }
    return fam;
}

struct TwoClusterOptions {
    int n_per_cluster{4};
    double intra_spread{0.25};
    double inter_gap{0.6};
    std::uint64_t seed{11};
    int subdivisions{2};
};

/**
 * @brief Two clusters separated by a cluster-level deformation of size
 * `inter_gap`. Member p of each cluster carries the same pose-like bump of
 * size `intra_spread`, so `pairing` maps a_p to b_p.
 */
inline Family two_cluster_family(const TwoClusterOptions& opts = {})
{
    require(opts.n_per_cluster >= 2, ErrorCode::PreconditionViolation, "two_cluster_family needs n_per_cluster >= 2");
    const Mesh sphere = icosphere(opts.subdivisions);
    std::mt19937_64 rng(opts.seed);
    std::uniform_real_distribution<double> jitter(-0.3, 0.3);
    // Pose bumps sit on the xz great circle, clear of the +-y cluster bumps.
    std::vector<Bump> poses;
    for (int p = 0; p < opts.n_per_cluster; ++p) {
        const double frac = static_cast<double>(p + 1) / opts.n_per_cluster;
        const double azimuth = 2.0 * std::numbers::pi * p / opts.n_per_cluster + jitter(rng);
        poses.push_back({Eigen::Vector3d(std::cos(azimuth), 0.0, std::sin(azimuth)), 0.6, opts.intra_spread * frac});
    }
    const std::vector<Bump> cluster_shape = {{Eigen::Vector3d(0.0, 1.0, 0.0), 0.7, opts.inter_gap},
                                             {Eigen::Vector3d(0.0, -1.0, 0.0), 0.7, 0.5 * opts.inter_gap}};
    Family fam;
    for (int c = 0; c < 2; ++c) {
        for (int p = 0; p < opts.n_per_cluster; ++p) {
            ShapeParams params;
            params.axes = Eigen::Vector3d(1.0, 0.9, 0.8);
            params.bumps.push_back(poses[p]);
            if (c == 1) {
                params.bumps.insert(params.bumps.end(), cluster_shape.begin(), cluster_shape.end());
            }
            const std::string id = std::string(c == 0 ? "cat_" : "dog_") + std::to_string(p);
            fam.meshes.push_back(deform_sphere(sphere, params, id));
            fam.labels.push_back(c);
            (c == 0 ? fam.partition.cluster_a : fam.partition.cluster_b).push_back(id);
        }
    }
    for (int p = 0; p < opts.n_per_cluster; ++p) {
        fam.pairing.emplace_back(p, opts.n_per_cluster + p);
    }
    return fam;
}

struct PerturbationOptions {
    int count{3};
    double amplitude{0.08};
    int bumps_per_shape{3};
    int subdivisions{2};
    std::uint64_t seed{1};
};

/**
 * @brief Ellipsoid with well-separated spectrum plus small random bumps per
 * member. Generates count + 1 shapes; the last one is the extra shape.
 */
inline Family perturbation_family(const PerturbationOptions& opts = {})
{
    const Mesh sphere = icosphere(opts.subdivisions);
    std::mt19937_64 rng(opts.seed);
    std::uniform_real_distribution<double> uni(0.5, 1.0);
    Family fam;
    for (int s = 0; s <= opts.count; ++s) {
        ShapeParams params;
        params.axes = Eigen::Vector3d(1.0, 0.75, 0.55);
        for (int b = 0; b < opts.bumps_per_shape; ++b) {
            params.bumps.push_back({random_direction(rng), 0.6, opts.amplitude * uni(rng)});
        }
        fam.meshes.push_back(deform_sphere(sphere, params, "shape_" + std::to_string(s)));
        fam.labels.push_back(s == opts.count ? 1 : 0);
    }
    return fam;
}

/** @brief A relabeled copy and its vertex correspondence original -> copy */
struct RelabeledMesh {
    Mesh mesh;
    /// new_index[v] is the copy's index of original vertex v.
    std::vector<int> new_index;
};

/// Applies a rigid motion and a seeded vertex permutation.
inline RelabeledMesh rigid_relabel(const Mesh& mesh, const Eigen::Matrix3d& rotation,
                                   const Eigen::Vector3d& translation, std::uint64_t seed, std::string shape_id)
{
    const auto n = static_cast<int>(mesh.num_vertices());
    std::vector<int> perm(static_cast<std::size_t>(n));
    std::iota(perm.begin(), perm.end(), 0);
    std::mt19937_64 rng(seed);
    std::shuffle(perm.begin(), perm.end(), rng);
    RelabeledMesh out;
    out.new_index = perm;
    out.mesh.shape_id = std::move(shape_id);
    out.mesh.vertices.resize(n, 3);
    for (int v = 0; v < n; ++v) {
        out.mesh.vertices.row(perm[v]) = (rotation * mesh.vertices.row(v).transpose() + translation).transpose();
    }
    out.mesh.triangles = mesh.triangles;
    for (Eigen::Index t = 0; t < mesh.num_triangles(); ++t) {
        for (int c = 0; c < 3; ++c) {
            out.mesh.triangles(t, c) = perm[mesh.triangles(t, c)];
        }
    }
    return out;
}

}  // namespace lsd::synthetic
