#pragma once

#include <gtest/gtest.h>

#include <filesystem>
#include <random>
#include <string>
#include <vector>

#include "lsd/lsd.hpp"

#define EXPECT_LSD_ERROR(stmt, expected_code)                                                           \
    do {                                                                                                \
        try {                                                                                           \
            stmt;                                                                                       \
            ADD_FAILURE() << "expected " << lsd::to_string(expected_code) << " from " #stmt;            \
        } catch (const lsd::Error& e) {                                                                 \
            EXPECT_EQ(e.code(), expected_code) << e.what();                                             \
        }                                                                                               \
    } while (0)

namespace lsd::test
{

inline Mesh tetrahedron()
{
    Mesh m;
    m.shape_id = "tet";
    m.vertices.resize(4, 3);
    m.vertices << 1, 1, 1, 1, -1, -1, -1, 1, -1, -1, -1, 1;
    m.triangles.resize(4, 3);
    m.triangles << 0, 1, 2, 0, 3, 1, 0, 2, 3, 1, 3, 2;
    return m;
}

inline Mat random_matrix(std::mt19937_64& rng, Index rows, Index cols)
{
    std::normal_distribution<double> g;
    Mat a(rows, cols);
    for (Index i = 0; i < a.size(); ++i) {
        a.data()[i] = g(rng);
    }
    return a;
}

inline Mat random_symmetric(std::mt19937_64& rng, Index m)
{
    const Mat a = random_matrix(rng, m, m);
    return 0.5 * (a + a.transpose());
}

inline Mat random_spd(std::mt19937_64& rng, Index m)
{
    const Mat a = random_matrix(rng, m, m);
    return a * a.transpose() + static_cast<double>(m) * Mat::Identity(m, m);
}

inline Mat random_orthonormal(std::mt19937_64& rng, Index m, Index p)
{
    const Mat a = random_matrix(rng, m, std::max<Index>(p, 1));
    Eigen::HouseholderQR<Mat> qr(a);
    return Mat(qr.householderQ() * Mat::Identity(m, std::max<Index>(p, 1))).leftCols(p);
}

inline std::vector<ShapeSpectra> spectra_of(const std::vector<Mesh>& meshes, Index k)
{
    std::vector<ShapeSpectra> out;
    for (const auto& m : meshes) {
        out.push_back(compute_spectra(m, k < 0 ? m.num_vertices() : k));
    }
    return out;
}

/// Clique (or chain) network of identity-correspondence maps over shared connectivity.
inline FMNetwork identity_network(const std::vector<ShapeSpectra>& sh, TopologyKind kind = TopologyKind::Clique)
{
    std::vector<std::string> ids;
    std::vector<Vec> lambda;
    for (const auto& s : sh) {
        ids.push_back(s.shape_id);
        lambda.push_back(s.basis.eigenvalues);
    }
    const int n = static_cast<int>(sh.size());
    Topology topo;
    topo.kind = kind;
    for (int i = 0; i < n; ++i) {
        for (int j = i + 1; j < n; ++j) {
            if (kind == TopologyKind::Clique || j == i + 1) {
                topo.edges.emplace_back(i, j);
            }
        }
    }
    const Correspondence corr = identity_correspondence(sh.front().basis.num_vertices());
    return attach_maps(ids, lambda, topo, [&](int i, int j) { return fmap_from_correspondence(sh[i], sh[j], corr); });
}

/// Network of n copies of one spectrum with all maps equal to the identity.
inline FMNetwork identical_network(const Vec& lambda, int n)
{
    FMNetwork net;
    const Index k = lambda.size();
    for (int i = 0; i < n; ++i) {
        net.ids.push_back("s" + std::to_string(i));
        net.spectra.push_back(lambda);
    }
    for (int i = 0; i < n; ++i) {
        for (int j = 0; j < n; ++j) {
            if (i != j) {
                net.maps.emplace(std::make_pair(i, j), FunctionalMap{Mat::Identity(k, k), net.ids[i], net.ids[j]});
            }
        }
    }
    net.topology = TopologyKind::Clique;
    return net;
}

inline std::filesystem::path fresh_dir(const std::string& name)
{
    const auto p = std::filesystem::temp_directory_path() / ("lsd_test_" + name);
    std::filesystem::remove_all(p);
    std::filesystem::create_directories(p);
    return p;
}

}  // namespace lsd::test
