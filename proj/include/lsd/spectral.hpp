#pragma once

// Per-shape discrete spectral geometry: cotangent stiffness, lumped mass,
// truncated Laplace-Beltrami eigenbasis and Shape-DNA.

#include <Eigen/SparseCholesky>

#include <cmath>
#include <random>
#include <string>
#include <vector>

#include "lsd/linalg.hpp"
#include "lsd/mesh.hpp"

namespace lsd
{

/** @brief Cotangent stiffness L (PSD, zero row sums) and lumped vertex areas M */
struct MetricMeasure {
    SpMat stiffness;
    Vec mass;

    [[nodiscard]] Index size() const { return mass.size(); }
};

/** @brief Truncated generalized eigenpairs of (L, M), eigenvalues ascending */
struct SpectralBasis {
    Vec eigenvalues;
    Mat eigenvectors;
    /// Runs of eigenvalues closer than the cluster gap; order inside a run is solver order.
    std::vector<EigenCluster> clusters;

    [[nodiscard]] Index k() const { return eigenvalues.size(); }
    [[nodiscard]] Index num_vertices() const { return eigenvectors.rows(); }
};

struct ShapeDNA {
    Vec spectrum_prefix;
};

struct EigenbasisOptions {
    /// Meshes up to this many vertices use the dense solver.
    Index dense_limit{2000};
    double cluster_gap{1e-8};
    double residual_tol{1e-8};
    int max_iterations{1000};
};

/**
 * @brief Cotangent stiffness and barycentric (one third of each incident
 * triangle area) lumped mass.
 */
inline MetricMeasure metric_measure(const Mesh& mesh)
{
    const Index nv = mesh.num_vertices();
    std::vector<Triplet> trips;
    trips.reserve(static_cast<std::size_t>(mesh.num_triangles()) * 12);
    Vec mass = Vec::Zero(nv);
    for (Index t = 0; t < mesh.num_triangles(); ++t) {
        const double area = triangle_area(mesh, t);
        for (int c = 0; c < 3; ++c) {
            const int i = mesh.triangles(t, c);
            const int j = mesh.triangles(t, (c + 1) % 3);
            const int o = mesh.triangles(t, (c + 2) % 3);
            const Eigen::Vector3d u = mesh.vertices.row(i) - mesh.vertices.row(o);
            const Eigen::Vector3d v = mesh.vertices.row(j) - mesh.vertices.row(o);
            // Cotangent of the angle at o, opposite edge (i, j).
            const double cot = u.dot(v) / u.cross(v).norm();
            if (!std::isfinite(cot)) {
                fail(ErrorCode::DegenerateGeometry,
                     mesh.shape_id + ": non-finite cotangent weight in triangle " + std::to_string(t));
            }
            const double w = 0.5 * cot;
            trips.emplace_back(i, j, -w);
            trips.emplace_back(j, i, -w);
            trips.emplace_back(i, i, w);
            trips.emplace_back(j, j, w);
            mass(i) += area / 3.0;
        }
    }
    MetricMeasure mm;
    mm.stiffness.resize(nv, nv);
    mm.stiffness.setFromTriplets(trips.begin(), trips.end());
    mm.stiffness.makeCompressed();
    mm.mass = std::move(mass);
    return mm;
}

namespace detail
{

inline SpectralBasis dense_eigenbasis(const MetricMeasure& mm, Index k)
{
    const Vec inv_sqrt = mm.mass.cwiseSqrt().cwiseInverse();
    Mat a = Mat(mm.stiffness);
    a = inv_sqrt.asDiagonal() * a * inv_sqrt.asDiagonal();
    SymEig eig = sym_eig_smallest(a, k);
    SpectralBasis basis;
    basis.eigenvalues = std::move(eig.values);
    basis.eigenvectors = inv_sqrt.asDiagonal() * eig.vectors;
    return basis;
}

/// Rayleigh-Ritz on span(x) for the pencil (L, M); returns M-orthonormal Ritz vectors.
inline SpectralBasis rayleigh_ritz(const MetricMeasure& mm, const Mat& x)
{
    Mat g = x.transpose() * mm.mass.asDiagonal() * x;
    Mat h = x.transpose() * (mm.stiffness * x);
    Eigen::LLT<Mat> llt(symmetric_part(g));
    if (llt.info() != Eigen::Success) {
        fail(ErrorCode::SolverFailure, "subspace lost rank during shift-invert iteration");
    }
    const Mat r = llt.matrixU();
    Mat rinv = r.triangularView<Eigen::Upper>().solve(Mat::Identity(r.rows(), r.cols()));
    SymEig eig = sym_eig(symmetric_part(rinv.transpose() * h * rinv));
    SpectralBasis out;
    out.eigenvalues = eig.values;
    out.eigenvectors = x * (rinv * eig.vectors);
    return out;
}

/// Block shift-invert subspace iteration with Rayleigh-Ritz acceleration.
inline SpectralBasis sparse_eigenbasis(const MetricMeasure& mm, Index k, const EigenbasisOptions& opts)
{
    const Index n = mm.size();
    const Index block = std::min(n, k + std::max<Index>(10, k / 2));
    const double scale = (Vec(mm.stiffness.diagonal()).array() / mm.mass.array()).mean();
    const double shift = -1e-4 * scale;
    SpMat shifted = mm.stiffness;
    for (Index i = 0; i < n; ++i) {
        shifted.coeffRef(i, i) -= shift * mm.mass(i);
    }
    Eigen::SimplicialLDLT<SpMat> solver(shifted);
    if (solver.info() != Eigen::Success) {
        fail(ErrorCode::SolverFailure, "factorization of shifted stiffness failed");
    }
    std::mt19937_64 rng(0x5eed);
    std::uniform_real_distribution<double> uni(-1.0, 1.0);
    Mat x(n, block);
    for (Index c = 0; c < block; ++c) {
        for (Index r = 0; r < n; ++r) {
            x(r, c) = uni(rng);
        }
    }
    x.col(0).setOnes();
    Vec row_abs = Vec::Zero(n);
    for (Index c = 0; c < mm.stiffness.outerSize(); ++c) {
        for (SpMat::InnerIterator it(mm.stiffness, c); it; ++it) {
            row_abs(it.row()) += std::abs(it.value());
        }
    }
    const double lnorm = row_abs.maxCoeff();
    for (int it = 0; it < opts.max_iterations; ++it) {
        SpectralBasis ritz = rayleigh_ritz(mm, x);
        double worst = 0.0;
        for (Index c = 0; c < k; ++c) {
            const Vec phi = ritz.eigenvectors.col(c);
            const Vec res = mm.stiffness * phi - ritz.eigenvalues(c) * mm.mass.cwiseProduct(phi);
            worst = std::max(worst, res.cwiseAbs().maxCoeff() / (lnorm * std::max(1.0, phi.cwiseAbs().maxCoeff())));
        }
        if (worst <= opts.residual_tol) {
            SpectralBasis out;
            out.eigenvalues = ritz.eigenvalues.head(k);
            out.eigenvectors = ritz.eigenvectors.leftCols(k);
            return out;
        }
        x = solver.solve(mm.mass.asDiagonal() * ritz.eigenvectors);
    }
    fail(ErrorCode::SolverFailure, "shift-invert iteration did not converge in " +
                                       std::to_string(opts.max_iterations) + " sweeps");
}

}  // namespace detail

/**
 * @brief The k smallest generalized eigenpairs of (L, M).
 *
 * Eigenvectors are M-orthonormal; each column's largest-magnitude entry is
 * positive. Near-degenerate runs are reported in `clusters`.
 */
inline SpectralBasis eigenbasis(const MetricMeasure& mm, Index k, const EigenbasisOptions& opts = {})
{
    const Index n = mm.size();
    require(k > 0 && k <= n, ErrorCode::PreconditionViolation,
            "eigenbasis size k=" + std::to_string(k) + " must be in [1, " + std::to_string(n) + "]");
    require((mm.mass.array() > 0.0).all(), ErrorCode::RankDeficientMass, "mass matrix has a non-positive entry");
    SpectralBasis basis = n <= opts.dense_limit ? detail::dense_eigenbasis(mm, k)
                                                : detail::sparse_eigenbasis(mm, k, opts);
    // Round-off can push the constant mode marginally below zero.
    basis.eigenvalues = basis.eigenvalues.cwiseMax(0.0);
    fix_column_signs(basis.eigenvectors);
    basis.clusters = eigen_clusters(basis.eigenvalues, opts.cluster_gap);
    return basis;
}

inline ShapeDNA shape_dna(const SpectralBasis& basis, Index d)
{
    require(d > 0 && d <= basis.k(), ErrorCode::PreconditionViolation,
            "shape-DNA length d=" + std::to_string(d) + " exceeds basis size " + std::to_string(basis.k()));
    return {basis.eigenvalues.head(d)};
}

inline ShapeDNA shape_dna(const SpectralBasis& basis) { return shape_dna(basis, basis.k()); }

/// Convenience bundle of everything the downstream modules need for one shape.
struct ShapeSpectra {
    std::string shape_id;
    MetricMeasure mm;
    SpectralBasis basis;
    /// Bounding-box diagonal of the source mesh; sets landmark probe radii.
    double extent{1.0};
};

inline ShapeSpectra compute_spectra(const Mesh& mesh, Index k, const EigenbasisOptions& opts = {})
{
    ShapeSpectra s;
    s.shape_id = mesh.shape_id;
    s.mm = metric_measure(mesh);
    s.basis = eigenbasis(s.mm, k, opts);
    s.extent = (mesh.vertices.colwise().maxCoeff() - mesh.vertices.colwise().minCoeff()).norm();
    return s;
}

}  // namespace lsd
