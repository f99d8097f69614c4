#pragma once

// Dense linear-algebra helpers shared by every module.

#include <Eigen/Dense>
#include <Eigen/Sparse>
#include <lapacke.h>

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdint>
#include <limits>
#include <string>
#include <utility>
#include <vector>

#include "lsd/error.hpp"

namespace lsd
{

using Index = Eigen::Index;
using Mat = Eigen::MatrixXd;
using Vec = Eigen::VectorXd;
using SpMat = Eigen::SparseMatrix<double>;
using Triplet = Eigen::Triplet<double>;

/** @brief Eigenpairs of a symmetric matrix, eigenvalues ascending */
struct SymEig {
    Vec values;
    Mat vectors;
};

/** @brief Contiguous run [begin, end) of eigenvalues closer than a gap tolerance */
struct EigenCluster {
    Index begin{0};
    Index end{0};
};

namespace detail
{
/// Full divide-and-conquer eigensolve (dsyevd); keeps vectors orthonormal inside tight clusters.
inline SymEig lapack_syevd(const Mat& a)
{
    const auto n = static_cast<lapack_int>(a.rows());
    SymEig out;
    out.vectors = a;
    out.values.resize(n);
    if (n == 0) {
        return out;
    }
    const lapack_int info =
        LAPACKE_dsyevd(LAPACK_COL_MAJOR, 'V', 'L', n, out.vectors.data(), n, out.values.data());
    if (info != 0) {
        fail(ErrorCode::SolverFailure, "dsyevd failed (info=" + std::to_string(info) + ")");
    }
    return out;
}

inline SymEig eigen_selfadjoint(const Mat& a)
{
    Eigen::SelfAdjointEigenSolver<Mat> es(a, Eigen::ComputeEigenvectors);
    if (es.info() != Eigen::Success) {
        fail(ErrorCode::SolverFailure, "self-adjoint eigensolver did not converge");
    }
    return {es.eigenvalues(), es.eigenvectors()};
}

/**
 * @brief Randomized O(n^2) probe of an eigendecomposition: V^T V x = x and
 * A V x = V diag(values) x for two fixed pseudo-random x.
 *
 * Some optimized BLAS builds return corrupted eigenvectors on CPUs whose
 * kernels they misdetect; this catches that without trusting the same BLAS.
 */
inline bool plausible_eigendecomposition(const Mat& a, const SymEig& e)
{
    const Index n = a.rows();
    if (n == 0) {
        return true;
    }
    if (!e.values.allFinite() || !e.vectors.allFinite()) {
        return false;
    }
    const double scale = std::max(1.0, a.lpNorm<Eigen::Infinity>());
    const Mat lower = a.triangularView<Eigen::Lower>();
    const Mat full = lower + lower.transpose() - Mat(a.diagonal().asDiagonal());
    std::uint64_t state = 0x9e3779b97f4a7c15ULL;
    for (int probe = 0; probe < 2; ++probe) {
        Vec x(n);
        for (Index i = 0; i < n; ++i) {
            state = state * 6364136223846793005ULL + 1442695040888963407ULL;
            x(i) = static_cast<double>(state >> 11) / 9007199254740992.0 - 0.5;
        }
        x.normalize();
        const Vec vx = e.vectors * x;
        const double orth = (e.vectors.transpose() * vx - x).norm();
        const double resid = (full * vx - e.vectors * e.values.cwiseProduct(x)).norm();
        const double tol = 1e-9 * std::sqrt(static_cast<double>(n));
        if (!(orth <= tol) || !(resid <= tol * scale)) {
            return false;
        }
    }
    return true;
}

inline std::atomic<bool>& lapack_untrusted()
{
    static std::atomic<bool> flag{false};
    return flag;
}
}  // namespace detail

/// All eigenpairs of a symmetric matrix (lower triangle is read), ascending.
inline SymEig sym_eig(const Mat& a)
{
    require(a.rows() == a.cols(), ErrorCode::DimensionMismatch, "symmetric eigensolve needs a square matrix");
    if (!detail::lapack_untrusted()) {
        SymEig out = detail::lapack_syevd(a);
        if (detail::plausible_eigendecomposition(a, out)) {
            return out;
        }
        detail::lapack_untrusted() = true;
    }
    return detail::eigen_selfadjoint(a);
}

/// The `count` smallest eigenpairs of a symmetric matrix.
inline SymEig sym_eig_smallest(const Mat& a, Index count)
{
    require(count >= 0 && count <= a.rows(), ErrorCode::PreconditionViolation, "eigenpair count out of range");
    if (count == 0) {
        return {Vec(0), Mat(a.rows(), 0)};
    }
    SymEig all = sym_eig(a);
    if (count == a.rows()) {
        return all;
    }
    return {all.values.head(count), all.vectors.leftCols(count)};
}

/// The `count` largest eigenpairs, returned in descending order.
inline SymEig sym_eig_largest(const Mat& a, Index count)
{
    const Index n = a.rows();
    require(count >= 0 && count <= n, ErrorCode::PreconditionViolation, "eigenpair count out of range");
    if (count == 0) {
        return {Vec(0), Mat(n, 0)};
    }
    SymEig asc = sym_eig(a);
    SymEig out;
    out.values = asc.values.tail(count).reverse();
    out.vectors = asc.vectors.rightCols(count).rowwise().reverse();
    return out;
}

/// Flips each column so its largest-magnitude entry is positive (first index wins ties).
inline void fix_column_signs(Mat& m)
{
    for (Index c = 0; c < m.cols(); ++c) {
        Index best = 0;
        double mag = -1.0;
        for (Index r = 0; r < m.rows(); ++r) {
            const double v = std::abs(m(r, c));
            if (v > mag * (1.0 + 1e-12) + 1e-300) {
                mag = v;
                best = r;
            }
        }
        if (m.rows() > 0 && m(best, c) < 0.0) {
            m.col(c) *= -1.0;
        }
    }
}

inline void fix_sign(Vec& v)
{
    Mat tmp = v;
    fix_column_signs(tmp);
    v = tmp.col(0);
}

/// Groups ascending eigenvalues whose consecutive gap is below `gap * max(1, |lambda_max|)`.
inline std::vector<EigenCluster> eigen_clusters(const Vec& ascending, double gap)
{
    std::vector<EigenCluster> out;
    if (ascending.size() == 0) {
        return out;
    }
    const double scale = std::max(1.0, ascending.cwiseAbs().maxCoeff());
    Index start = 0;
    for (Index i = 1; i <= ascending.size(); ++i) {
        const bool split = i == ascending.size() || std::abs(ascending(i) - ascending(i - 1)) >= gap * scale;
        if (split) {
            if (i - start > 1) {
                out.push_back({start, i});
            }
            start = i;
        }
    }
    return out;
}

/// Moore-Penrose pseudo-inverse of a diagonal given as a vector.
inline Vec pinv_diagonal(const Vec& d, double tol)
{
    Vec out(d.size());
    for (Index i = 0; i < d.size(); ++i) {
        out(i) = std::abs(d(i)) > tol ? 1.0 / d(i) : 0.0;
    }
    return out;
}

inline Mat symmetric_part(const Mat& a) { return 0.5 * (a + a.transpose()); }

inline double frob2(const Mat& a) { return a.squaredNorm(); }

/// Orthonormal-columns check: ||F^T F - I||_F <= tol.
inline bool has_orthonormal_columns(const Mat& f, double tol)
{
    if (f.cols() == 0) {
        return true;
    }
    return (f.transpose() * f - Mat::Identity(f.cols(), f.cols())).norm() <= tol;
}

/// 2-norm condition number via singular values.
inline double condition_number(const Mat& a)
{
    if (a.size() == 0) {
        return 1.0;
    }
    Eigen::JacobiSVD<Mat> svd(a);
    const Vec& s = svd.singularValues();
    const double smin = s(s.size() - 1);
    return smin <= 0.0 ? std::numeric_limits<double>::infinity() : s(0) / smin;
}

/// Moore-Penrose pseudo-inverse via SVD with relative cut-off.
inline Mat pseudo_inverse(const Mat& a, double rel_tol = 1e-12)
{
    Eigen::JacobiSVD<Mat> svd(a, Eigen::ComputeThinU | Eigen::ComputeThinV);
    const Vec& s = svd.singularValues();
    const double cut = s.size() > 0 ? rel_tol * s(0) : 0.0;
    return svd.matrixV() * pinv_diagonal(s, cut).asDiagonal() * svd.matrixU().transpose();
}

}  // namespace lsd
