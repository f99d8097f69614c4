#pragma once

// Algebra on latent difference operators: analogies, interpolation,
// localized mixing and spectrum descriptors.

#include <limits>
#include <map>
#include <string>
#include <utility>
#include <vector>

#include "lsd/latent.hpp"
#include "lsd/linalg.hpp"
#include "lsd/variability.hpp"

namespace lsd
{

/** @brief Inputs and parameters that reproduce an operator expression */
struct Recipe {
    std::string formula;
    std::vector<std::string> inputs;
    std::map<std::string, double> params;
};

struct OperatorExpression {
    Mat result;
    Recipe recipe;
};

struct AnalogyOptions {
    double max_condition{1e8};
};

/// D_B D_A^{-1} D_C through an LU solve; D_A must be reasonably conditioned.
inline OperatorExpression analogy(const Mat& da, const Mat& db, const Mat& dc, const AnalogyOptions& opts = {},
                                  std::vector<std::string> names = {"A", "B", "C"})
{
    require(da.rows() == da.cols() && db.rows() == da.rows() && db.cols() == da.cols() && dc.rows() == da.rows() &&
                dc.cols() == da.cols(),
            ErrorCode::DimensionMismatch, "analogy operands must be square and equally sized");
    const double cond = condition_number(da);
    if (!(cond <= opts.max_condition)) {
        fail(ErrorCode::IllConditioned, "D_A condition number " + std::to_string(cond) + " exceeds " +
                                            std::to_string(opts.max_condition));
    }
    OperatorExpression out;
    out.result = db * da.partialPivLu().solve(dc);
    out.recipe = {"analogy", std::move(names), {{"condition", cond}}};
    return out;
}

/// (1 - t) D_A + t D_B for t in [0, 1], evaluated as D_A + t (D_B - D_A).
inline OperatorExpression interpolate(const Mat& da, const Mat& db, double t,
                                      std::vector<std::string> names = {"A", "B"})
{
    require(da.rows() == db.rows() && da.cols() == db.cols(), ErrorCode::DimensionMismatch,
            "interpolation operands differ in size");
    require(t >= 0.0 && t <= 1.0, ErrorCode::PreconditionViolation, "interpolation parameter must lie in [0, 1]");
    OperatorExpression out;
    if (t == 0.0) {
        out.result = da;
    } else if (t == 1.0) {
        out.result = db;
    } else {
        out.result = da + t * (db - da);
    }
    out.recipe = {"interpolate", std::move(names), {{"t", t}}};
    return out;
}

/**
 * @brief D_A (I - F F^T) + D_B F F^T: D_B on span(F), D_A on its complement.
 */
inline OperatorExpression partial_mix(const Mat& da, const Mat& db, const ProjectionBasis& basis,
                                      std::vector<std::string> names = {"A", "B"})
{
    require(da.rows() == db.rows() && da.cols() == db.cols() && da.rows() == da.cols(), ErrorCode::DimensionMismatch,
            "mix operands must be square and equally sized");
    basis.validate(da.rows());
    const Index m = da.rows();
    const Mat proj = basis.f.cols() == 0 ? Mat(Mat::Zero(m, m)) : Mat(basis.f * basis.f.transpose());
    OperatorExpression out;
    out.result = da * (Mat::Identity(m, m) - proj) + db * proj;
    out.recipe = {"partial_mix", std::move(names), {{"p", static_cast<double>(basis.f.cols())}}};
    return out;
}

/**
 * @brief Latent functions localized on a vertex region of one member.
 *
 * Spans the leading left singular vectors of Y^+ Phi^T M_S^{1/2}; the
 * squared singular values measure how much of each latent function's mass
 * sits in the region. Inside a run of tied singular values the latent image
 * of the region indicator, Y^+ Phi^T M 1_S, is placed first so the result
 * stays deterministic when the region is the whole shape.
 */
inline ProjectionBasis localized_basis(const ConsistentLatentBasis& clb, const std::string& shape_id, const Mat& phi,
                                       const Vec& mass, const std::vector<int>& region, Index p = -1)
{
    if (region.empty()) {
        fail(ErrorCode::EmptyRegion, "localized basis needs a nonempty vertex region");
    }
    const Mat& y = clb.y[static_cast<std::size_t>(clb.index_of(shape_id))];
    require(phi.cols() == y.rows() && phi.rows() == mass.size(), ErrorCode::DimensionMismatch,
            "basis, mass and latent basis sizes disagree");
    const Index m = clb.m;
    if (p < 0) {
        p = std::min<Index>(10, m);
    }
    require(p >= 1 && p <= m, ErrorCode::PreconditionViolation, "basis size p must be in [1, m]");
    const Mat y_pinv = pseudo_inverse(y);
    Mat restricted(phi.cols(), static_cast<Index>(region.size()));
    Vec indicator = Vec::Zero(phi.cols());
    for (std::size_t c = 0; c < region.size(); ++c) {
        const int v = region[c];
        require(v >= 0 && v < phi.rows(), ErrorCode::IndexOutOfRange, "region vertex out of range");
        restricted.col(static_cast<Index>(c)) = phi.row(v).transpose() * std::sqrt(mass(v));
        indicator += phi.row(v).transpose() * mass(v);
    }
    Eigen::JacobiSVD<Mat> svd(y_pinv * restricted, Eigen::ComputeFullU);
    const Mat& u = svd.matrixU();
    Vec sigma = Vec::Zero(m);
    sigma.head(svd.singularValues().size()) = svd.singularValues();
    const double top = sigma.size() > 0 ? sigma(0) : 0.0;
    require(p <= svd.nonzeroSingularValues() && sigma(p - 1) > 1e-10 * top, ErrorCode::PreconditionViolation,
            "region spans fewer than " + std::to_string(p) + " latent directions");
    const Vec g = y_pinv * indicator;
    Mat f(m, p);
    Index filled = 0;
    for (Index begin = 0; begin < m && filled < p;) {
        Index end = begin + 1;
        while (end < m && sigma(begin) - sigma(end) <= 1e-8 * top) {
            ++end;
        }
        const Mat block = u.middleCols(begin, end - begin);
        Mat ordered(m, block.cols());
        Index cols = 0;
        const Vec lead = block * (block.transpose() * g);
        if (block.cols() > 1 && lead.norm() > 1e-12 * std::max(1.0, g.norm())) {
            ordered.col(cols++) = lead.normalized();
        }
        for (Index c = 0; c < block.cols() && cols < block.cols(); ++c) {
            Vec v = block.col(c);
            for (Index q = 0; q < cols; ++q) {
                v -= ordered.col(q).dot(v) * ordered.col(q);
            }
            if (v.norm() > 1e-8) {
                ordered.col(cols++) = v.normalized();
            }
        }
        const Index take = std::min(p - filled, cols);
        f.middleCols(filled, take) = ordered.leftCols(take);
        filled += take;
        begin = end;
    }
    fix_column_signs(f);
    return {f, "localized on " + std::to_string(region.size()) + " vertices of " + shape_id};
}

struct SpectrumDescriptor {
    Vec values;
    bool symmetrized{false};
};

/// Ascending eigenvalues of the operator's symmetric part.
inline SpectrumDescriptor lssd_spectrum_descriptor(const Mat& d, DifferenceKind kind = DifferenceKind::Area)
{
    require(d.rows() == d.cols(), ErrorCode::DimensionMismatch, "descriptor needs a square operator");
    SpectrumDescriptor out;
    out.symmetrized = kind == DifferenceKind::Conformal;
    out.values = sym_eig(symmetric_part(d)).values;
    return out;
}

/// For each row of `from`, the index of the closest row of `to` (ties to lower index).
inline std::vector<int> nearest_neighbor_pairing(const std::vector<Vec>& from, const std::vector<Vec>& to)
{
    std::vector<int> out;
    for (const auto& a : from) {
        out.push_back(nearest_by_dna(to, a));
    }
    return out;
}

}  // namespace lsd
