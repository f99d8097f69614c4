#pragma once

// Projected latent differences and variability detection (global and
// cross-collection distinctive functions).

#include <string>
#include <utility>
#include <vector>

#include "lsd/latent.hpp"
#include "lsd/linalg.hpp"
#include "lsd/partition.hpp"

namespace lsd
{

/** @brief m x p matrix with orthonormal columns spanning a latent subspace */
struct ProjectionBasis {
    Mat f;
    std::string description;

    void validate(Index m) const
    {
        require(f.rows() == m || f.cols() == 0, ErrorCode::DimensionMismatch,
                "projection basis has " + std::to_string(f.rows()) + " rows, expected " + std::to_string(m));
        if (!has_orthonormal_columns(f, 1e-10)) {
            fail(ErrorCode::NonOrthonormalF, "projection basis columns are not orthonormal (" + description + ")");
        }
    }
};

enum class VariabilityMode { Global, CrossCollection };

struct DistinctiveFunction {
    Vec alpha;
    double eigenvalue{0.0};
    VariabilityMode mode{VariabilityMode::Global};
};

struct VariabilityResult {
    std::vector<DistinctiveFunction> functions;
    /// The symmetric matrix whose top eigenvectors are returned.
    Mat objective;
    bool degenerate{false};
    std::vector<std::string> warnings;
};

/// P(F) = D (I - F F^T) + F F^T
inline Mat project_difference(const Mat& d, const ProjectionBasis& basis)
{
    require(d.rows() == d.cols(), ErrorCode::DimensionMismatch, "difference operator must be square");
    basis.validate(d.rows());
    const Index m = d.rows();
    if (basis.f.cols() == 0) {
        return d;
    }
    const Mat proj = basis.f * basis.f.transpose();
    return d * (Mat::Identity(m, m) - proj) + proj;
}

/**
 * @brief Drop in squared Frobenius distance caused by projecting both operators.
 *
 * Evaluated as Trace(F^T (D_i - D_j)^T (D_i - D_j) F), which equals
 * Trace(F^T (D_i - D_j)^2 F) for symmetric operators.
 */
inline double delta(const Mat& di, const Mat& dj, const ProjectionBasis& basis)
{
    require(di.rows() == dj.rows() && di.cols() == dj.cols(), ErrorCode::DimensionMismatch,
            "difference operators differ in size");
    basis.validate(di.rows());
    return ((di - dj) * basis.f).squaredNorm();
}

namespace detail
{

inline VariabilityResult top_functions(const Mat& objective, int count, VariabilityMode mode)
{
    const Index m = objective.rows();
    require(count >= 1 && count <= m, ErrorCode::PreconditionViolation,
            "count must be in [1, " + std::to_string(m) + "]");
    VariabilityResult out;
    out.objective = symmetric_part(objective);
    const Index want = std::min<Index>(m, count + 1);
    SymEig eig = sym_eig_largest(out.objective, want);
    fix_column_signs(eig.vectors);
    const double scale = std::max(1e-300, eig.values.cwiseAbs().maxCoeff());
    if (eig.values.cwiseAbs().maxCoeff() <= 1e-14) {
        out.degenerate = true;
        out.warnings.push_back("DegenerateSpectrum: objective matrix vanishes; every unit function is optimal");
    } else if (want > 1 && eig.values(0) - eig.values(1) <= 1e-10 * scale) {
        out.degenerate = true;
        out.warnings.push_back("DegenerateSpectrum: top eigenvalue is repeated; distinctive function is not unique");
    }
    for (int c = 0; c < count; ++c) {
        out.functions.push_back({eig.vectors.col(c), eig.values(c), mode});
    }
    return out;
}

inline Mat pair_term(const Mat& di, const Mat& dj)
{
    const Mat delta = di - dj;
    return delta.transpose() * delta;
}

}  // namespace detail

/// Top eigenvectors of sum over unordered pairs of (D_i - D_j)^T (D_i - D_j).
inline VariabilityResult global_variability(const std::vector<Mat>& diffs, int count = 3)
{
    require(diffs.size() >= 2, ErrorCode::InsufficientShapes, "global variability needs at least 2 shapes");
    const Index m = diffs.front().rows();
    Mat acc = Mat::Zero(m, m);
    for (std::size_t i = 0; i < diffs.size(); ++i) {
        for (std::size_t j = i + 1; j < diffs.size(); ++j) {
            acc += detail::pair_term(diffs[i], diffs[j]);
        }
    }
    return detail::top_functions(acc, count, VariabilityMode::Global);
}

/**
 * @brief Top eigenvectors of the across-cluster sum minus `within_weight`
 * times the within-cluster sum. Eigenvalues may be negative.
 */
inline VariabilityResult cross_collection_variability(const std::vector<Mat>& diffs, const std::vector<int>& labels,
                                                      int count = 3, double within_weight = 1.0)
{
    require(diffs.size() == labels.size(), ErrorCode::DimensionMismatch, "one label per shape is required");
    const bool has_a = std::count(labels.begin(), labels.end(), 0) > 0;
    const bool has_b = std::count(labels.begin(), labels.end(), 1) > 0;
    require(has_a && has_b, ErrorCode::PreconditionViolation, "both clusters must be nonempty");
    const Index m = diffs.front().rows();
    Mat acc = Mat::Zero(m, m);
    for (std::size_t i = 0; i < diffs.size(); ++i) {
        if (labels[i] != 0 && labels[i] != 1) {
            continue;
        }
        for (std::size_t j = i + 1; j < diffs.size(); ++j) {
            if (labels[j] != 0 && labels[j] != 1) {
                continue;
            }
            const Mat term = detail::pair_term(diffs[i], diffs[j]);
            if (labels[i] == labels[j]) {
                acc -= within_weight * term;
            } else {
                acc += term;
            }
        }
    }
    VariabilityResult out = detail::top_functions(acc, count, VariabilityMode::CrossCollection);
    return out;
}

/// Labels (0 for cluster A, 1 for B, -1 otherwise) aligned with `ids`.
inline std::vector<int> partition_labels(const Partition& part, const std::vector<std::string>& ids)
{
    part.validate();
    for (const auto& id : part.cluster_a) {
        require(std::find(ids.begin(), ids.end(), id) != ids.end(), ErrorCode::UnknownShape,
                "partition references unknown shape '" + id + "'");
    }
    for (const auto& id : part.cluster_b) {
        require(std::find(ids.begin(), ids.end(), id) != ids.end(), ErrorCode::UnknownShape,
                "partition references unknown shape '" + id + "'");
    }
    std::vector<int> labels;
    for (const auto& id : ids) {
        labels.push_back(part.in_a(id) ? 0 : (part.in_b(id) ? 1 : -1));
    }
    return labels;
}

inline VariabilityResult cross_collection_variability(const std::vector<Mat>& diffs, const std::vector<std::string>& ids,
                                                      const Partition& part, int count = 3,
                                                      double within_weight = 1.0)
{
    return cross_collection_variability(diffs, partition_labels(part, ids), count, within_weight);
}

/** @brief Field f = Phi Y alpha and |f| scaled to [0, 1] */
struct ShapeField {
    Vec raw;
    Vec normalized;
    double max_abs{0.0};
};

inline ShapeField transfer_to_shape(const Vec& alpha, const Mat& phi, const Mat& y)
{
    require(phi.cols() == y.rows() && y.cols() == alpha.size(), ErrorCode::DimensionMismatch,
            "field transfer dimensions disagree");
    ShapeField out;
    out.raw = phi * (y * alpha);
    out.max_abs = out.raw.size() > 0 ? out.raw.cwiseAbs().maxCoeff() : 0.0;
    out.normalized = out.max_abs > 0.0 ? Vec(out.raw.cwiseAbs() / out.max_abs) : Vec(Vec::Zero(out.raw.size()));
    return out;
}

inline ShapeField transfer_to_shape(const Vec& alpha, const ConsistentLatentBasis& clb, const std::string& shape_id,
                                    const Mat& phi)
{
    return transfer_to_shape(alpha, phi, clb.y[static_cast<std::size_t>(clb.index_of(shape_id))]);
}

/** @brief beta_i = D_i alpha and the first two principal coordinates */
struct SeparationEmbedding {
    std::vector<Vec> beta;
    /// n x 2, mean-centered principal coordinates.
    Mat coords;
};

/// First two principal coordinates of the rows of `x` (centered, deterministic sign).
inline Mat pca_2d(const Mat& x)
{
    const Index n = x.rows();
    Mat centered = x.rowwise() - x.colwise().mean();
    Mat coords = Mat::Zero(n, 2);
    if (n == 0 || centered.norm() == 0.0) {
        return coords;
    }
    const Mat cov = centered.transpose() * centered;
    const Index comps = std::min<Index>(2, cov.rows());
    SymEig eig = sym_eig_largest(cov, comps);
    fix_column_signs(eig.vectors);
    coords.leftCols(comps) = centered * eig.vectors;
    return coords;
}

inline SeparationEmbedding separation_embedding(const std::vector<Mat>& diffs, const Vec& alpha)
{
    SeparationEmbedding out;
    const auto n = static_cast<Index>(diffs.size());
    Mat stacked(n, alpha.size());
    for (Index i = 0; i < n; ++i) {
        const Mat& d = diffs[static_cast<std::size_t>(i)];
        require(d.cols() == alpha.size(), ErrorCode::DimensionMismatch, "alpha length differs from operator size");
        out.beta.push_back(d * alpha);
        stacked.row(i) = out.beta.back().transpose();
    }
    out.coords = pca_2d(stacked);
    return out;
}

struct CommutativityReport {
    double max_relative{0.0};
    std::size_t quadruples{0};
};

/**
 * @brief Largest relative commutator between the pair terms (D_i - D_j)^2 and
 * the adjoint-map distortion terms (X_kl Y_k - Y_l)^T (X_kl Y_k - Y_l), with
 * X_kl = C_lk^T.
 *
 * Only meaningful with full bases (m equal to every k_i); otherwise throws
 * NotFullInformation.
 */
inline CommutativityReport huang17_commutativity_check(const std::vector<Mat>& area_diffs,
                                                       const ConsistentLatentBasis& clb, const FMNetwork& net)
{
    for (int i = 0; i < clb.size(); ++i) {
        if (clb.y[static_cast<std::size_t>(i)].rows() != clb.m) {
            fail(ErrorCode::NotFullInformation, "commutativity check requires m equal to every basis size");
        }
    }
    require(area_diffs.size() == clb.y.size(), ErrorCode::DimensionMismatch, "one difference per shape is required");
    std::vector<Mat> hd;
    for (std::size_t i = 0; i < area_diffs.size(); ++i) {
        for (std::size_t j = i + 1; j < area_diffs.size(); ++j) {
            const Mat delta = area_diffs[i] - area_diffs[j];
            hd.push_back(delta * delta);
        }
    }
    std::vector<Mat> hx;
    for (const auto& [key, fm] : net.maps) {
        const auto [k, l] = key;
        const Mat adjoint = net.map(l, k).matrix.transpose();
        const Mat r = adjoint * clb.y[static_cast<std::size_t>(k)] - clb.y[static_cast<std::size_t>(l)];
        hx.push_back(r.transpose() * r);
    }
    CommutativityReport out;
    for (const auto& a : hx) {
        for (const auto& b : hd) {
            ++out.quadruples;
            const double denom = a.norm() * b.norm();
            if (denom == 0.0) {
                continue;
            }
            out.max_relative = std::max(out.max_relative, (a * b - b * a).norm() / denom);
        }
    }
    return out;
}

}  // namespace lsd
