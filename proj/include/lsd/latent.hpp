#pragma once

// Consistent latent bases over a functional map network, their canonical
// form, the latent shape spectrum and latent shape differences.

#include <algorithm>
#include <limits>
#include <numeric>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "lsd/fmaps.hpp"
#include "lsd/linalg.hpp"
#include "lsd/network.hpp"

namespace lsd
{

/** @brief Per-shape k_i x m matrices Y_i with sum_i Y_i^T Y_i = I */
struct ConsistentLatentBasis {
    std::vector<std::string> ids;
    std::vector<Mat> y;
    Index m{0};
    bool canonical{false};
    /// sum over directed edges of ||C_ij Y_i - Y_j||_F^2
    double consistency_residual{0.0};
    /// Smallest eigenvalues of the block energy matrix (m + 1 when available).
    Vec energy_spectrum;
    std::vector<std::string> warnings;

    [[nodiscard]] int size() const { return static_cast<int>(y.size()); }

    [[nodiscard]] int index_of(const std::string& id) const
    {
        auto it = std::find(ids.begin(), ids.end(), id);
        if (it == ids.end()) {
            fail(ErrorCode::UnknownShape, "shape '" + id + "' has no latent basis");
        }
        return static_cast<int>(it - ids.begin());
    }

    /// sum_i Y_i^T Y_i
    [[nodiscard]] Mat gram() const
    {
        Mat g = Mat::Zero(m, m);
        for (const auto& yi : y) {
            g.noalias() += yi.transpose() * yi;
        }
        return g;
    }

    /// sum_i Y_i^T Lambda_i Y_i
    [[nodiscard]] Mat metric(const std::vector<Vec>& spectra) const
    {
        require(spectra.size() == y.size(), ErrorCode::DimensionMismatch, "one spectrum per shape is required");
        Mat e = Mat::Zero(m, m);
        for (std::size_t i = 0; i < y.size(); ++i) {
            require(spectra[i].size() == y[i].rows(), ErrorCode::DimensionMismatch,
                    ids[i] + ": spectrum length differs from latent basis rows");
            e.noalias() += y[i].transpose() * spectra[i].asDiagonal() * y[i];
        }
        return e;
    }
};

/** @brief Spectrum Lambda_0 of the latent shape, ascending */
struct LatentShape {
    Vec spectrum;
    std::vector<EigenCluster> clusters;
    int collection_size{0};
};

struct LatentDifference {
    Mat matrix;
    DifferenceKind kind{DifferenceKind::Area};
    std::string shape_id;
    bool normalized{false};
};

struct LatentOptions {
    double gap_warning{1e-10};
    double cluster_gap{1e-8};
};

/**
 * @brief Minimizes sum ||C_ij Y_i - Y_j||^2 subject to sum Y_i^T Y_i = I.
 *
 * The minimizer stacks the m lowest eigenvectors of the block matrix W with,
 * per directed edge (i, j): W_ii += C^T C, W_jj += I, W_ij -= C^T, W_ji -= C.
 */
inline ConsistentLatentBasis consistent_latent_basis(const FMNetwork& net, Index m, const LatentOptions& opts = {})
{
    net.validate();
    const int n = net.size();
    require(n >= 1, ErrorCode::InsufficientShapes, "latent basis needs at least one shape");
    std::vector<Index> offset(static_cast<std::size_t>(n) + 1, 0);
    Index min_k = std::numeric_limits<Index>::max();
    for (int i = 0; i < n; ++i) {
        offset[i + 1] = offset[i] + net.basis_size(i);
        min_k = std::min(min_k, net.basis_size(i));
    }
    require(m >= 1 && m <= min_k, ErrorCode::PreconditionViolation,
            "latent dimension m=" + std::to_string(m) + " must be in [1, " + std::to_string(min_k) + "]");
    const Index total = offset[n];
    Mat w = Mat::Zero(total, total);
    for (const auto& [key, fm] : net.maps) {
        const auto [i, j] = key;
        const Mat& c = fm.matrix;
        const Index ki = c.cols();
        const Index kj = c.rows();
        w.block(offset[i], offset[i], ki, ki).noalias() += c.transpose() * c;
        w.block(offset[j], offset[j], kj, kj).diagonal().array() += 1.0;
        w.block(offset[i], offset[j], ki, kj) -= c.transpose();
        w.block(offset[j], offset[i], kj, ki) -= c;
    }
    const Index want = std::min(total, m + 1);
    SymEig eig = sym_eig_smallest(w, want);
    Mat stacked = eig.vectors.leftCols(m);
    fix_column_signs(stacked);

    ConsistentLatentBasis clb;
    clb.ids = net.ids;
    clb.m = m;
    clb.energy_spectrum = eig.values;
    if (want > m) {
        const double scale = std::max(1.0, std::abs(eig.values(m)));
        if (eig.values(m) - eig.values(m - 1) < opts.gap_warning * scale) {
            clb.warnings.push_back("SpectralGapWarning: energy eigenvalues " + std::to_string(m) + " and " +
                                   std::to_string(m + 1) + " coincide; latent subspace is not unique");
        }
    }
    for (int i = 0; i < n; ++i) {
        clb.y.push_back(stacked.middleRows(offset[i], net.basis_size(i)));
    }
    for (const auto& [key, fm] : net.maps) {
        clb.consistency_residual += (fm.matrix * clb.y[key.first] - clb.y[key.second]).squaredNorm();
    }
    return clb;
}

struct CanonicalResult {
    ConsistentLatentBasis clb;
    LatentShape latent;
    /// Rotation U applied to every Y_i.
    Mat rotation;
};

/**
 * @brief Rotates a CLB so that sum_i Y_i^T Lambda_i Y_i becomes diagonal.
 *
 * U holds the eigenvectors of the symmetrized metric, ascending, with each
 * column's largest entry positive. Inside eigenvalue clusters the columns
 * are ordered by the first entry of Y_0 U, descending.
 */
inline CanonicalResult canonicalize(const ConsistentLatentBasis& clb, const std::vector<Vec>& spectra,
                                    const LatentOptions& opts = {})
{
    const Mat g = clb.gram();
    require((g - Mat::Identity(clb.m, clb.m)).cwiseAbs().maxCoeff() <= 1e-8, ErrorCode::PreconditionViolation,
            "latent basis violates sum Y_i^T Y_i = I");
    SymEig eig = sym_eig(symmetric_part(clb.metric(spectra)));
    Mat u = std::move(eig.vectors);
    fix_column_signs(u);
    CanonicalResult out;
    out.latent.clusters = eigen_clusters(eig.values, opts.cluster_gap);
    out.clb = clb;
    for (const auto& cl : out.latent.clusters) {
        const Vec lead = clb.y.front().row(0) * u.middleCols(cl.begin, cl.end - cl.begin);
        std::vector<Index> order(static_cast<std::size_t>(cl.end - cl.begin));
        std::iota(order.begin(), order.end(), Index{0});
        std::stable_sort(order.begin(), order.end(), [&](Index a, Index b) { return lead(a) > lead(b); });
        const Mat block = u.middleCols(cl.begin, cl.end - cl.begin);
        for (std::size_t p = 0; p < order.size(); ++p) {
            u.col(cl.begin + static_cast<Index>(p)) = block.col(order[p]);
        }
        out.clb.warnings.push_back("latent eigenvalue cluster [" + std::to_string(cl.begin) + ", " +
                                   std::to_string(cl.end) + ") is degenerate; basis inside it is not canonical");
    }
    for (auto& yi : out.clb.y) {
        yi = yi * u;
    }
    out.clb.canonical = true;
    out.latent.spectrum = eig.values.cwiseMax(0.0);
    out.latent.collection_size = clb.size();
    out.rotation = std::move(u);
    return out;
}

/// Area difference Y^T Y or conformal difference Lambda_0^+ Y^T Lambda Y for one basis.
inline Mat latent_difference_matrix(const Mat& y, const Vec& lambda, const LatentShape& latent, DifferenceKind kind,
                                    double zero_mode_value)
{
    require(y.cols() == latent.spectrum.size(), ErrorCode::DimensionMismatch, "latent basis width differs from m");
    if (kind == DifferenceKind::Area) {
        return y.transpose() * y;
    }
    require(lambda.size() == y.rows(), ErrorCode::DimensionMismatch, "spectrum length differs from latent basis rows");
    const double tau = 1e-8 * std::max(0.0, latent.spectrum.maxCoeff());
    const Vec inv = pinv_diagonal(latent.spectrum, tau);
    Mat d = inv.asDiagonal() * (y.transpose() * lambda.asDiagonal() * y);
    for (Index i = 0; i < latent.spectrum.size(); ++i) {
        if (std::abs(latent.spectrum(i)) <= tau) {
            d.row(i).setZero();
            d.col(i).setZero();
            d(i, i) = zero_mode_value;
        }
    }
    return d;
}

/**
 * @brief Latent shape differences of every shape.
 *
 * Un-normalized operators follow the equations directly and sum to I over
 * the collection; `normalized` multiplies them by the collection size. The
 * conformal zero mode is set to the same scale (1/n or 1).
 */
inline std::vector<LatentDifference> latent_differences(const ConsistentLatentBasis& clb,
                                                        const std::vector<Vec>& spectra, const LatentShape& latent,
                                                        DifferenceKind kind, bool normalized = false)
{
    if (!clb.canonical) {
        fail(ErrorCode::RequiresCanonical, "latent differences need a canonical latent basis");
    }
    require(spectra.size() == clb.y.size(), ErrorCode::DimensionMismatch, "one spectrum per shape is required");
    const double n = static_cast<double>(std::max(1, latent.collection_size));
    const double scale = normalized ? n : 1.0;
    std::vector<LatentDifference> out;
    out.reserve(clb.y.size());
    for (std::size_t i = 0; i < clb.y.size(); ++i) {
        LatentDifference d;
        d.matrix = scale * latent_difference_matrix(clb.y[i], spectra[i], latent, kind, 1.0 / n);
        d.kind = kind;
        d.shape_id = clb.ids[i];
        d.normalized = normalized;
        out.push_back(std::move(d));
    }
    return out;
}

struct ExtendResult {
    int neighbor{-1};
    Mat y;
    LatentDifference area;
    LatentDifference conformal;
};

/// Index of the nearest Shape-DNA vector; ties resolve to the lower index.
inline int nearest_by_dna(const std::vector<Vec>& dnas, const Vec& query)
{
    require(!dnas.empty(), ErrorCode::PreconditionViolation, "nearest-neighbor search over an empty collection");
    int best = 0;
    double best_d = std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < dnas.size(); ++i) {
        const Index len = std::min(dnas[i].size(), query.size());
        const double d = (dnas[i].head(len) - query.head(len)).norm();
        if (d < best_d) {
            best_d = d;
            best = static_cast<int>(i);
        }
    }
    return best;
}

/**
 * @brief Pushes the latent basis of a member to a new shape: Y_new = C Y_i.
 *
 * The neighbor is the nearest member by Shape-DNA unless `neighbor` is set.
 * The collection constraint is left untouched.
 */
inline ExtendResult extend_to_shape(const ConsistentLatentBasis& clb, const LatentShape& latent,
                                    const std::vector<Vec>& member_dnas, const Vec& new_dna,
                                    const Vec& new_spectrum, const std::function<FunctionalMap(int)>& provider,
                                    std::optional<int> neighbor = std::nullopt, bool normalized = false)
{
    if (!clb.canonical) {
        fail(ErrorCode::RequiresCanonical, "extension needs a canonical latent basis");
    }
    require(clb.size() > 0, ErrorCode::PreconditionViolation, "cannot extend an empty collection");
    require(member_dnas.size() == clb.y.size(), ErrorCode::DimensionMismatch, "one Shape-DNA per member is required");
    ExtendResult out;
    out.neighbor = neighbor ? *neighbor : nearest_by_dna(member_dnas, new_dna);
    require(out.neighbor >= 0 && out.neighbor < clb.size(), ErrorCode::UnknownShape, "neighbor index out of range");
    FunctionalMap fm;
    try {
        fm = provider(out.neighbor);
    } catch (const std::exception& e) {
        fail(ErrorCode::ProviderFailure, "map from " + clb.ids[out.neighbor] + " to new shape: " + e.what());
    }
    const Mat& yi = clb.y[out.neighbor];
    require(fm.matrix.cols() == yi.rows() && fm.matrix.rows() == new_spectrum.size(), ErrorCode::DimensionMismatch,
            "extension map has wrong dimensions");
    out.y = fm.matrix * yi;
    const double n = static_cast<double>(std::max(1, latent.collection_size));
    const double scale = normalized ? n : 1.0;
    out.area = {scale * latent_difference_matrix(out.y, new_spectrum, latent, DifferenceKind::Area, 1.0 / n),
                DifferenceKind::Area, fm.target_id, normalized};
    out.conformal = {scale * latent_difference_matrix(out.y, new_spectrum, latent, DifferenceKind::Conformal, 1.0 / n),
                     DifferenceKind::Conformal, fm.target_id, normalized};
    return out;
}

/// Convenience: CLB, canonical form and both difference kinds in one call.
struct LatentPipeline {
    ConsistentLatentBasis raw;
    CanonicalResult canonical;
    std::vector<LatentDifference> area;
    std::vector<LatentDifference> conformal;
};

inline LatentPipeline run_latent_pipeline(const FMNetwork& net, Index m, bool normalized = false,
                                          const LatentOptions& opts = {})
{
    LatentPipeline p;
    p.raw = consistent_latent_basis(net, m, opts);
    p.canonical = canonicalize(p.raw, net.spectra, opts);
    p.area = latent_differences(p.canonical.clb, net.spectra, p.canonical.latent, DifferenceKind::Area, normalized);
    p.conformal =
        latent_differences(p.canonical.clb, net.spectra, p.canonical.latent, DifferenceKind::Conformal, normalized);
    return p;
}

struct StabilityReport {
    Mat transform_plain;
    Mat transform_canonical;
    double ratio_plain{0.0};
    double ratio_canonical{0.0};
};

/// sum_d T_dd^2 / ||T||_F^2
inline double diagonal_dominance(const Mat& t)
{
    const double total = t.squaredNorm();
    return total > 0.0 ? t.diagonal().squaredNorm() / total : 0.0;
}

/**
 * @brief Change of basis on shape 0 between latent bases computed without
 * and with the last network member.
 *
 * `full` must contain the base collection as shapes [0, n-1) and the extra
 * shape as index n-1. The base network is the induced subgraph.
 */
inline StabilityReport stability_probe(const FMNetwork& full, Index m, const LatentOptions& opts = {})
{
    const int n = full.size();
    require(n >= 4, ErrorCode::InsufficientShapes, "stability probe needs at least 3 shapes plus one extra");
    FMNetwork base;
    base.ids.assign(full.ids.begin(), full.ids.end() - 1);
    base.spectra.assign(full.spectra.begin(), full.spectra.end() - 1);
    base.topology = full.topology;
    for (const auto& [key, fm] : full.maps) {
        if (key.first < n - 1 && key.second < n - 1) {
            base.maps.emplace(key, fm);
        }
    }
    const ConsistentLatentBasis plain_base = consistent_latent_basis(base, m, opts);
    const ConsistentLatentBasis plain_full = consistent_latent_basis(full, m, opts);
    const CanonicalResult canon_base = canonicalize(plain_base, base.spectra, opts);
    const CanonicalResult canon_full = canonicalize(plain_full, full.spectra, opts);
    StabilityReport r;
    r.transform_plain = pseudo_inverse(plain_base.y.front()) * plain_full.y.front();
    r.transform_canonical = pseudo_inverse(canon_base.clb.y.front()) * canon_full.clb.y.front();
    r.ratio_plain = diagonal_dominance(r.transform_plain);
    r.ratio_canonical = diagonal_dominance(r.transform_canonical);
    return r;
}

}  // namespace lsd
