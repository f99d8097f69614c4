#pragma once

// Functional maps between shape pairs and pairwise shape differences.

#include <filesystem>
#include <fstream>
#include <set>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "lsd/linalg.hpp"
#include "lsd/spectral.hpp"

namespace lsd
{

/** @brief Vertex pairs (source index, target index) */
struct Correspondence {
    enum class Kind { FullBijection, SparseLandmarks };
    std::vector<std::pair<int, int>> pairs;
    Kind kind{Kind::FullBijection};
};

/** @brief k_j x k_i matrix C_ij taking coefficients on the source to the target */
struct FunctionalMap {
    Mat matrix;
    std::string source_id;
    std::string target_id;
};

enum class DifferenceKind { Area, Conformal };

inline std::string to_string(DifferenceKind kind) { return kind == DifferenceKind::Area ? "area" : "conformal"; }

struct PairDifference {
    Mat matrix;
    DifferenceKind kind{DifferenceKind::Area};
    std::string base_id;
    std::string other_id;
};

/// Identity correspondence for meshes sharing connectivity.
inline Correspondence identity_correspondence(Index num_vertices)
{
    Correspondence c;
    c.pairs.reserve(static_cast<std::size_t>(num_vertices));
    for (int v = 0; v < static_cast<int>(num_vertices); ++v) {
        c.pairs.emplace_back(v, v);
    }
    return c;
}

/// Parses `src_idx tgt_idx` lines. Blank lines and '#' comments are skipped.
inline Correspondence read_correspondence(std::istream& in, Correspondence::Kind kind)
{
    Correspondence c;
    c.kind = kind;
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        const auto hash = line.find('#');
        if (hash != std::string::npos) {
            line.erase(hash);
        }
        if (line.find_first_not_of(" \t\r") == std::string::npos) {
            continue;
        }
        std::istringstream ls(line);
        int a = 0;
        int b = 0;
        std::string extra;
        if (!(ls >> a >> b) || (ls >> extra)) {
            fail(ErrorCode::ParseError, "correspondence line " + std::to_string(lineno) + " is not 'src tgt'");
        }
        c.pairs.emplace_back(a, b);
    }
    return c;
}

inline Correspondence read_correspondence(const std::filesystem::path& path,
                                          Correspondence::Kind kind = Correspondence::Kind::FullBijection)
{
    std::ifstream in(path);
    if (!in) {
        fail(ErrorCode::IoError, "cannot open correspondence file " + path.string());
    }
    return read_correspondence(in, kind);
}

inline void write_correspondence(const Correspondence& corr, std::ostream& out)
{
    for (const auto& [a, b] : corr.pairs) {
        out << a << ' ' << b << '\n';
    }
}

/// Swaps source and target of every pair.
inline Correspondence reversed(const Correspondence& corr)
{
    Correspondence out;
    out.kind = corr.kind;
    out.pairs.reserve(corr.pairs.size());
    for (const auto& [a, b] : corr.pairs) {
        out.pairs.emplace_back(b, a);
    }
    return out;
}

/**
 * @brief C = Phi_tgt^T M_tgt Pi Phi_src, where (Pi f)(t) = f(s) for each pair (s, t).
 *
 * Requires a full bijection between equally sized meshes.
 */
inline FunctionalMap fmap_from_correspondence(const ShapeSpectra& src, const ShapeSpectra& tgt,
                                              const Correspondence& corr)
{
    if (corr.kind != Correspondence::Kind::FullBijection) {
        fail(ErrorCode::NonBijective, "sparse landmarks do not define a pointwise pullback; use fmap_from_landmarks");
    }
    const Index ns = src.basis.num_vertices();
    const Index nt = tgt.basis.num_vertices();
    require(ns == nt && static_cast<Index>(corr.pairs.size()) == nt, ErrorCode::DimensionMismatch,
            src.shape_id + " -> " + tgt.shape_id + ": bijection needs equal vertex counts and one pair per vertex");
    std::vector<char> seen_src(static_cast<std::size_t>(ns), 0);
    std::vector<char> seen_tgt(static_cast<std::size_t>(nt), 0);
    Mat pulled(nt, src.basis.k());
    for (const auto& [s, t] : corr.pairs) {
        if (s < 0 || s >= ns || t < 0 || t >= nt) {
            fail(ErrorCode::IndexOutOfRange, "correspondence pair (" + std::to_string(s) + "," + std::to_string(t) +
                                                 ") out of range");
        }
        if (seen_src[s] || seen_tgt[t]) {
            fail(ErrorCode::NonBijective, "correspondence repeats vertex in pair (" + std::to_string(s) + "," +
                                              std::to_string(t) + ")");
        }
        seen_src[s] = 1;
        seen_tgt[t] = 1;
        pulled.row(t) = src.basis.eigenvectors.row(s);
    }
    FunctionalMap fm;
    fm.matrix = tgt.basis.eigenvectors.transpose() * tgt.mm.mass.asDiagonal() * pulled;
    fm.source_id = src.shape_id;
    fm.target_id = tgt.shape_id;
    return fm;
}

struct LandmarkOptions {
    /// Probe radius as a fraction of the bounding-box diagonal.
    double radius_fraction{0.05};
    double tikhonov{1e-12};
};

struct LandmarkFit {
    FunctionalMap map;
    bool under_determined{false};
    /// ||C A - B||_F over the landmark descriptor coefficients.
    double residual{0.0};
};

namespace detail
{

/// Unit M-norm Gaussians of the spectral (biharmonic-type) distance around each landmark.
inline Mat landmark_descriptors(const ShapeSpectra& shape, const std::vector<int>& landmarks,
                                double radius_fraction)
{
    const Mat& phi = shape.basis.eigenvectors;
    const Vec& lambda = shape.basis.eigenvalues;
    const double tol = 1e-8 * std::max(1e-300, lambda.maxCoeff());
    Vec weight(lambda.size());
    for (Index l = 0; l < lambda.size(); ++l) {
        weight(l) = lambda(l) > tol ? 1.0 / lambda(l) : 0.0;
    }
    const Mat embedded = phi * weight.asDiagonal();
    const double sigma = radius_fraction * shape.extent;
    Mat coeffs(phi.cols(), static_cast<Index>(landmarks.size()));
    for (std::size_t p = 0; p < landmarks.size(); ++p) {
        const int lm = landmarks[p];
        require(lm >= 0 && lm < phi.rows(), ErrorCode::IndexOutOfRange,
                shape.shape_id + ": landmark " + std::to_string(lm) + " out of range");
        const Vec d2 = (embedded.rowwise() - embedded.row(lm)).rowwise().squaredNorm();
        Vec g = (-d2.array() / (2.0 * sigma * sigma)).exp().matrix();
        g /= std::sqrt(g.dot(shape.mm.mass.cwiseProduct(g)));
        coeffs.col(static_cast<Index>(p)) = phi.transpose() * shape.mm.mass.cwiseProduct(g);
    }
    return coeffs;
}

}  // namespace detail

/**
 * @brief Least-squares map from landmark probes with Laplacian-commutativity
 * regularization.
 *
 * Minimizes ||C A - B||^2 + w ||C Lambda_src - Lambda_tgt C||^2. The
 * penalty is diagonal in the entries of C, so each row is an independent
 * ridge problem solved through its normal equations.
 */
inline LandmarkFit fmap_from_landmarks(const ShapeSpectra& src, const ShapeSpectra& tgt,
                                       const Correspondence& landmarks, double regularizer_weight,
                                       const LandmarkOptions& opts = {})
{
    require(regularizer_weight >= 0.0, ErrorCode::PreconditionViolation, "regularizer weight must be nonnegative");
    std::vector<int> src_lm;
    std::vector<int> tgt_lm;
    for (const auto& [s, t] : landmarks.pairs) {
        src_lm.push_back(s);
        tgt_lm.push_back(t);
    }
    const Mat a = detail::landmark_descriptors(src, src_lm, opts.radius_fraction);
    const Mat b = detail::landmark_descriptors(tgt, tgt_lm, opts.radius_fraction);
    const Index ks = src.basis.k();
    const Index kt = tgt.basis.k();
    const auto p = static_cast<Index>(src_lm.size());

    LandmarkFit fit;
    fit.under_determined = p < 3 || (regularizer_weight == 0.0 && p < ks);
    const Mat gram = a * a.transpose();
    const double floor = opts.tikhonov * std::max(1.0, gram.diagonal().maxCoeff());
    Mat c(kt, ks);
    for (Index r = 0; r < kt; ++r) {
        Mat lhs = gram;
        for (Index col = 0; col < ks; ++col) {
            const double gap = tgt.basis.eigenvalues(r) - src.basis.eigenvalues(col);
            lhs(col, col) += regularizer_weight * gap * gap + floor;
        }
        const Vec rhs = a * b.row(r).transpose();
        c.row(r) = Eigen::LDLT<Mat>(lhs).solve(rhs).transpose();
    }
    fit.map.matrix = std::move(c);
    fit.map.source_id = src.shape_id;
    fit.map.target_id = tgt.shape_id;
    fit.residual = (fit.map.matrix * a - b).norm();
    return fit;
}

/**
 * @brief Area (C^T C) or conformal (Lambda_i^+ C^T Lambda_j C) difference.
 *
 * Rows zeroed by the pseudo-inverse (zero modes of the source) are replaced,
 * together with their columns, by the identity so that isometries map to I.
 */
inline PairDifference pair_difference(const FunctionalMap& map, const Vec& lambda_src, const Vec& lambda_tgt,
                                      DifferenceKind kind)
{
    const Mat& c = map.matrix;
    require(c.cols() == lambda_src.size() && c.rows() == lambda_tgt.size(), ErrorCode::DimensionMismatch,
            "functional map does not match the eigenvalue counts");
    PairDifference d;
    d.kind = kind;
    d.base_id = map.source_id;
    d.other_id = map.target_id;
    if (kind == DifferenceKind::Area) {
        d.matrix = c.transpose() * c;
        return d;
    }
    const double tau = 1e-8 * std::max(0.0, lambda_src.maxCoeff());
    const Vec inv = pinv_diagonal(lambda_src, tau);
    d.matrix = inv.asDiagonal() * (c.transpose() * lambda_tgt.asDiagonal() * c);
    for (Index i = 0; i < lambda_src.size(); ++i) {
        if (std::abs(lambda_src(i)) <= tau) {
            d.matrix.row(i).setZero();
            d.matrix.col(i).setZero();
            d.matrix(i, i) = 1.0;
        }
    }
    return d;
}

}  // namespace lsd
