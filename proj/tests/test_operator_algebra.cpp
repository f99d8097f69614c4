#include "common.hpp"

using namespace lsd;
using namespace lsd::test;

namespace
{

Mat diag2(double a, double b) { return Eigen::Vector2d(a, b).asDiagonal(); }

}  // namespace

TEST(Analogy, DiagonalExample)
{
    const OperatorExpression e = analogy(diag2(2, 1), diag2(4, 1), diag2(3, 1));
    EXPECT_LE((e.result - diag2(6, 1)).norm(), 1e-14);
    EXPECT_EQ(e.recipe.formula, "analogy");
    EXPECT_EQ(e.recipe.inputs, (std::vector<std::string>{"A", "B", "C"}));
    EXPECT_NEAR(e.recipe.params.at("condition"), 2.0, 1e-12);
}

TEST(Analogy, IdentityAnchorsAndInverse)
{
    std::mt19937_64 rng(13);
    const Mat a = random_spd(rng, 5);
    const Mat b = random_spd(rng, 5);
    // A : A :: C : C and A : B :: A : B.
    EXPECT_LE((analogy(a, a, b).result - b).norm(), 1e-10 * b.norm());
    EXPECT_LE((analogy(a, b, a).result - b).norm(), 1e-10 * b.norm());
}

TEST(Analogy, IllConditioned)
{
    EXPECT_LSD_ERROR(analogy(diag2(1, 1e-12), diag2(1, 1), diag2(1, 1)), ErrorCode::IllConditioned);
    EXPECT_LSD_ERROR(analogy(diag2(1, 0), diag2(1, 1), diag2(1, 1)), ErrorCode::IllConditioned);
    AnalogyOptions loose;
    loose.max_condition = 1e13;
    EXPECT_NO_THROW(analogy(diag2(1, 1e-12), diag2(1, 1), diag2(1, 1), loose));
    EXPECT_LSD_ERROR(analogy(Mat::Identity(2, 2), Mat::Identity(3, 3), Mat::Identity(2, 2)),
                     ErrorCode::DimensionMismatch);
}

TEST(Interpolate, Midpoint)
{
    const OperatorExpression e = interpolate(Mat::Zero(3, 3), Mat::Identity(3, 3), 0.5);
    EXPECT_EQ(e.result, Mat(0.5 * Mat::Identity(3, 3)));
    EXPECT_EQ(e.recipe.params.at("t"), 0.5);
}

TEST(Interpolate, EndpointsExact)
{
    std::mt19937_64 rng(14);
    const Mat a = random_symmetric(rng, 4);
    const Mat b = random_symmetric(rng, 4);
    EXPECT_EQ(interpolate(a, b, 0.0).result, a);
    EXPECT_EQ(interpolate(a, b, 1.0).result, b);
    EXPECT_EQ(interpolate(a, a, 0.37).result, a);
    EXPECT_LSD_ERROR(interpolate(a, b, 1.5), ErrorCode::PreconditionViolation);
    EXPECT_LSD_ERROR(interpolate(a, b, -0.1), ErrorCode::PreconditionViolation);
}

TEST(Interpolate, StaysPsd)
{
    std::mt19937_64 rng(15);
    for (int trial = 0; trial < 20; ++trial) {
        const Mat a = random_matrix(rng, 6, 3);
        const Mat pa = a * a.transpose();
        const Mat b = random_matrix(rng, 6, 6);
        const Mat pb = b * b.transpose();
        const double t = (trial + 0.5) / 20.0;
        EXPECT_GE(sym_eig(interpolate(pa, pb, t).result).values.minCoeff(), -1e-10 * pb.norm());
    }
}

TEST(PartialMix, ByHandExample)
{
    const ProjectionBasis f{Mat(Mat::Identity(2, 2).col(1)), "e2"};
    const OperatorExpression e = partial_mix(diag2(1, 4), diag2(1, 1), f);
    EXPECT_EQ(e.result, diag2(1, 1));
    EXPECT_EQ(e.recipe.params.at("p"), 1.0);
}

TEST(PartialMix, FullAndEmptyBases)
{
    std::mt19937_64 rng(16);
    const Mat a = random_symmetric(rng, 5);
    const Mat b = random_symmetric(rng, 5);
    const ProjectionBasis full{random_orthonormal(rng, 5, 5), "full"};
    EXPECT_LE((partial_mix(a, b, full).result - b).norm(), 1e-12);
    EXPECT_EQ(partial_mix(a, b, ProjectionBasis{Mat(5, 0), "empty"}).result, a);
    EXPECT_LSD_ERROR(partial_mix(a, b, ProjectionBasis{Mat::Ones(5, 2), "bad"}), ErrorCode::NonOrthonormalF);
}

TEST(PartialMix, LinearInOperands)
{
    std::mt19937_64 rng(17);
    const ProjectionBasis f{random_orthonormal(rng, 6, 2), "f"};
    const Mat a1 = random_symmetric(rng, 6);
    const Mat a2 = random_symmetric(rng, 6);
    const Mat b1 = random_symmetric(rng, 6);
    const Mat b2 = random_symmetric(rng, 6);
    const Mat lhs = partial_mix(2.0 * a1 + a2, 2.0 * b1 + b2, f).result;
    const Mat rhs = 2.0 * partial_mix(a1, b1, f).result + partial_mix(a2, b2, f).result;
    EXPECT_LE((lhs - rhs).norm(), 1e-12);
}

TEST(LocalizedBasis, WholeShapeLeadsWithConstant)
{
    const Mesh base = synthetic::perturbation_family().meshes[0];
    std::vector<Mesh> copies(3, base);
    for (int i = 0; i < 3; ++i) {
        copies[i].shape_id = "copy" + std::to_string(i);
    }
    const auto sh = spectra_of(copies, 20);
    const LatentPipeline p = run_latent_pipeline(identity_network(sh), 15);
    std::vector<int> all(static_cast<std::size_t>(base.num_vertices()));
    std::iota(all.begin(), all.end(), 0);
    const ProjectionBasis f = localized_basis(p.canonical.clb, "copy1", sh[1].basis.eigenvectors, sh[1].mm.mass, all);
    EXPECT_EQ(f.f.cols(), 10);
    EXPECT_TRUE(has_orthonormal_columns(f.f, 1e-10));
    EXPECT_GE(std::abs(f.f(0, 0)), 0.9);
}

TEST(LocalizedBasis, Errors)
{
    const auto sh = spectra_of(synthetic::perturbation_family().meshes, 10);
    const LatentPipeline p = run_latent_pipeline(identity_network(sh), 8);
    const Mat& phi = sh[0].basis.eigenvectors;
    const Vec& mass = sh[0].mm.mass;
    EXPECT_LSD_ERROR(localized_basis(p.canonical.clb, "shape_0", phi, mass, {}), ErrorCode::EmptyRegion);
    EXPECT_LSD_ERROR(localized_basis(p.canonical.clb, "shape_0", phi, mass, {0, 100000}), ErrorCode::IndexOutOfRange);
    EXPECT_LSD_ERROR(localized_basis(p.canonical.clb, "nope", phi, mass, {0}), ErrorCode::UnknownShape);
    EXPECT_LSD_ERROR(localized_basis(p.canonical.clb, "shape_0", phi, mass, {0, 1}, 9), ErrorCode::PreconditionViolation);
    // A single vertex spans one latent direction only.
    EXPECT_LSD_ERROR(localized_basis(p.canonical.clb, "shape_0", phi, mass, {5}, 2), ErrorCode::PreconditionViolation);
}

TEST(LocalizedBasis, DisjointRegionsNearlyOrthogonal)
{
    const synthetic::Family fam = synthetic::sphere_bump_family();
    const auto sh = spectra_of(fam.meshes, 120);
    const LatentPipeline p = run_latent_pipeline(identity_network(sh), 100);
    const auto& horizontal = fam.regions.at("horizontal");
    const auto& vertical = fam.regions.at("vertical");
    double worst = 0.0;
    for (std::size_t s = 0; s < sh.size(); ++s) {
        const auto& id = sh[s].shape_id;
        const Mat& phi = sh[s].basis.eigenvectors;
        const Mat fh = localized_basis(p.canonical.clb, id, phi, sh[s].mm.mass, horizontal).f;
        const Mat fv = localized_basis(p.canonical.clb, id, phi, sh[s].mm.mass, vertical).f;
        Eigen::JacobiSVD<Mat> svd(fh.transpose() * fv);
        worst = std::max(worst, svd.singularValues()(0));
    }
    EXPECT_LE(worst, 0.3);
}

TEST(SpectrumDescriptor, IdentityAndOrdering)
{
    const SpectrumDescriptor d = lssd_spectrum_descriptor(Mat::Identity(4, 4));
    EXPECT_EQ(d.values, Vec::Ones(4));
    EXPECT_FALSE(d.symmetrized);
    Mat skewed(2, 2);
    skewed << 3.0, 2.0, 0.0, 1.0;
    const SpectrumDescriptor c = lssd_spectrum_descriptor(skewed, DifferenceKind::Conformal);
    EXPECT_TRUE(c.symmetrized);
    // Symmetric part [[3, 1], [1, 1]] has eigenvalues 2 -+ sqrt(2).
    EXPECT_NEAR(c.values(0), 2.0 - std::sqrt(2.0), 1e-12);
    EXPECT_NEAR(c.values(1), 2.0 + std::sqrt(2.0), 1e-12);
}

TEST(NearestNeighborPairing, PicksClosest)
{
    const std::vector<Vec> from{Vec::Constant(2, 0.0), Vec::Constant(2, 5.0)};
    const std::vector<Vec> to{Vec::Constant(2, 4.0), Vec::Constant(2, 0.5), Vec::Constant(2, 9.0)};
    EXPECT_EQ(nearest_neighbor_pairing(from, to), (std::vector<int>{1, 0}));
}
