#include "common.hpp"

using namespace lsd;
using namespace lsd::test;

namespace
{

/// Network whose maps C_ij = R_j R_i^T are exactly cycle-consistent.
FMNetwork rotated_network(std::mt19937_64& rng, const Vec& lambda, int n)
{
    FMNetwork net = identical_network(lambda, n);
    std::vector<Mat> r;
    for (int i = 0; i < n; ++i) {
        r.push_back(random_orthonormal(rng, lambda.size(), lambda.size()));
    }
    for (auto& [key, fm] : net.maps) {
        fm.matrix = r[key.second] * r[key.first].transpose();
    }
    return net;
}

std::vector<ShapeSpectra> small_family(int count, Index k)
{
    synthetic::PerturbationOptions po;
    po.count = count;
    return spectra_of(synthetic::perturbation_family(po).meshes, k);
}

}  // namespace

TEST(ConsistentLatentBasis, IdenticalShapesShareSpectrum)
{
    Vec lambda(5);
    lambda << 0.0, 1.0, 2.5, 4.0, 7.0;
    const int n = 4;
    const LatentPipeline p = run_latent_pipeline(identical_network(lambda, n), 5);
    for (const auto& yi : p.canonical.clb.y) {
        EXPECT_LE((yi.transpose() * yi - Mat::Identity(5, 5) / n).cwiseAbs().maxCoeff(), 1e-10);
    }
    EXPECT_LE((p.canonical.latent.spectrum - lambda).cwiseAbs().maxCoeff(), 1e-10);
    for (const auto& d : p.area) {
        EXPECT_LE((d.matrix - Mat::Identity(5, 5) / n).cwiseAbs().maxCoeff(), 1e-10);
    }
    for (const auto& d : p.conformal) {
        EXPECT_LE((d.matrix - Mat::Identity(5, 5) / n).cwiseAbs().maxCoeff(), 1e-10);
    }
    const LatentPipeline norm = run_latent_pipeline(identical_network(lambda, n), 5, true);
    for (const auto& d : norm.area) {
        EXPECT_LE((d.matrix - Mat::Identity(5, 5)).cwiseAbs().maxCoeff(), 1e-10);
        EXPECT_TRUE(d.normalized);
    }
}

TEST(ConsistentLatentBasis, SingleShapeIsOrthonormal)
{
    FMNetwork net;
    net.ids = {"only"};
    net.spectra = {Vec::LinSpaced(6, 0.0, 5.0)};
    const ConsistentLatentBasis clb = consistent_latent_basis(net, 4);
    ASSERT_EQ(clb.y.size(), 1u);
    EXPECT_LE((clb.y[0].transpose() * clb.y[0] - Mat::Identity(4, 4)).cwiseAbs().maxCoeff(), 1e-12);
}

TEST(ConsistentLatentBasis, ConsistentMapsHaveZeroResidual)
{
    std::mt19937_64 rng(21);
    const FMNetwork net = rotated_network(rng, Vec::LinSpaced(8, 0.0, 7.0), 3);
    const ConsistentLatentBasis clb = consistent_latent_basis(net, 5);
    EXPECT_LE(clb.consistency_residual, 1e-8);
    EXPECT_LE((clb.gram() - Mat::Identity(5, 5)).cwiseAbs().maxCoeff(), 1e-10);
}

TEST(ConsistentLatentBasis, ResidualIsSmallestEnergy)
{
    // The objective at the minimizer equals the sum of the m lowest eigenvalues of W.
    const auto sh = small_family(2, 10);
    const FMNetwork net = identity_network(sh);
    const ConsistentLatentBasis clb = consistent_latent_basis(net, 6);
    EXPECT_NEAR(clb.consistency_residual, clb.energy_spectrum.head(6).sum(), 1e-9);
    EXPECT_EQ(clb.energy_spectrum.size(), 7);
}

TEST(ConsistentLatentBasis, DimensionBounds)
{
    const FMNetwork net = identical_network(Vec::LinSpaced(4, 0.0, 3.0), 2);
    EXPECT_LSD_ERROR(consistent_latent_basis(net, 0), ErrorCode::PreconditionViolation);
    EXPECT_LSD_ERROR(consistent_latent_basis(net, 5), ErrorCode::PreconditionViolation);
}

TEST(ConsistentLatentBasis, GapWarning)
{
    const FMNetwork net = identical_network(Vec::LinSpaced(4, 0.0, 3.0), 3);
    const ConsistentLatentBasis clb = consistent_latent_basis(net, 2);
    ASSERT_FALSE(clb.warnings.empty());
    EXPECT_NE(clb.warnings[0].find("SpectralGapWarning"), std::string::npos);
}

TEST(Canonicalize, MetricDiagonalAndAreaSumsToIdentity)
{
    const auto sh = small_family(3, 15);
    const FMNetwork net = identity_network(sh);
    const LatentPipeline p = run_latent_pipeline(net, 10);
    const Mat metric = p.canonical.clb.metric(net.spectra);
    const Mat off = metric - Mat(metric.diagonal().asDiagonal());
    EXPECT_LE(off.cwiseAbs().maxCoeff(), 1e-9 * metric.norm());
    EXPECT_LE((metric.diagonal() - p.canonical.latent.spectrum).cwiseAbs().maxCoeff(), 1e-9 * metric.norm());
    Mat sum = Mat::Zero(10, 10);
    for (const auto& d : p.area) {
        sum += d.matrix;
    }
    EXPECT_LE((sum - Mat::Identity(10, 10)).cwiseAbs().maxCoeff(), 1e-9);
    const Mat u = p.canonical.rotation;
    EXPECT_LE((u.transpose() * u - Mat::Identity(10, 10)).cwiseAbs().maxCoeff(), 1e-10);
    EXPECT_EQ(p.canonical.latent.collection_size, 4);
}

TEST(Canonicalize, MatchesMeanOperatorSpectrum)
{
    synthetic::PerturbationOptions po;
    po.count = 2;
    po.subdivisions = 1;
    const auto sh = spectra_of(synthetic::perturbation_family(po).meshes, -1);
    const Index k = sh[0].basis.k();
    MetricMeasure mean{sh[0].mm.stiffness, sh[0].mm.mass};
    for (std::size_t i = 1; i < sh.size(); ++i) {
        mean.stiffness += sh[i].mm.stiffness;
        mean.mass += sh[i].mm.mass;
    }
    mean.stiffness /= static_cast<double>(sh.size());
    mean.mass /= static_cast<double>(sh.size());
    const SpectralBasis oracle = eigenbasis(mean, k);
    const LatentPipeline p = run_latent_pipeline(identity_network(sh), k);
    EXPECT_LE((p.canonical.latent.spectrum - oracle.eigenvalues).cwiseAbs().maxCoeff(),
              1e-8 * oracle.eigenvalues.maxCoeff());
}

TEST(LatentDifferences, RequireCanonical)
{
    const FMNetwork net = identical_network(Vec::LinSpaced(4, 0.0, 3.0), 2);
    const ConsistentLatentBasis clb = consistent_latent_basis(net, 4);
    LatentShape latent;
    latent.spectrum = Vec::LinSpaced(4, 0.0, 3.0);
    latent.collection_size = 2;
    EXPECT_LSD_ERROR(latent_differences(clb, net.spectra, latent, DifferenceKind::Area), ErrorCode::RequiresCanonical);
}

TEST(LatentDifferences, AreaPsdAndDistinctShapesDistinct)
{
    const auto sh = small_family(3, 20);
    const LatentPipeline p = run_latent_pipeline(identity_network(sh), 12);
    for (const auto& d : p.area) {
        EXPECT_GE(sym_eig(d.matrix).values.minCoeff(), -1e-10);
    }
    for (std::size_t i = 0; i < p.area.size(); ++i) {
        for (std::size_t j = i + 1; j < p.area.size(); ++j) {
            EXPECT_GE((p.area[i].matrix - p.area[j].matrix).norm(), 1e-3) << i << " " << j;
        }
    }
}

TEST(LatentDifferences, ConformalZeroMode)
{
    const auto sh = small_family(2, 10);
    const LatentPipeline p = run_latent_pipeline(identity_network(sh), 6);
    ASSERT_NEAR(p.canonical.latent.spectrum(0), 0.0, 1e-8);
    for (const auto& d : p.conformal) {
        EXPECT_DOUBLE_EQ(d.matrix(0, 0), 1.0 / 3.0);
        EXPECT_EQ(d.matrix.row(0).tail(5).cwiseAbs().maxCoeff(), 0.0);
    }
}

TEST(ExtendToShape, DuplicateReproducesMember)
{
    const auto sh = small_family(2, 12);
    const FMNetwork net = identity_network(sh);
    const LatentPipeline p = run_latent_pipeline(net, 8);
    std::vector<Vec> dnas;
    for (const auto& s : sh) {
        dnas.push_back(shape_dna(s.basis).spectrum_prefix);
    }
    const ShapeSpectra& dup = sh[1];
    const ExtendResult r = extend_to_shape(
        p.canonical.clb, p.canonical.latent, dnas, dnas[1], dup.basis.eigenvalues,
        [&](int i) { return fmap_from_correspondence(sh[i], dup, identity_correspondence(162)); });
    EXPECT_EQ(r.neighbor, 1);
    EXPECT_LE((r.area.matrix - p.area[1].matrix).cwiseAbs().maxCoeff(), 1e-9);
    EXPECT_LE((r.conformal.matrix - p.conformal[1].matrix).cwiseAbs().maxCoeff(), 1e-9);
    EXPECT_LSD_ERROR(extend_to_shape(p.raw, p.canonical.latent, dnas, dnas[1], dup.basis.eigenvalues,
                                     [&](int) { return FunctionalMap{}; }),
                     ErrorCode::RequiresCanonical);
    EXPECT_LSD_ERROR(extend_to_shape(p.canonical.clb, p.canonical.latent, dnas, dnas[1], dup.basis.eigenvalues,
                                     [&](int) -> FunctionalMap { throw std::runtime_error("boom"); }),
                     ErrorCode::ProviderFailure);
}

TEST(NearestByDna, LowerIndexWinsTies)
{
    std::vector<Vec> dnas{Vec::Constant(3, 1.0), Vec::Constant(3, 2.0), Vec::Constant(3, 1.0)};
    EXPECT_EQ(nearest_by_dna(dnas, Vec::Constant(3, 1.1)), 0);
    EXPECT_EQ(nearest_by_dna(dnas, Vec::Constant(3, 1.9)), 1);
}

TEST(StabilityProbe, DuplicateMemberKeepsCanonicalBasis)
{
    synthetic::PerturbationOptions po;
    po.count = 3;
    auto meshes = synthetic::perturbation_family(po).meshes;
    meshes.back() = meshes.front();
    meshes.back().shape_id = "dup";
    const FMNetwork net = identity_network(spectra_of(meshes, 20));
    const StabilityReport r = stability_probe(net, 12);
    EXPECT_GE(r.ratio_canonical, 0.99);
    EXPECT_LSD_ERROR(stability_probe(identical_network(Vec::LinSpaced(3, 0, 2), 1), 2), ErrorCode::InsufficientShapes);
}

TEST(DiagonalDominance, Values)
{
    EXPECT_DOUBLE_EQ(diagonal_dominance(Mat::Identity(3, 3)), 1.0);
    EXPECT_DOUBLE_EQ(diagonal_dominance(Mat::Ones(2, 2)), 0.5);
    EXPECT_DOUBLE_EQ(diagonal_dominance(Mat::Zero(2, 2)), 0.0);
}
