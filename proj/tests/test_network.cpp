#include "common.hpp"

using namespace lsd;
using namespace lsd::test;

namespace
{

std::vector<Vec> scalar_dnas(const std::vector<double>& values)
{
    std::vector<Vec> out;
    for (double v : values) {
        Vec d(2);
        d << 0.0, v;
        out.push_back(d);
    }
    return out;
}

FunctionalMap identity_provider_map(const FMNetwork& shell, int i, int j)
{
    const Index k = shell.spectra[i].size();
    return {Mat::Identity(k, k), shell.ids[i], shell.ids[j]};
}

}  // namespace

TEST(BuildTopology, TwoShapesSingleEdge)
{
    for (auto kind : {TopologyKind::Mst, TopologyKind::Clique, TopologyKind::Chain, TopologyKind::Knn}) {
        const Topology t = build_topology(scalar_dnas({0.0, 1.0}), {kind, 3, {}});
        ASSERT_EQ(t.edges.size(), 1u);
        EXPECT_EQ(t.edges[0], std::make_pair(0, 1));
        EXPECT_EQ(t.directed().size(), 2u);
    }
}

TEST(BuildTopology, CollinearMstIsSortedPath)
{
    const Topology t = build_topology(scalar_dnas({3.0, 0.0, 4.0, 1.0, 2.0}), {TopologyKind::Mst, 10, {}});
    // Sorted order of values: 1 (0.0), 3 (1.0), 4 (2.0), 0 (3.0), 2 (4.0).
    const std::vector<std::pair<int, int>> expected{{0, 2}, {0, 4}, {1, 3}, {3, 4}};
    EXPECT_EQ(t.edges, expected);
}

TEST(BuildTopology, CliqueAndChainCounts)
{
    std::vector<double> five{0, 1, 2, 3, 4};
    EXPECT_EQ(build_topology(scalar_dnas(five), {TopologyKind::Clique, 10, {}}).directed().size(), 20u);
    std::vector<double> many(23);
    std::iota(many.begin(), many.end(), 0.0);
    const Topology chain = build_topology(scalar_dnas(many), {TopologyKind::Chain, 10, {}});
    EXPECT_EQ(chain.directed().size(), 44u);
    const Topology ordered = build_topology(scalar_dnas({0, 1, 2}), {TopologyKind::Chain, 10, {2, 0, 1}});
    const std::vector<std::pair<int, int>> expected{{0, 1}, {0, 2}};
    EXPECT_EQ(ordered.edges, expected);
    EXPECT_LSD_ERROR(build_topology(scalar_dnas({0, 1, 2}), {TopologyKind::Chain, 10, {0, 0, 1}}),
                     ErrorCode::PreconditionViolation);
}

TEST(BuildTopology, KnnSaturationNoted)
{
    const Topology t = build_topology(scalar_dnas({0, 1, 2, 3}), {TopologyKind::Knn, 10, {}});
    EXPECT_EQ(t.edges.size(), 6u);
    ASSERT_EQ(t.notes.size(), 1u);
    EXPECT_NE(t.notes[0].find("saturates"), std::string::npos);
}

TEST(BuildTopology, DisconnectedKnnIsRepaired)
{
    const Topology t = build_topology(scalar_dnas({0.0, 0.1, 100.0, 100.1}), {TopologyKind::Knn, 1, {}});
    EXPECT_EQ(t.edges.size(), 3u);
    EXPECT_TRUE(detail::is_connected(4, t.edges));
    ASSERT_EQ(t.notes.size(), 1u);
    EXPECT_NE(t.notes[0].find("disconnected"), std::string::npos);
}

TEST(BuildTopology, Errors)
{
    EXPECT_LSD_ERROR(build_topology(scalar_dnas({1.0}), {}), ErrorCode::InsufficientShapes);
    std::vector<Vec> mixed = scalar_dnas({0, 1});
    mixed[1] = Vec::Zero(3);
    EXPECT_LSD_ERROR(build_topology(mixed, {}), ErrorCode::DimensionMismatch);
}

TEST(AttachMaps, ProviderFailureNamesEdge)
{
    FMNetwork shell = identical_network(Vec::LinSpaced(3, 0, 2), 3);
    const Topology t = build_topology(scalar_dnas({0, 1, 2}), {TopologyKind::Clique, 10, {}});
    try {
        attach_maps(shell.ids, shell.spectra, t, [&](int i, int j) {
            if (i == 1 && j == 2) {
                throw std::runtime_error("no correspondence");
            }
            return identity_provider_map(shell, i, j);
        });
        FAIL() << "expected ProviderFailure";
    } catch (const Error& e) {
        EXPECT_EQ(e.code(), ErrorCode::ProviderFailure);
        EXPECT_NE(std::string(e.what()).find("s1->s2"), std::string::npos) << e.what();
    }
}

TEST(AttachMaps, BothDirectionsQueried)
{
    FMNetwork shell = identical_network(Vec::LinSpaced(3, 0, 2), 4);
    const Topology t = build_topology(scalar_dnas({0, 1, 2, 3}), {TopologyKind::Chain, 10, {}});
    std::vector<std::pair<int, int>> calls;
    const FMNetwork net = attach_maps(shell.ids, shell.spectra, t, [&](int i, int j) {
        calls.emplace_back(i, j);
        return identity_provider_map(shell, i, j);
    });
    EXPECT_EQ(calls.size(), 6u);
    EXPECT_EQ(net.maps.size(), 6u);
    EXPECT_EQ(net.neighbors(1), (std::vector<int>{0, 2}));
    EXPECT_EQ(net.index_of("s3"), 3);
    EXPECT_LSD_ERROR(static_cast<void>(net.index_of("zz")), ErrorCode::UnknownShape);
}

TEST(Validate, RejectsAsymmetricAndMisSized)
{
    FMNetwork net = identical_network(Vec::LinSpaced(3, 0, 2), 3);
    FMNetwork missing = net;
    missing.maps.erase({2, 1});
    EXPECT_LSD_ERROR(missing.validate(), ErrorCode::PreconditionViolation);
    FMNetwork sized = net;
    sized.maps.at({0, 1}).matrix = Mat::Identity(2, 3);
    EXPECT_LSD_ERROR(sized.validate(), ErrorCode::DimensionMismatch);
    FMNetwork split = identical_network(Vec::LinSpaced(3, 0, 2), 4);
    for (auto key : std::vector<std::pair<int, int>>{{0, 2}, {2, 0}, {0, 3}, {3, 0}, {1, 2}, {2, 1}, {1, 3}, {3, 1}}) {
        split.maps.erase(key);
    }
    EXPECT_LSD_ERROR(split.validate(), ErrorCode::PreconditionViolation);
}

TEST(Consistency, IdentityMapsHaveZeroResidual)
{
    const FMNetwork net = identical_network(Vec::LinSpaced(5, 0, 4), 4);
    const ConsistencyReport r = consistency_report(net);
    // Clique of 4: 6 edges, spanning tree of 3, so 3 fundamental cycles.
    EXPECT_EQ(r.cycles.size(), 3u);
    EXPECT_EQ(r.max, 0.0);
    EXPECT_EQ(r.min, 0.0);
}

TEST(Consistency, TreeHasNoCycles)
{
    FMNetwork net = identical_network(Vec::LinSpaced(3, 0, 2), 3);
    net.maps.erase({0, 2});
    net.maps.erase({2, 0});
    EXPECT_TRUE(consistency_report(net).cycles.empty());
}

TEST(Consistency, CorruptedEdgeDetected)
{
    FMNetwork net = identical_network(Vec::LinSpaced(4, 0, 3), 3);
    Mat rot = Mat::Identity(4, 4);
    const double a = 0.3;
    rot.block(1, 1, 2, 2) << std::cos(a), -std::sin(a), std::sin(a), std::cos(a);
    net.maps.at({1, 2}).matrix = rot;
    net.maps.at({2, 1}).matrix = rot.transpose();
    const ConsistencyReport r = consistency_report(net);
    ASSERT_EQ(r.cycles.size(), 1u);
    // ||R - I||_F for a plane rotation by a is 2 sqrt(2) sin(a/2).
    EXPECT_NEAR(r.max, 2.0 * std::sqrt(2.0) * std::sin(a / 2), 1e-12);
    EXPECT_GE(r.max, 0.05);
}

TEST(Consistency, IdentityCorrespondenceNetworkOnMeshes)
{
    synthetic::PerturbationOptions po;
    po.count = 2;
    const auto sh = spectra_of(synthetic::perturbation_family(po).meshes, 12);
    const ConsistencyReport r = consistency_report(identity_network(sh));
    EXPECT_EQ(r.cycles.size(), 1u);
    EXPECT_LT(r.max, 1.0);
}
