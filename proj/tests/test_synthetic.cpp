#include <numbers>

#include "common.hpp"

using namespace lsd;
using namespace lsd::test;

TEST(Icosphere, CountsAndUnitRadius)
{
    const std::vector<std::pair<int, int>> expected{{12, 20}, {42, 80}, {162, 320}, {642, 1280}};
    for (int s = 0; s < 4; ++s) {
        const Mesh m = synthetic::icosphere(s);
        EXPECT_EQ(m.num_vertices(), expected[s].first);
        EXPECT_EQ(m.num_triangles(), expected[s].second);
        EXPECT_LE((m.vertices.rowwise().norm().array() - 1.0).abs().maxCoeff(), 1e-12);
        EXPECT_NO_THROW(validate_mesh(m));
    }
}

TEST(Families, Deterministic)
{
    const auto a = synthetic::two_cluster_family();
    const auto b = synthetic::two_cluster_family();
    ASSERT_EQ(a.meshes.size(), b.meshes.size());
    for (std::size_t i = 0; i < a.meshes.size(); ++i) {
        EXPECT_EQ(a.meshes[i].vertices, b.meshes[i].vertices);
    }
    const auto c = synthetic::perturbation_family();
    const auto d = synthetic::perturbation_family();
    EXPECT_EQ(c.meshes.back().vertices, d.meshes.back().vertices);
    synthetic::PerturbationOptions other;
    other.seed = 2;
    EXPECT_NE(synthetic::perturbation_family(other).meshes[0].vertices, c.meshes[0].vertices);
}

TEST(Families, SharedConnectivity)
{
    for (const auto& fam : {synthetic::sphere_bump_family(), synthetic::chain_family(5, true),
                            synthetic::two_cluster_family(), synthetic::perturbation_family()}) {
        for (const auto& m : fam.meshes) {
            EXPECT_EQ(m.triangles, fam.meshes.front().triangles);
            EXPECT_NO_THROW(validate_mesh(m));
        }
    }
}

TEST(SphereBump, ZeroHeightsGiveIdenticalMeshes)
{
    synthetic::SphereBumpOptions opts;
    opts.horizontal_height = 0.0;
    opts.vertical_heights = {0.0, 0.0};
    opts.subdivisions = 2;
    const auto fam = synthetic::sphere_bump_family(opts);
    ASSERT_EQ(fam.meshes.size(), 4u);
    for (const auto& m : fam.meshes) {
        EXPECT_EQ(m.vertices, fam.meshes.front().vertices);
    }
}

TEST(SphereBump, IdsLabelsRegions)
{
    const auto fam = synthetic::sphere_bump_family();
    std::vector<std::string> ids;
    for (const auto& m : fam.meshes) {
        ids.push_back(m.shape_id);
    }
    EXPECT_EQ(ids, (std::vector<std::string>{"sphere_A0", "sphere_A1", "sphere_B0", "sphere_B1"}));
    EXPECT_EQ(fam.labels, (std::vector<int>{0, 0, 1, 1}));
    const auto& h = fam.regions.at("horizontal");
    const auto& v = fam.regions.at("vertical");
    EXPECT_FALSE(h.empty());
    EXPECT_FALSE(v.empty());
    for (int x : h) {
        EXPECT_EQ(std::count(v.begin(), v.end(), x), 0);
    }
}

TEST(Chain, CycleClosesAndRampIsMonotone)
{
    const auto cyc = synthetic::chain_family(23, true);
    ASSERT_EQ(cyc.meshes.size(), 23u);
    EXPECT_EQ(cyc.meshes[3].shape_id, "frame_03");
    EXPECT_NEAR(cyc.parameters[22] + 2.0 * std::numbers::pi / 23.0, 2.0 * std::numbers::pi, 1e-12);
    // Frames adjacent around the loop are closer than frames on opposite sides.
    const double wrap = (cyc.meshes[22].vertices - cyc.meshes[0].vertices).norm();
    const double across = (cyc.meshes[11].vertices - cyc.meshes[0].vertices).norm();
    EXPECT_LT(wrap, across);
    const auto ramp = synthetic::chain_family(6, false);
    for (int f = 1; f < 6; ++f) {
        EXPECT_GT(ramp.parameters[f], ramp.parameters[f - 1]);
        EXPECT_GT((ramp.meshes[f].vertices - ramp.meshes[0].vertices).norm(),
                  (ramp.meshes[f - 1].vertices - ramp.meshes[0].vertices).norm());
    }
    EXPECT_LSD_ERROR(synthetic::chain_family(2, true), ErrorCode::PreconditionViolation);
}

TEST(TwoCluster, PartitionAndPairing)
{
    const auto fam = synthetic::two_cluster_family();
    EXPECT_EQ(fam.partition.cluster_a, (std::vector<std::string>{"cat_0", "cat_1", "cat_2", "cat_3"}));
    EXPECT_EQ(fam.partition.cluster_b, (std::vector<std::string>{"dog_0", "dog_1", "dog_2", "dog_3"}));
    ASSERT_EQ(fam.pairing.size(), 4u);
    EXPECT_EQ(fam.pairing[2], std::make_pair(2, 6));
    EXPECT_LSD_ERROR(synthetic::two_cluster_family({1, 0.25, 0.6, 11, 2}), ErrorCode::PreconditionViolation);
}

TEST(TwoCluster, ZeroSpreadGivesEqualMembers)
{
    const auto fam = synthetic::two_cluster_family({3, 0.0, 0.6, 11, 2});
    EXPECT_EQ(fam.meshes[0].vertices, fam.meshes[2].vertices);
    EXPECT_EQ(fam.meshes[3].vertices, fam.meshes[5].vertices);
    EXPECT_NE(fam.meshes[0].vertices, fam.meshes[3].vertices);
}

TEST(Perturbation, CountPlusExtra)
{
    const auto fam = synthetic::perturbation_family();
    ASSERT_EQ(fam.meshes.size(), 4u);
    EXPECT_EQ(fam.meshes.back().shape_id, "shape_3");
    EXPECT_EQ(fam.labels, (std::vector<int>{0, 0, 0, 1}));
}

TEST(RigidRelabel, PermutationAndMotion)
{
    const Mesh m = synthetic::icosphere(1);
    const Eigen::Matrix3d rot = Eigen::AngleAxisd(0.7, Eigen::Vector3d::UnitZ()).toRotationMatrix();
    const Eigen::Vector3d t(1, 2, 3);
    const auto r = synthetic::rigid_relabel(m, rot, t, 4, "moved");
    EXPECT_EQ(r.mesh.shape_id, "moved");
    std::vector<int> sorted = r.new_index;
    std::sort(sorted.begin(), sorted.end());
    for (int v = 0; v < m.num_vertices(); ++v) {
        EXPECT_EQ(sorted[v], v);
        const Eigen::Vector3d expect = rot * m.vertices.row(v).transpose() + t;
        EXPECT_LE((r.mesh.vertices.row(r.new_index[v]).transpose() - expect).norm(), 1e-12);
    }
    const MetricMeasure a = metric_measure(m);
    const MetricMeasure b = metric_measure(r.mesh);
    EXPECT_NEAR(a.mass.sum(), b.mass.sum(), 1e-12);
}
