#include "common.hpp"

using namespace lsd;
using namespace lsd::test;

TEST(SymEig, MatchesIndependentSolver)
{
    std::mt19937_64 rng(1);
    for (Index n : {1, 7, 40, 150}) {
        const Mat a = random_symmetric(rng, n);
        const SymEig e = sym_eig(a);
        Eigen::SelfAdjointEigenSolver<Mat> oracle(a);
        EXPECT_LE((e.values - oracle.eigenvalues()).cwiseAbs().maxCoeff(), 1e-10);
        EXPECT_LE((e.vectors.transpose() * e.vectors - Mat::Identity(n, n)).cwiseAbs().maxCoeff(), 1e-10);
        EXPECT_LE((a * e.vectors - e.vectors * e.values.asDiagonal()).norm(), 1e-9 * std::max(1.0, a.norm()));
    }
}

TEST(SymEig, RejectsNonSquare) { EXPECT_LSD_ERROR(sym_eig(Mat::Zero(2, 3)), ErrorCode::DimensionMismatch); }

TEST(SymEig, SmallestAndLargestAreSlices)
{
    std::mt19937_64 rng(2);
    const Mat a = random_symmetric(rng, 12);
    const SymEig all = sym_eig(a);
    const SymEig lo = sym_eig_smallest(a, 3);
    const SymEig hi = sym_eig_largest(a, 2);
    EXPECT_LE((lo.values - all.values.head(3)).cwiseAbs().maxCoeff(), 1e-12);
    ASSERT_EQ(hi.values.size(), 2);
    EXPECT_NEAR(hi.values(0), all.values(11), 1e-12);
    EXPECT_NEAR(hi.values(1), all.values(10), 1e-12);
}

TEST(ProbeDetectsCorruptEigenvectors, Yes)
{
    std::mt19937_64 rng(3);
    const Mat a = random_symmetric(rng, 20);
    SymEig e = detail::eigen_selfadjoint(a);
    EXPECT_TRUE(detail::plausible_eigendecomposition(a, e));
    e.vectors.col(3).swap(e.vectors.col(4));
    EXPECT_FALSE(detail::plausible_eigendecomposition(a, e));
}

TEST(FixColumnSigns, LargestMagnitudePositive)
{
    Mat m(3, 2);
    m << 0.1, 0.5, -0.9, -0.2, 0.3, -0.7;
    fix_column_signs(m);
    EXPECT_GT(m(1, 0), 0.0);
    EXPECT_GT(m(2, 1), 0.0);
    EXPECT_DOUBLE_EQ(m(0, 0), -0.1);
}

TEST(EigenClusters, GroupsCloseRuns)
{
    Vec v(6);
    v << 0.0, 1.0, 1.0 + 1e-12, 1.0 + 2e-12, 2.0, 3.0;
    const auto c = eigen_clusters(v, 1e-8);
    ASSERT_EQ(c.size(), 1u);
    EXPECT_EQ(c[0].begin, 1);
    EXPECT_EQ(c[0].end, 4);
}

TEST(PseudoInverse, MoorePenroseConditions)
{
    std::mt19937_64 rng(4);
    const Mat a = random_matrix(rng, 8, 5) * random_matrix(rng, 5, 6);
    const Mat p = pseudo_inverse(a);
    EXPECT_LE((a * p * a - a).norm(), 1e-10 * a.norm());
    EXPECT_LE((p * a * p - p).norm(), 1e-10 * p.norm());
    EXPECT_LE(((a * p).transpose() - a * p).norm(), 1e-10);
}

TEST(ConditionNumber, Diagonal)
{
    Vec d(3);
    d << 1.0, 10.0, 0.5;
    EXPECT_NEAR(condition_number(d.asDiagonal()), 20.0, 1e-12);
    EXPECT_TRUE(std::isinf(condition_number(Mat::Zero(2, 2))));
}
