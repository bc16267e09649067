#include <gtest/gtest.h>

#include <atomic>
#include <numeric>
#include <set>

#include "scs/numeric.hpp"
#include "scs/parallel.hpp"
#include "scs/rng.hpp"

using namespace scs;

TEST(Rng, SameSeedSameStream) {
    SeededRng a(42), b(42);
    for (int i = 0; i < 100; ++i) {
        EXPECT_EQ(a.normal(), b.normal());
        EXPECT_EQ(a.below(17), b.below(17));
    }
}

TEST(Rng, DerivedSeedsAreXorOfMix) {
    const SeededRng root(123);
    EXPECT_EQ(root.derive(5).seed(), 123ULL ^ mix64(5));
    EXPECT_NE(root.derive(0).seed(), root.derive(1).seed());
    std::set<std::uint64_t> seeds;
    for (std::uint64_t i = 0; i < 1000; ++i) seeds.insert(root.derive(i).seed());
    EXPECT_EQ(seeds.size(), 1000u);
}

TEST(Rng, BelowStaysInRange) {
    SeededRng r(9);
    for (int i = 0; i < 1000; ++i) EXPECT_LT(r.below(7), 7u);
}

TEST(Rng, CoinIsRoughlyFair) {
    SeededRng r(10);
    int heads = 0;
    for (int i = 0; i < 20000; ++i) heads += r.coin() ? 1 : 0;
    EXPECT_NEAR(heads / 20000.0, 0.5, 0.02);
}

TEST(CompensatedSum, RecoversCancelledTerms) {
    // Naive double summation returns 0 here.
    const std::vector<double> v{1.0, 1e100, 1.0, -1e100};
    EXPECT_EQ(compensated_sum(v), 2.0);
}

TEST(MeanEstimate, MatchesTextbookFormula) {
    const std::vector<double> v{1, 2, 3, 4};
    const MeanEstimate e = mean_estimate(v);
    EXPECT_DOUBLE_EQ(e.mean, 2.5);
    // sample variance 5/3, stderr sqrt(5/3/4)
    EXPECT_NEAR(e.stderr_, std::sqrt(5.0 / 12.0), 1e-15);
    EXPECT_EQ(e.count, 4u);
}

TEST(SymmetricEigen, SortedDescendingAndReconstructs) {
    Eigen::MatrixXd a(3, 3);
    a << 2, 1, 0, 1, 3, 1, 0, 1, 4;
    const SymmetricEigen e = symmetric_eigen(a);
    EXPECT_GE(e.values(0), e.values(1));
    EXPECT_GE(e.values(1), e.values(2));
    const Eigen::MatrixXd back = e.vectors * e.values.asDiagonal() * e.vectors.transpose();
    EXPECT_LT((back - a).cwiseAbs().maxCoeff(), 1e-12);
    EXPECT_LT(orthonormality_error(e.vectors), 1e-12);
}

TEST(SymmetricEigen, ClampsTinyNegativesAndRejectsLargeOnes) {
    Eigen::MatrixXd tiny = Eigen::MatrixXd::Zero(2, 2);
    tiny(0, 0) = 1.0;
    tiny(1, 1) = -1e-13;
    const SymmetricEigen e = symmetric_eigen(tiny);
    EXPECT_EQ(e.values(1), 0.0);

    Eigen::MatrixXd bad = Eigen::MatrixXd::Zero(2, 2);
    bad(0, 0) = 1.0;
    bad(1, 1) = -1e-3;
    EXPECT_THROW(symmetric_eigen(bad), NumericError);
    EXPECT_THROW(symmetric_eigen(Eigen::MatrixXd::Zero(2, 3)), ArgumentError);
}

TEST(ParallelFor, VisitsEveryIndexOnce) {
    for (unsigned threads : {1u, 3u, 8u}) {
        std::vector<std::atomic<int>> hits(1000);
        parallel_for(hits.size(), Parallelism{threads}, [&](std::size_t i) { hits[i]++; });
        for (const auto& h : hits) EXPECT_EQ(h.load(), 1);
    }
}

TEST(ParallelFor, RethrowsWorkerException) {
    EXPECT_THROW(parallel_for(100, Parallelism{4},
                              [](std::size_t i) {
                                  if (i == 37) throw std::runtime_error("boom");
                              }),
                 std::runtime_error);
}
