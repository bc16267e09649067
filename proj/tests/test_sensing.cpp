#include <gtest/gtest.h>

#include <boost/math/distributions/chi_squared.hpp>

#include <algorithm>
#include <set>

#include "oracles.hpp"
#include "scs/sensing.hpp"

using namespace scs;

namespace {

Eigen::VectorXd random_unit(Eigen::Index n, SeededRng& rng) {
    Eigen::VectorXd x(n);
    for (Eigen::Index i = 0; i < n; ++i) x(i) = rng.normal();
    return x / x.norm();
}

}  // namespace

TEST(GaussianMatrix, OneByOneIsStandardNormalDraw) {
    SeededRng a(4), b(4);
    const SensingMatrix phi = gaussian_matrix(1, 1, a);
    EXPECT_EQ(phi.dense()(0, 0), b.normal());
    EXPECT_EQ(phi.kind(), SensingKind::GaussianIID);
}

TEST(GaussianMatrix, EntryVarianceIsOneOverM) {
    SeededRng rng(8);
    const Eigen::MatrixXd e = gaussian_matrix(64, 256, rng).dense();
    const double mean = e.mean();
    const double var = (e.array() - mean).square().sum() / static_cast<double>(e.size() - 1);
    EXPECT_NEAR(var, 1.0 / 64.0, 0.1 / 64.0);
}

TEST(GaussianMatrix, DeterministicAndValidated) {
    SeededRng a(99), b(99);
    EXPECT_EQ(gaussian_matrix(5, 9, a).dense(), gaussian_matrix(5, 9, b).dense());
    SeededRng r(1);
    EXPECT_THROW(gaussian_matrix(5, 4, r), ArgumentError);
    EXPECT_THROW(gaussian_matrix(0, 4, r), ArgumentError);
}

TEST(BernoulliMatrix, EntriesAndRowNorms) {
    SeededRng rng(2);
    const Eigen::MatrixXd e = bernoulli_matrix(16, 40, rng).dense();
    const double s = 1.0 / std::sqrt(16.0);
    for (Eigen::Index i = 0; i < e.size(); ++i) EXPECT_TRUE(e.data()[i] == s || e.data()[i] == -s);
    for (Eigen::Index r = 0; r < e.rows(); ++r) EXPECT_NEAR(e.row(r).norm(), std::sqrt(40.0) / 4.0, 1e-14);
    SeededRng r2(1);
    EXPECT_THROW(bernoulli_matrix(41, 40, r2), ArgumentError);
}

TEST(RandomMatrices, IsometryInExpectation) {
    for (int family = 0; family < 2; ++family) {
        SeededRng rng(1234 + family);
        const SensingMatrix phi = family == 0 ? gaussian_matrix(64, 256, rng) : bernoulli_matrix(64, 256, rng);
        SeededRng xs(5);
        double sum = 0.0;
        for (int t = 0; t < 10000; ++t) sum += phi.apply(random_unit(256, xs)).squaredNorm();
        const double mean = sum / 10000.0;
        EXPECT_GE(mean, 0.95) << "family " << family;
        EXPECT_LE(mean, 1.05) << "family " << family;
    }
}

TEST(RandomMatrices, ConcentrationTailMatchesChiSquare) {
    // With a fresh Gaussian matrix per vector, M |Phi x|^2 is chi-square with M degrees of freedom.
    const int m = 32, trials = 10000;
    const boost::math::chi_squared chi(m);
    const double p = boost::math::cdf(chi, 0.5 * m) + boost::math::cdf(boost::math::complement(chi, 1.5 * m));
    SeededRng rng(76);
    int outliers = 0;
    for (int t = 0; t < trials; ++t) {
        const SensingMatrix phi = gaussian_matrix(m, 128, rng);
        if (std::abs(phi.apply(random_unit(128, rng)).squaredNorm() - 1.0) > 0.5) ++outliers;
    }
    const double se = std::sqrt(p * (1 - p) / trials);
    EXPECT_NEAR(outliers / static_cast<double>(trials), p, 4 * se);
    EXPECT_GT(p, 0.01);  // the 1% bound needs more rows than 32
}

TEST(RandomMatrices, ConcentrationFractionBelowOnePercent) {
    for (int family = 0; family < 2; ++family) {
        SeededRng rng(77 + family);
        const SensingMatrix phi = family == 0 ? gaussian_matrix(64, 128, rng) : bernoulli_matrix(64, 128, rng);
        SeededRng xs(6);
        int outliers = 0;
        const int trials = 10000;
        for (int t = 0; t < trials; ++t)
            if (std::abs(phi.apply(random_unit(128, xs)).squaredNorm() - 1.0) > 0.5) ++outliers;
        EXPECT_LT(outliers, trials / 100) << "family " << family;
    }
}

TEST(SubsamplingMatrix, FullSizeIsPermutation) {
    SeededRng rng(3);
    const SensingMatrix phi = subsampling_matrix(10, 10, rng);
    const Eigen::MatrixXd p = phi.dense();
    EXPECT_EQ(p * p.transpose(), Eigen::MatrixXd::Identity(10, 10));
    EXPECT_EQ(p.transpose() * p, Eigen::MatrixXd::Identity(10, 10));
    EXPECT_EQ(p.sum(), 10.0);
}

TEST(SubsamplingMatrix, SelectionSemantics) {
    SeededRng rng(4);
    const SensingMatrix phi = subsampling_matrix(7, 20, rng);
    const Eigen::MatrixXd p = phi.dense();
    for (Eigen::Index r = 0; r < p.rows(); ++r) {
        EXPECT_EQ(p.row(r).sum(), 1.0);
        EXPECT_EQ((p.row(r).array() != 0.0).count(), 1);
    }
    const Eigen::VectorXd colsum = p.colwise().sum();
    for (Eigen::Index c = 0; c < colsum.size(); ++c) EXPECT_TRUE(colsum(c) == 0.0 || colsum(c) == 1.0);
    EXPECT_EQ(p.sum(), 7.0);

    Eigen::VectorXd x(20);
    for (Eigen::Index i = 0; i < 20; ++i) x(i) = 100.0 + static_cast<double>(i);
    const Eigen::VectorXd y = phi.apply(x);
    for (Eigen::Index r = 0; r < y.size(); ++r) EXPECT_NE(std::find(x.data(), x.data() + 20, y(r)), x.data() + 20);
    EXPECT_EQ(y, p * x);
    SeededRng r2(1);
    EXPECT_THROW(subsampling_matrix(21, 20, r2), ArgumentError);
}

TEST(SubsamplingMatrix, ColumnsUniformWithoutReplacement) {
    std::vector<int> counts(16, 0);
    for (std::uint64_t t = 0; t < 8000; ++t) {
        SeededRng rng = SeededRng(5).derive(t);
        const SensingMatrix phi = subsampling_matrix(4, 16, rng);
        std::set<Eigen::Index> distinct(phi.selected().begin(), phi.selected().end());
        EXPECT_EQ(distinct.size(), 4u);
        for (Eigen::Index c : phi.selected()) counts[static_cast<std::size_t>(c)]++;
    }
    // Each column expected 2000 times; 5 sigma is about 194.
    for (int c : counts) EXPECT_NEAR(c, 2000, 200);
}

TEST(SensingMatrix, StructuredProductsMatchDense) {
    SeededRng rng(6);
    const SensingMatrix sel = subsampling_matrix(5, 12, rng);
    const SensingMatrix gau = gaussian_matrix(5, 12, rng);
    Eigen::MatrixXd a(12, 7), b(3, 12);
    for (Eigen::Index i = 0; i < a.size(); ++i) a.data()[i] = rng.normal();
    for (Eigen::Index i = 0; i < b.size(); ++i) b.data()[i] = rng.normal();
    Eigen::VectorXd w(5);
    for (Eigen::Index i = 0; i < 5; ++i) w(i) = rng.normal();
    for (const SensingMatrix* phi : {&sel, &gau}) {
        const Eigen::MatrixXd d = phi->dense();
        EXPECT_LT((phi->left_multiply(a) - d * a).cwiseAbs().maxCoeff(), 1e-13);
        EXPECT_LT((phi->right_multiply_transpose(b) - b * d.transpose()).cwiseAbs().maxCoeff(), 1e-13);
        EXPECT_LT((phi->transpose_apply(w) - d.transpose() * w).cwiseAbs().maxCoeff(), 1e-13);
    }
}

TEST(SensingMatrix, FromDenseValidation) {
    EXPECT_THROW(SensingMatrix::from_dense(Eigen::MatrixXd::Ones(3, 2), SensingKind::GaussianIID), ArgumentError);
    Eigen::MatrixXd two_ones = Eigen::MatrixXd::Zero(1, 3);
    two_ones(0, 0) = two_ones(0, 2) = 1.0;
    EXPECT_THROW(SensingMatrix::from_dense(two_ones, SensingKind::Subsampling), ArgumentError);
    Eigen::MatrixXd repeated = Eigen::MatrixXd::Zero(2, 3);
    repeated(0, 1) = repeated(1, 1) = 1.0;
    EXPECT_THROW(SensingMatrix::from_dense(repeated, SensingKind::Subsampling), ArgumentError);
    Eigen::MatrixXd nan = Eigen::MatrixXd::Zero(1, 2);
    nan(0, 0) = std::numeric_limits<double>::quiet_NaN();
    EXPECT_THROW(SensingMatrix::from_dense(nan, SensingKind::GaussianIID), ArgumentError);
}

TEST(DctBasis, SmallAndOrthonormal) {
    EXPECT_NEAR(dct_basis(1).entries()(0, 0), 1.0, 1e-15);
    const Basis d = dct_basis(64);
    EXPECT_LT(orthonormality_error(d.entries()), 1e-10);
    const Eigen::MatrixXd& e = d.entries();
    for (Eigen::Index n = 0; n < 64; ++n) EXPECT_NEAR(e(0, n), 1.0 / 8.0, 1e-15);
    EXPECT_NEAR(e(3, 5), std::sqrt(2.0 / 64.0) * std::cos(std::numbers::pi * 11.0 * 3.0 / 128.0), 1e-15);
}

TEST(DctBasis, ConstantVectorHasOnlyDcEnergy) {
    const Basis d = dct_basis(16);
    const Eigen::VectorXd c = d.entries() * Eigen::VectorXd::Constant(16, 2.0);
    EXPECT_NEAR(c(0), 2.0 * 4.0, 1e-13);
    EXPECT_LT(c.tail(15).cwiseAbs().maxCoeff(), 1e-13);
}

TEST(Basis, RejectsNonOrthonormal) {
    EXPECT_THROW(Basis(2.0 * Eigen::MatrixXd::Identity(3, 3), BasisKind::Identity), ArgumentError);
    EXPECT_THROW(Basis(Eigen::MatrixXd::Identity(3, 2), BasisKind::Identity), ArgumentError);
}

TEST(Zigzag, MatchesJpegOrderFor4x4) {
    const auto z = zigzag_order(4);
    const std::vector<std::pair<Eigen::Index, Eigen::Index>> want{
        {0, 0}, {0, 1}, {1, 0}, {2, 0}, {1, 1}, {0, 2}, {0, 3}, {1, 2},
        {2, 1}, {3, 0}, {3, 1}, {2, 2}, {1, 3}, {2, 3}, {3, 2}, {3, 3}};
    EXPECT_EQ(z, want);
}

TEST(Dct2dBasis, OrthonormalWithConstantFirstAtom) {
    const Basis b = dct2d_basis(8);
    EXPECT_LT(orthonormality_error(b.entries()), 1e-10);
    EXPECT_LT((b.entries().col(0).array() - 1.0 / 8.0).abs().maxCoeff(), 1e-15);
    // Atom 1 varies along columns only, atom 2 along rows only.
    const Eigen::VectorXd a1 = b.entries().col(1);
    for (Eigen::Index r = 1; r < 8; ++r)
        for (Eigen::Index c = 0; c < 8; ++c) EXPECT_NEAR(a1(r * 8 + c), a1(c), 1e-15);
}

TEST(Compose, IdentityLeavesEntriesUnchanged) {
    SeededRng rng(7);
    const SensingMatrix phi = gaussian_matrix(3, 6, rng);
    const SensingMatrix c = compose(phi, Basis::identity(6));
    EXPECT_EQ(c.dense(), phi.dense());
    EXPECT_EQ(c.kind(), SensingKind::Composed);
    EXPECT_THROW(compose(phi, Basis::identity(5)), ArgumentError);
}

TEST(Compose, AssociativityAndRowSelection) {
    SeededRng rng(8);
    const SensingMatrix phi = subsampling_matrix(10, 64, rng);
    const Basis psi = dct_basis(64);
    const SensingMatrix c = compose(phi, psi);
    Eigen::VectorXd x(64);
    for (Eigen::Index i = 0; i < 64; ++i) x(i) = rng.normal();
    EXPECT_LT((sense(c, x) - sense(phi, psi.entries() * x)).cwiseAbs().maxCoeff(), 1e-12);
    EXPECT_NEAR(sense(c, x).norm(), sense(phi, psi.entries() * x).norm(), 1e-12);
    for (Eigen::Index r = 0; r < 10; ++r)
        EXPECT_EQ(c.dense().row(r), psi.entries().row(phi.selected()[static_cast<std::size_t>(r)]));
    // Orthonormal rows.
    const Eigen::MatrixXd g = c.dense() * c.dense().transpose();
    EXPECT_LT((g - Eigen::MatrixXd::Identity(10, 10)).cwiseAbs().maxCoeff(), 1e-10);
    const SensingMatrix c2 = compose(phi, dct2d_basis(8));
    const Eigen::MatrixXd g2 = c2.dense() * c2.dense().transpose();
    EXPECT_LT((g2 - Eigen::MatrixXd::Identity(10, 10)).cwiseAbs().maxCoeff(), 1e-10);
}

TEST(Sense, PermutationZeroAndMismatch) {
    SeededRng rng(9);
    const SensingMatrix perm = subsampling_matrix(6, 6, rng);
    Eigen::VectorXd x(6);
    x << 1, 2, 3, 4, 5, 6;
    Eigen::VectorXd y = sense(perm, x);
    std::vector<double> sorted(y.data(), y.data() + 6);
    std::sort(sorted.begin(), sorted.end());
    EXPECT_EQ(sorted, (std::vector<double>{1, 2, 3, 4, 5, 6}));
    const SensingMatrix g = gaussian_matrix(3, 6, rng);
    EXPECT_EQ(sense(g, Eigen::VectorXd::Zero(6)), Eigen::VectorXd::Zero(3));
    EXPECT_THROW(sense(g, Eigen::VectorXd::Zero(5)), ArgumentError);
}

TEST(KindStrings, RoundTrip) {
    for (auto k : {SensingKind::GaussianIID, SensingKind::Bernoulli, SensingKind::Subsampling, SensingKind::Composed})
        EXPECT_EQ(sensing_kind_from_string(to_string(k)), k);
    for (auto k : {BasisKind::Identity, BasisKind::DCT, BasisKind::DCT2D})
        EXPECT_EQ(basis_kind_from_string(to_string(k)), k);
    EXPECT_THROW(sensing_kind_from_string("fourier"), ArgumentError);
}
