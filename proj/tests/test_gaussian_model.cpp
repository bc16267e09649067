#include <gtest/gtest.h>

#include <boost/multiprecision/cpp_bin_float.hpp>

#include "oracles.hpp"
#include "scs/gaussian_model.hpp"

using namespace scs;

TEST(PowerDecay, SmallCases) {
    const Spectrum s = power_decay_spectrum(4, 1.0);
    EXPECT_EQ(s[0], 1.0);
    EXPECT_EQ(s[1], 0.5);
    EXPECT_DOUBLE_EQ(s[2], 1.0 / 3.0);
    EXPECT_EQ(s[3], 0.25);

    const Spectrum t = power_decay_spectrum(64, 3.0);
    EXPECT_EQ(t[1], 0.125);
    EXPECT_NEAR(t[63], 3.8147e-6, 1e-10);
    EXPECT_DOUBLE_EQ(t[63], 1.0 / (64.0 * 64.0 * 64.0));

    const Spectrum one = power_decay_spectrum(1, 2.0);
    ASSERT_EQ(one.dim(), 1);
    EXPECT_EQ(one[0], 1.0);
}

TEST(PowerDecay, StrictlyDecreasingForAnyPositiveAlpha) {
    for (double alpha : {0.01, 0.5, 1.0, 2.5, 7.0}) {
        const Spectrum s = power_decay_spectrum(100, alpha);
        EXPECT_EQ(s[0], 1.0);
        for (Eigen::Index m = 1; m < s.dim(); ++m) EXPECT_LT(s[m], s[m - 1]);
    }
}

TEST(PowerDecay, RejectsBadArguments) {
    EXPECT_THROW(power_decay_spectrum(0, 1.0), ArgumentError);
    EXPECT_THROW(power_decay_spectrum(4, 0.0), ArgumentError);
    EXPECT_THROW(power_decay_spectrum(4, -3.0), ArgumentError);
}

TEST(Spectrum, RejectsUnsortedOrNegative) {
    EXPECT_THROW(Spectrum(Eigen::Vector3d(1, 2, 0)), ArgumentError);
    EXPECT_THROW(Spectrum(Eigen::Vector2d(1, -1)), ArgumentError);
    EXPECT_THROW(Spectrum(Eigen::VectorXd()), ArgumentError);
}

TEST(BestKTerm, HandValues) {
    const Spectrum s = power_decay_spectrum(4, 1.0);
    EXPECT_DOUBLE_EQ(best_k_term_mse(s, 2), 1.0 / 3.0 + 0.25);
    EXPECT_EQ(best_k_term_mse(s, 4), 0.0);
    EXPECT_DOUBLE_EQ(best_k_term_mse(s, 0), 1.0 + 0.5 + 1.0 / 3.0 + 0.25);
    EXPECT_THROW(best_k_term_mse(s, 5), ArgumentError);
    EXPECT_THROW(best_k_term_mse(s, -1), ArgumentError);
}

TEST(BestKTerm, MatchesHighPrecisionTail) {
    using big = boost::multiprecision::cpp_bin_float_50;
    big tail = 0;
    for (int m = 11; m <= 64; ++m) tail += 1 / (big(m) * m * m);
    const double got = best_k_term_mse(power_decay_spectrum(64, 3.0), 10);
    EXPECT_NEAR(got, tail.convert_to<double>(), 2e-16 * got);
}

TEST(BestKTerm, NonIncreasingAndHeadIdentity) {
    const Spectrum s = power_decay_spectrum(50, 1.7);
    double head = 0.0;
    for (Eigen::Index k = 1; k <= s.dim(); ++k) {
        head += s[k - 1];
        EXPECT_LE(best_k_term_mse(s, k), best_k_term_mse(s, k - 1));
        EXPECT_NEAR(best_k_term_mse(s, 0) - best_k_term_mse(s, k), head, 1e-14);
    }
}

TEST(SpectralGaussian, ValidatesInvariants) {
    const Eigen::MatrixXd q = Eigen::MatrixXd::Identity(3, 3);
    EXPECT_NO_THROW(SpectralGaussian(Eigen::VectorXd::Zero(3), q, Eigen::Vector3d(3, 2, 1)));
    EXPECT_THROW(SpectralGaussian(Eigen::VectorXd::Zero(3), 2.0 * q, Eigen::Vector3d(3, 2, 1)), ArgumentError);
    EXPECT_THROW(SpectralGaussian(Eigen::VectorXd::Zero(2), q, Eigen::Vector3d(3, 2, 1)), ArgumentError);
    EXPECT_THROW(SpectralGaussian(Eigen::VectorXd::Zero(3), q, Eigen::Vector3d(1, 2, 3)), ArgumentError);
}

TEST(SpectralGaussian, CovarianceIsSymmetric) {
    SeededRng rng(3);
    const SpectralGaussian g = oracle::random_model(12, rng);
    const Eigen::MatrixXd& s = g.covariance();
    EXPECT_LT((s - s.transpose()).cwiseAbs().maxCoeff(), 1e-10);
    const Eigen::MatrixXd direct = g.basis() * g.eigenvalues().asDiagonal() * g.basis().transpose();
    EXPECT_LT((s - direct).cwiseAbs().maxCoeff(), 1e-12);
}

TEST(Sample, ZeroSpectrumReturnsMean) {
    const Eigen::Vector3d mean(1, -2, 3);
    const SpectralGaussian g(mean, Eigen::MatrixXd::Identity(3, 3), Eigen::Vector3d::Zero());
    for (const auto& x : sample(g, 20, SeededRng(1))) EXPECT_EQ(x, Eigen::VectorXd(mean));
}

TEST(Sample, DeterministicAndThreadIndependent) {
    const SpectralGaussian g = SpectralGaussian::diagonal(power_decay_spectrum(8, 1.0));
    const auto a = sample(g, 500, SeededRng(77));
    const auto b = sample(g, 500, SeededRng(77));
    const auto c = sample(g, 500, SeededRng(77), Parallelism{4});
    ASSERT_EQ(a.size(), 500u);
    for (std::size_t i = 0; i < a.size(); ++i) {
        EXPECT_EQ(a[i], b[i]);
        EXPECT_EQ(a[i], c[i]);
    }
    EXPECT_THROW(sample(g, 0, SeededRng(1)), ArgumentError);
}

TEST(Sample, EmpiricalCovarianceMatchesSpectrum) {
    const Spectrum spec = power_decay_spectrum(8, 1.0);
    const auto xs = sample(SpectralGaussian::diagonal(spec), 100000, SeededRng(5), Parallelism::hardware());
    Eigen::MatrixXd cov = Eigen::MatrixXd::Zero(8, 8);
    for (const auto& x : xs) cov.noalias() += x * x.transpose();
    cov /= static_cast<double>(xs.size());
    EXPECT_NEAR(cov(0, 0), spec[0], 0.05 * spec[0]);
    for (Eigen::Index i = 0; i < 8; ++i) EXPECT_NEAR(cov(i, i), spec[i], 0.05 * spec[i]);
}

TEST(FitGaussian, TwoPointExample) {
    const std::vector<Eigen::VectorXd> xs{Eigen::Vector2d(1, 0), Eigen::Vector2d(-1, 0)};
    const SpectralGaussian g = fit_gaussian(xs, 0.0);
    EXPECT_LT(g.mean().cwiseAbs().maxCoeff(), 1e-15);
    EXPECT_NEAR(g.eigenvalues()(0), 1.0, 1e-15);
    EXPECT_NEAR(g.eigenvalues()(1), 0.0, 1e-15);
    EXPECT_NEAR(std::abs(g.basis()(0, 0)), 1.0, 1e-15);
    EXPECT_NEAR(g.basis()(1, 0), 0.0, 1e-15);
}

TEST(FitGaussian, SingleSignalGivesRegularizer) {
    const std::vector<Eigen::VectorXd> xs{Eigen::Vector3d(4, 5, 6)};
    const SpectralGaussian g = fit_gaussian(xs, 0.25);
    EXPECT_EQ(g.mean(), xs[0]);
    EXPECT_LT((g.covariance() - 0.25 * Eigen::MatrixXd::Identity(3, 3)).cwiseAbs().maxCoeff(), 1e-15);
}

TEST(FitGaussian, RejectsEmptyOrRagged) {
    EXPECT_THROW(fit_gaussian(std::vector<Eigen::VectorXd>{}, 0.0), ArgumentError);
    const std::vector<Eigen::VectorXd> ragged{Eigen::Vector2d(1, 0), Eigen::Vector3d(1, 0, 0)};
    EXPECT_THROW(fit_gaussian(ragged, 0.0), ArgumentError);
    const std::vector<Eigen::VectorXd> ok{Eigen::Vector2d(1, 0)};
    EXPECT_THROW(fit_gaussian(ok, -1.0), ArgumentError);
}

TEST(FitGaussian, RoundTripRecoversModel) {
    SeededRng rng(11);
    const SpectralGaussian truth = oracle::random_model(6, rng, 0.2, 3.0);
    const std::size_t count = 100000;
    const SpectralGaussian fit = fit_gaussian(sample(truth, count, SeededRng(12), Parallelism::hardware()), 0.0);
    const double lambda1 = truth.eigenvalues()(0);
    EXPECT_NEAR(fit.eigenvalues()(0), lambda1, 0.05 * lambda1);
    const double mean_tol = 3.0 * std::sqrt(lambda1 / static_cast<double>(count));
    for (Eigen::Index i = 0; i < 6; ++i) EXPECT_NEAR(fit.mean()(i), truth.mean()(i), mean_tol);
    for (Eigen::Index i = 0; i < 6; ++i)
        EXPECT_NEAR(fit.eigenvalues()(i), truth.eigenvalues()(i), 0.05 * truth.eigenvalues()(i));
}
