#pragma once

// Reference computations that share no code path with the library: extended
// precision, different factorizations, textbook formulas.

#include <Eigen/Dense>

#include <cmath>
#include <numbers>

#include "scs/scs.hpp"

namespace oracle {

using LMatrix = Eigen::Matrix<long double, Eigen::Dynamic, Eigen::Dynamic>;
using LVector = Eigen::Matrix<long double, Eigen::Dynamic, 1>;

inline LMatrix widen(const Eigen::MatrixXd& a) { return a.cast<long double>(); }
inline LVector widen(const Eigen::VectorXd& a) { return a.cast<long double>(); }

/**
 * argmin |S^(-1/2) (x - mu)| subject to Phi x = y, by substituting
 * x = mu + S^(1/2) u and taking the minimum-norm u through a complete
 * orthogonal decomposition, in long double.
 */
inline Eigen::VectorXd whitened_constrained_ls(const scs::SpectralGaussian& model, const Eigen::MatrixXd& phi,
                                               const Eigen::VectorXd& y) {
    const LMatrix root = widen(model.basis()) * widen(model.eigenvalues()).cwiseSqrt().asDiagonal() *
                         widen(model.basis()).transpose();
    const LMatrix a = widen(phi) * root;
    const LVector r = widen(y) - widen(phi) * widen(model.mean());
    const Eigen::CompleteOrthogonalDecomposition<LMatrix> cod(a);
    const LVector u = cod.solve(r);
    return (widen(model.mean()) + root * u).cast<double>();
}

/// log N(y; mean, cov) from a full-pivot LU in long double.
inline double mvn_log_pdf(const Eigen::VectorXd& y, const Eigen::VectorXd& mean, const Eigen::MatrixXd& cov) {
    const LMatrix c = widen(cov);
    const Eigen::FullPivLU<LMatrix> lu(c);
    const LVector r = widen(y) - widen(mean);
    const long double quad = r.dot(lu.solve(r));
    const long double logdet = std::log(std::abs(lu.determinant()));
    const long double m = static_cast<long double>(y.size());
    return static_cast<double>(-0.5L * quad - 0.5L * logdet - 0.5L * m * std::log(2.0L * std::numbers::pi_v<long double>));
}

/// Posterior error covariance S - S Phi^T (Phi S Phi^T)^-1 Phi S with an explicit LU inverse, long double.
inline Eigen::MatrixXd error_covariance(const scs::SpectralGaussian& model, const Eigen::MatrixXd& phi) {
    const LMatrix s = widen(model.covariance());
    const LMatrix p = widen(phi);
    const LMatrix g = p * s * p.transpose();
    const LMatrix ginv = Eigen::FullPivLU<LMatrix>(g).inverse();
    return (s - s * p.transpose() * ginv * p * s).cast<double>();
}

/// E|N(0, v)| = sqrt(2 v / pi).
inline double half_normal_mean(double variance) { return std::sqrt(2.0 * variance / std::numbers::pi); }

/// Random orthonormal N x N matrix (Householder QR of a Gaussian matrix).
inline Eigen::MatrixXd random_orthonormal(Eigen::Index n, scs::SeededRng& rng) {
    Eigen::MatrixXd g(n, n);
    for (Eigen::Index i = 0; i < g.size(); ++i) g.data()[i] = rng.normal();
    Eigen::HouseholderQR<Eigen::MatrixXd> qr(g);
    return qr.householderQ() * Eigen::MatrixXd::Identity(n, n);
}

/// Random full-rank model: orthonormal basis, eigenvalues spread over [lo, hi], random mean.
inline scs::SpectralGaussian random_model(Eigen::Index n, scs::SeededRng& rng, double lo = 0.1, double hi = 2.0) {
    Eigen::VectorXd values(n);
    for (Eigen::Index i = 0; i < n; ++i) values(i) = lo + (hi - lo) * rng.uniform();
    std::sort(values.data(), values.data() + n, std::greater<>());
    Eigen::VectorXd mean(n);
    for (Eigen::Index i = 0; i < n; ++i) mean(i) = rng.normal();
    return scs::SpectralGaussian(mean, random_orthonormal(n, rng), values);
}

inline double relative_error(const Eigen::VectorXd& got, const Eigen::VectorXd& want) {
    const double scale = std::max(want.norm(), 1e-300);
    return (got - want).norm() / scale;
}

}  // namespace oracle
