#pragma once

#include <Eigen/Dense>

#include <cmath>
#include <span>
#include <string>
#include <vector>

#include "scs/errors.hpp"
#include "scs/numeric.hpp"
#include "scs/parallel.hpp"
#include "scs/rng.hpp"

namespace scs {

/// Sorted, non-negative eigenvalues lambda_1 >= ... >= lambda_N >= 0.
class Spectrum {
public:
    explicit Spectrum(Eigen::VectorXd eigenvalues) : values_(std::move(eigenvalues)) {
        detail::require(values_.size() >= 1, "Spectrum: empty eigenvalue vector");
        for (Eigen::Index i = 0; i < values_.size(); ++i) {
            detail::require(std::isfinite(values_(i)) && values_(i) >= 0.0,
                            "Spectrum: eigenvalues must be finite and non-negative");
            if (i > 0)
                detail::require(values_(i) <= values_(i - 1), "Spectrum: eigenvalues must be non-increasing");
        }
    }

    Eigen::Index dim() const noexcept { return values_.size(); }
    const Eigen::VectorXd& eigenvalues() const noexcept { return values_; }
    double operator[](Eigen::Index m) const { return values_(m); }

private:
    Eigen::VectorXd values_;
};

/**
 * Gaussian N(mean, basis * diag(eigenvalues) * basis^T).
 *
 * The basis columns are orthonormal eigenvectors ordered with the spectrum.
 * The dense covariance is formed once at construction since every decoder
 * needs it.
 */
class SpectralGaussian {
public:
    static constexpr double kOrthonormalityTolerance = 1e-10;

    SpectralGaussian(Eigen::VectorXd mean, Eigen::MatrixXd basis, Eigen::VectorXd eigenvalues)
        : mean_(std::move(mean)), basis_(std::move(basis)), spectrum_(std::move(eigenvalues)) {
        const Eigen::Index n = spectrum_.dim();
        detail::require(mean_.size() == n, "SpectralGaussian: mean length differs from spectrum length");
        detail::require(basis_.rows() == n && basis_.cols() == n, "SpectralGaussian: basis must be N x N");
        detail::require(mean_.allFinite() && basis_.allFinite(), "SpectralGaussian: non-finite parameters");
        detail::require(orthonormality_error(basis_) <= kOrthonormalityTolerance,
                        "SpectralGaussian: basis columns are not orthonormal");
        covariance_ = basis_ * spectrum_.eigenvalues().asDiagonal() * basis_.transpose();
        covariance_ = 0.5 * (covariance_ + covariance_.transpose()).eval();
    }

    /// Zero mean, identity basis: S = diag(spectrum).
    static SpectralGaussian diagonal(const Spectrum& spectrum) {
        const Eigen::Index n = spectrum.dim();
        return SpectralGaussian(Eigen::VectorXd::Zero(n), Eigen::MatrixXd::Identity(n, n), spectrum.eigenvalues());
    }

    static SpectralGaussian from_covariance(Eigen::VectorXd mean, const Eigen::MatrixXd& covariance) {
        SymmetricEigen eig = symmetric_eigen(covariance);
        return SpectralGaussian(std::move(mean), std::move(eig.vectors), std::move(eig.values));
    }

    Eigen::Index dim() const noexcept { return spectrum_.dim(); }
    const Eigen::VectorXd& mean() const noexcept { return mean_; }
    const Eigen::MatrixXd& basis() const noexcept { return basis_; }
    const Eigen::VectorXd& eigenvalues() const noexcept { return spectrum_.eigenvalues(); }
    const Spectrum& spectrum() const noexcept { return spectrum_; }
    const Eigen::MatrixXd& covariance() const noexcept { return covariance_; }

    /// Draws one vector using the engine inside `rng`.
    Eigen::VectorXd draw(SeededRng& rng) const {
        Eigen::VectorXd z(dim());
        for (Eigen::Index i = 0; i < z.size(); ++i) z(i) = rng.normal();
        return mean_ + basis_ * (spectrum_.eigenvalues().cwiseSqrt().cwiseProduct(z));
    }

private:
    Eigen::VectorXd mean_;
    Eigen::MatrixXd basis_;
    Spectrum spectrum_;
    Eigen::MatrixXd covariance_;
};

/// lambda_m = m^(-alpha), m = 1..N.
inline Spectrum power_decay_spectrum(Eigen::Index n, double alpha) {
    detail::require(n >= 1, "power_decay_spectrum: N must be positive");
    detail::require(alpha > 0.0 && std::isfinite(alpha), "power_decay_spectrum: alpha must be positive");
    Eigen::VectorXd values(n);
    for (Eigen::Index m = 0; m < n; ++m) values(m) = std::pow(static_cast<double>(m + 1), -alpha);
    return Spectrum(std::move(values));
}

/// Tail energy sum_{m > k} lambda_m: the MSE of keeping the top-k principal coordinates.
inline double best_k_term_mse(const Spectrum& spectrum, Eigen::Index k) {
    detail::require(k >= 0 && k <= spectrum.dim(), "best_k_term_mse: k out of range [0, N]");
    CompensatedSum tail;
    for (Eigen::Index m = spectrum.dim() - 1; m >= k; --m) tail.add(spectrum[m]);
    return tail.value();
}

/// `count` draws; draw i uses `rng.derive(i)` so any thread count gives the same list.
inline std::vector<Eigen::VectorXd> sample(const SpectralGaussian& model, std::size_t count, const SeededRng& rng,
                                           Parallelism par = {}) {
    detail::require(count >= 1, "sample: count must be positive");
    std::vector<Eigen::VectorXd> out(count);
    parallel_for(count, par, [&](std::size_t i) {
        SeededRng child = rng.derive(i);
        out[i] = model.draw(child);
    });
    return out;
}

/// Fit from the columns of `signals` (N x count). Covariance normalizes by count.
inline SpectralGaussian fit_gaussian_columns(const Eigen::MatrixXd& signals, double regularization) {
    detail::require(signals.cols() >= 1 && signals.rows() >= 1, "fit_gaussian: no signals");
    detail::require(regularization >= 0.0 && std::isfinite(regularization),
                    "fit_gaussian: regularization must be non-negative");
    const double count = static_cast<double>(signals.cols());
    Eigen::VectorXd mean = signals.rowwise().sum() / count;
    const Eigen::MatrixXd centered = signals.colwise() - mean;
    Eigen::MatrixXd cov = (centered * centered.transpose()) / count;
    cov.diagonal().array() += regularization;
    return SpectralGaussian::from_covariance(std::move(mean), cov);
}

inline SpectralGaussian fit_gaussian(std::span<const Eigen::VectorXd> signals, double regularization) {
    detail::require(!signals.empty(), "fit_gaussian: no signals");
    const Eigen::Index n = signals.front().size();
    Eigen::MatrixXd columns(n, static_cast<Eigen::Index>(signals.size()));
    for (std::size_t j = 0; j < signals.size(); ++j) {
        detail::require(signals[j].size() == n, "fit_gaussian: signals have different dimensions");
        columns.col(static_cast<Eigen::Index>(j)) = signals[j];
    }
    return fit_gaussian_columns(columns, regularization);
}

}  // namespace scs
