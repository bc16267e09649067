#pragma once

#include <Eigen/Dense>

#include <cmath>
#include <limits>
#include <vector>

#include "scs/errors.hpp"
#include "scs/gaussian_model.hpp"
#include "scs/numeric.hpp"
#include "scs/sensing.hpp"

namespace scs {

/// Thresholds for the measured-domain Gram G = Phi S Phi^T.
struct GramPolicy {
    /// Above this condition number the Gram is regularized by `jitter_scale * trace(G) / M`.
    static constexpr double kJitterCondition = 1e10;
    static constexpr double kJitterScale = 1e-10;
    /// Above this condition number (after jitter) the system is declared singular.
    static constexpr double kSingularCondition = 1e14;
};

/// Cholesky factor of G (+ tau I when needed) together with its diagnostics.
struct GramFactor {
    Eigen::LLT<Eigen::MatrixXd> llt;
    double condition = 1.0;
    double jitter = 0.0;
};

namespace detail {

inline double spd_condition(const Eigen::MatrixXd& g) {
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(g, Eigen::EigenvaluesOnly);
    if (eig.info() != Eigen::Success) return std::numeric_limits<double>::infinity();
    const double lo = eig.eigenvalues()(0);
    const double hi = eig.eigenvalues()(g.rows() - 1);
    if (!(lo > 0.0) || !std::isfinite(hi)) return std::numeric_limits<double>::infinity();
    return hi / lo;
}

}  // namespace detail

/**
 * Factorizes the Gram, adding the relative jitter only when the raw system is
 * worse conditioned than `kJitterCondition` (or not positive definite).
 * Throws SingularGramError when even the jittered system exceeds
 * `kSingularCondition`.
 */
inline GramFactor factor_gram(const Eigen::MatrixXd& gram) {
    GramFactor out;
    const Eigen::Index m = gram.rows();
    if (m == 0) return out;
    out.condition = detail::spd_condition(gram);
    if (out.condition <= GramPolicy::kJitterCondition) {
        out.llt.compute(gram);
        if (out.llt.info() == Eigen::Success) return out;
    }
    const double trace = gram.trace();
    out.jitter = GramPolicy::kJitterScale * trace / static_cast<double>(m);
    if (!(out.jitter > 0.0)) throw SingularGramError("measured-domain Gram is singular", out.condition);
    Eigen::MatrixXd jittered = gram;
    jittered.diagonal().array() += out.jitter;
    out.condition = detail::spd_condition(jittered);
    if (out.condition > GramPolicy::kSingularCondition)
        throw SingularGramError("measured-domain Gram is singular after jitter", out.condition);
    out.llt.compute(jittered);
    if (out.llt.info() != Eigen::Success)
        throw SingularGramError("Cholesky factorization of the jittered Gram failed", out.condition);
    return out;
}

struct DecodeResult {
    Eigen::VectorXd estimate;
    /// Condition number of Phi S Phi^T (of the jittered system when jitter was applied).
    double gram_condition = 1.0;
    double jitter = 0.0;
};

/**
 * Linear MAP / MMSE decoder for a Gaussian prior and one sensing matrix:
 *
 *     x_hat = mu + S Phi^T (Phi S Phi^T)^-1 (y - Phi mu)
 *
 * The M x M Gram is factorized once; decode() is then O(MN) per signal.
 */
class MapDecoder {
public:
    MapDecoder(const SpectralGaussian& model, const SensingMatrix& phi)
        : mean_(model.mean()),
          covariance_trace_(model.covariance().trace()),
          variance_(model.covariance().diagonal()) {
        detail::require(phi.cols() == model.dim(), "map_decode: matrix columns differ from model dimension");
        measured_mean_ = phi.apply(model.mean());
        phi_s_ = phi.left_multiply(model.covariance());
        const Eigen::MatrixXd gram = phi.right_multiply_transpose(phi_s_);
        factor_ = factor_gram(0.5 * (gram + gram.transpose()));
        if (phi.is_selection()) observed_.assign(phi.selected().begin(), phi.selected().end());
    }

    Eigen::Index rows() const noexcept { return phi_s_.rows(); }
    Eigen::Index dim() const noexcept { return mean_.size(); }
    double gram_condition() const noexcept { return factor_.condition; }
    double jitter() const noexcept { return factor_.jitter; }

    DecodeResult decode(const Eigen::VectorXd& y) const {
        detail::require(y.size() == rows(), "map_decode: measurement length differs from matrix rows");
        DecodeResult out;
        out.gram_condition = factor_.condition;
        out.jitter = factor_.jitter;
        if (rows() == 0) {
            out.estimate = mean_;
            return out;
        }
        const Eigen::VectorXd w = factor_.llt.solve(y - measured_mean_);
        out.estimate = mean_ + phi_s_.transpose() * w;
        // Observed coordinates are known exactly; do not let solver rounding touch them.
        if (!observed_.empty()) out.estimate(observed_) = y;
        return out;
    }

    /// Decodes every column of `y` (M x count).
    Eigen::MatrixXd decode_columns(const Eigen::MatrixXd& y) const {
        detail::require(y.rows() == rows(), "map_decode: measurement length differs from matrix rows");
        if (rows() == 0) return mean_.replicate(1, y.cols());
        const Eigen::MatrixXd w = factor_.llt.solve(y.colwise() - measured_mean_);
        Eigen::MatrixXd x = (phi_s_.transpose() * w).colwise() + mean_;
        if (!observed_.empty()) x(observed_, Eigen::all) = y;
        return x;
    }

    /// Sigma_eta = S - S Phi^T (Phi S Phi^T)^-1 Phi S, symmetric by construction.
    Eigen::MatrixXd error_covariance(const SpectralGaussian& model) const {
        if (rows() == 0) return model.covariance();
        const Eigen::MatrixXd z = factor_.llt.matrixL().solve(phi_s_);
        Eigen::MatrixXd cov = model.covariance() - z.transpose() * z;
        for (Eigen::Index i : observed_) {
            cov.row(i).setZero();
            cov.col(i).setZero();
        }
        return cov;
    }

    /// trace(Sigma_eta).
    double mse() const {
        if (rows() == 0) return covariance_trace_;
        const Eigen::MatrixXd z = factor_.llt.matrixL().solve(phi_s_);
        if (observed_.empty()) return covariance_trace_ - z.squaredNorm();
        std::vector<char> seen(static_cast<std::size_t>(dim()), 0);
        for (Eigen::Index i : observed_) seen[static_cast<std::size_t>(i)] = 1;
        CompensatedSum sum;
        for (Eigen::Index i = 0; i < dim(); ++i)
            if (!seen[static_cast<std::size_t>(i)]) sum.add(variance_(i) - z.col(i).squaredNorm());
        return sum.value();
    }

private:
    Eigen::VectorXd mean_;
    Eigen::VectorXd measured_mean_;
    Eigen::MatrixXd phi_s_;
    GramFactor factor_;
    double covariance_trace_;
    Eigen::VectorXd variance_;
    std::vector<Eigen::Index> observed_;
};

inline DecodeResult map_decode(const SpectralGaussian& model, const SensingMatrix& phi, const Eigen::VectorXd& y) {
    return MapDecoder(model, phi).decode(y);
}

inline Eigen::MatrixXd error_covariance(const SpectralGaussian& model, const SensingMatrix& phi) {
    return MapDecoder(model, phi).error_covariance(model);
}

inline double mse_closed_form(const SpectralGaussian& model, const SensingMatrix& phi) {
    return MapDecoder(model, phi).mse();
}

}  // namespace scs
