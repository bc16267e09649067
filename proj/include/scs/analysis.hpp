#pragma once

#include <Eigen/Dense>

#include <array>
#include <cmath>
#include <iomanip>
#include <memory>
#include <optional>
#include <ostream>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include "scs/decoder.hpp"
#include "scs/errors.hpp"
#include "scs/gaussian_model.hpp"
#include "scs/numeric.hpp"
#include "scs/parallel.hpp"
#include "scs/rng.hpp"
#include "scs/sensing.hpp"

namespace scs {

/// Random matrix ensembles used by the experiments. SubsampledDct senses
/// coordinates of signals synthesized in the 2-D zigzag DCT basis.
enum class MatrixKind { Gaussian, Bernoulli, SubsampledDct };

inline std::string_view to_string(MatrixKind kind) {
    switch (kind) {
        case MatrixKind::Gaussian: return "gaussian";
        case MatrixKind::Bernoulli: return "bernoulli";
        case MatrixKind::SubsampledDct: return "subsample";
    }
    return "unknown";
}

inline MatrixKind matrix_kind_from_string(std::string_view name) {
    if (name == "gaussian") return MatrixKind::Gaussian;
    if (name == "bernoulli") return MatrixKind::Bernoulli;
    if (name == "subsample" || name == "subsampling") return MatrixKind::SubsampledDct;
    throw ArgumentError("unknown matrix kind '" + std::string(name) + "'");
}

inline Eigen::Index exact_sqrt(Eigen::Index n) {
    auto side = static_cast<Eigen::Index>(std::llround(std::sqrt(static_cast<double>(n))));
    return side * side == n ? side : -1;
}

/// Either a fixed matrix or an ensemble to draw a fresh matrix from per trial.
class MatrixSource {
public:
    static MatrixSource random(MatrixKind kind, Eigen::Index m, Eigen::Index n) {
        detail::require(m >= 1 && m <= n, "MatrixSource: need 1 <= M <= N");
        MatrixSource out;
        out.kind_ = kind;
        out.rows_ = m;
        out.cols_ = n;
        if (kind == MatrixKind::SubsampledDct) {
            const Eigen::Index side = exact_sqrt(n);
            detail::require(side > 0, "MatrixSource: subsampled 2-D DCT needs N to be a perfect square");
            out.basis_ = std::make_shared<const Basis>(dct2d_basis(side));
        }
        return out;
    }

    static MatrixSource fixed(SensingMatrix phi) {
        MatrixSource out;
        out.rows_ = phi.rows();
        out.cols_ = phi.cols();
        out.fixed_ = std::make_shared<const SensingMatrix>(std::move(phi));
        return out;
    }

    bool is_fixed() const noexcept { return fixed_ != nullptr; }
    Eigen::Index rows() const noexcept { return rows_; }
    Eigen::Index cols() const noexcept { return cols_; }
    std::optional<MatrixKind> kind() const { return is_fixed() ? std::nullopt : std::optional(kind_); }

    SensingMatrix draw(SeededRng& rng) const {
        if (fixed_) return *fixed_;
        switch (kind_) {
            case MatrixKind::Gaussian: return gaussian_matrix(rows_, cols_, rng);
            case MatrixKind::Bernoulli: return bernoulli_matrix(rows_, cols_, rng);
            case MatrixKind::SubsampledDct: return compose(subsampling_matrix(rows_, cols_, rng), *basis_);
        }
        throw ArgumentError("MatrixSource: unknown kind");
    }

private:
    MatrixKind kind_ = MatrixKind::Gaussian;
    Eigen::Index rows_ = 0;
    Eigen::Index cols_ = 0;
    std::shared_ptr<const SensingMatrix> fixed_;
    std::shared_ptr<const Basis> basis_;
};

struct ExperimentDefaults {
    static constexpr std::size_t kCurveTrials = 2000;
    static constexpr std::size_t kConstantTrials = 10000;
    /// Largest tolerated fraction of draws rejected as singular.
    static constexpr double kMaxExcludedFraction = 0.01;
};

struct MseEstimate {
    double mean = 0.0;
    double stderr_ = 0.0;
    std::size_t trials = 0;
    std::size_t excluded = 0;
};

namespace detail {

inline void check_exclusions(std::size_t excluded, std::size_t trials) {
    if (static_cast<double>(excluded) > ExperimentDefaults::kMaxExcludedFraction * static_cast<double>(trials))
        throw EstimationError("too many singular matrix draws: " + std::to_string(excluded) + " of " +
                              std::to_string(trials));
}

}  // namespace detail

/**
 * E_Phi[trace(Sigma_eta(Phi))]: the expectation over signals is exact (closed
 * form per draw), only the matrix draws are sampled. Draw t uses
 * rng.derive(t). With a fixed source this is exactly mse_closed_form.
 */
inline MseEstimate monte_carlo_mse(const SpectralGaussian& model, const MatrixSource& source, std::size_t trials,
                                   const SeededRng& rng, bool fresh_matrix_per_signal = true,
                                   Parallelism par = {}) {
    detail::require(trials >= 1, "monte_carlo_mse: trials must be positive");
    detail::require(source.cols() == model.dim(), "monte_carlo_mse: matrix columns differ from model dimension");
    if (source.is_fixed() || !fresh_matrix_per_signal) {
        SeededRng child = rng.derive(0);
        MseEstimate out;
        out.mean = mse_closed_form(model, source.draw(child));
        out.trials = trials;
        return out;
    }
    std::vector<double> values(trials, 0.0);
    std::vector<char> ok(trials, 0);
    parallel_for(trials, par, [&](std::size_t t) {
        SeededRng child = rng.derive(t);
        try {
            values[t] = mse_closed_form(model, source.draw(child));
            ok[t] = 1;
        } catch (const SingularGramError&) {
        }
    });
    std::vector<double> kept;
    kept.reserve(trials);
    for (std::size_t t = 0; t < trials; ++t)
        if (ok[t]) kept.push_back(values[t]);
    const std::size_t excluded = trials - kept.size();
    detail::check_exclusions(excluded, trials);
    const MeanEstimate est = mean_estimate(kept);
    return MseEstimate{est.mean, est.stderr_, trials, excluded};
}

/// Empirical E|x - x_hat|^2 over `count` sampled signals for one fixed matrix.
inline MeanEstimate sampled_signal_mse(const SpectralGaussian& model, const SensingMatrix& phi, std::size_t count,
                                       const SeededRng& rng) {
    detail::require(count >= 1, "sampled_signal_mse: count must be positive");
    const MapDecoder decoder(model, phi);
    constexpr std::size_t kBatch = 4096;
    std::vector<double> errors(count);
    for (std::size_t start = 0; start < count; start += kBatch) {
        const std::size_t len = std::min(kBatch, count - start);
        Eigen::MatrixXd x(model.dim(), static_cast<Eigen::Index>(len));
        for (std::size_t j = 0; j < len; ++j) {
            SeededRng child = rng.derive(start + j);
            x.col(static_cast<Eigen::Index>(j)) = model.draw(child);
        }
        const Eigen::MatrixXd xhat = decoder.decode_columns(phi.left_multiply(x));
        for (std::size_t j = 0; j < len; ++j)
            errors[start + j] = (x.col(static_cast<Eigen::Index>(j)) - xhat.col(static_cast<Eigen::Index>(j))).squaredNorm();
    }
    return mean_estimate(errors);
}

struct RatioPoint {
    double abscissa = 0.0;
    double scs_mse = 0.0;
    double best_k_mse = 0.0;
    double ratio = 0.0;
    double stderr_ = 0.0;
};

struct RatioCurve {
    std::string abscissa;  // "k" or "alpha"
    std::vector<RatioPoint> points;
    std::vector<std::string> notes;
};

/// SCS MSE with M = k fresh matrices vs the best k-term error, over k. Point k uses rng.derive(k).
inline RatioCurve ratio_vs_k(Eigen::Index n, double alpha, const std::vector<Eigen::Index>& k_values,
                             std::size_t trials, MatrixKind kind, const SeededRng& rng, Parallelism par = {}) {
    detail::require(!k_values.empty(), "ratio_vs_k: empty k range");
    const Spectrum spectrum = power_decay_spectrum(n, alpha);
    const SpectralGaussian model = SpectralGaussian::diagonal(spectrum);
    RatioCurve curve{"k", {}, {}};
    for (Eigen::Index k : k_values) {
        detail::require(k >= 1 && k <= n, "ratio_vs_k: k out of range [1, N]");
        if (k == n) {
            curve.notes.push_back("k = " + std::to_string(k) + " omitted: M = N gives zero error and zero best-k error");
            continue;
        }
        const MseEstimate scs =
            monte_carlo_mse(model, MatrixSource::random(kind, k, n), trials, rng.derive(static_cast<std::uint64_t>(k)),
                            true, par);
        const double best = best_k_term_mse(spectrum, k);
        curve.points.push_back({static_cast<double>(k), scs.mean, best, scs.mean / best, scs.stderr_});
    }
    return curve;
}

/// Same comparison at fixed k over decay exponents. Point i uses rng.derive(i).
inline RatioCurve ratio_vs_alpha(Eigen::Index n, Eigen::Index k, const std::vector<double>& alpha_values,
                                 std::size_t trials, MatrixKind kind, const SeededRng& rng, Parallelism par = {}) {
    detail::require(!alpha_values.empty(), "ratio_vs_alpha: empty alpha range");
    detail::require(k >= 1 && k < n, "ratio_vs_alpha: k must satisfy 1 <= k < N");
    RatioCurve curve{"alpha", {}, {}};
    for (std::size_t i = 0; i < alpha_values.size(); ++i) {
        const Spectrum spectrum = power_decay_spectrum(n, alpha_values[i]);
        const SpectralGaussian model = SpectralGaussian::diagonal(spectrum);
        const MseEstimate scs = monte_carlo_mse(model, MatrixSource::random(kind, k, n), trials, rng.derive(i), true, par);
        const double best = best_k_term_mse(spectrum, k);
        curve.points.push_back({alpha_values[i], scs.mean, best, scs.mean / best, scs.stderr_});
    }
    return curve;
}

inline std::string format_g9(double v) {
    std::ostringstream os;
    os << std::setprecision(9) << v;
    return os.str();
}

/// CSV with header `<abscissa>,scs_mse,best_k_mse,ratio,stderr`, 9 significant digits.
inline void write_ratio_csv(const RatioCurve& curve, std::ostream& os) {
    os << curve.abscissa << ",scs_mse,best_k_mse,ratio,stderr\n";
    for (const auto& p : curve.points)
        os << format_g9(p.abscissa) << ',' << format_g9(p.scs_mse) << ',' << format_g9(p.best_k_mse) << ','
           << format_g9(p.ratio) << ',' << format_g9(p.stderr_) << '\n';
}

/**
 * Smallest delta with (1-delta)|x| <= |Phi x| <= (1+delta)|x| on every block
 * of k consecutive coordinates (the last block may be shorter).
 */
inline double linear_rip_constant(const SensingMatrix& phi, Eigen::Index k) {
    const Eigen::Index n = phi.cols();
    detail::require(k >= 1 && k <= n, "linear_rip_constant: k out of range [1, N]");
    const Eigen::MatrixXd dense = phi.dense();
    double delta = 0.0;
    for (Eigen::Index start = 0; start < n; start += k) {
        const Eigen::Index width = std::min(k, n - start);
        const Eigen::MatrixXd block = dense.middleCols(start, width);
        Eigen::JacobiSVD<Eigen::MatrixXd> svd(block);
        const Eigen::VectorXd& s = svd.singularValues();
        const double s_max = s.size() > 0 ? s(0) : 0.0;
        // With fewer rows than columns the block has a null space.
        const double s_min = (block.rows() < width || s.size() == 0) ? 0.0 : s(s.size() - 1);
        delta = std::max({delta, 1.0 - s_min, s_max - 1.0});
    }
    return delta;
}

struct DecayProfile {
    Eigen::VectorXd mean_abs_error;
    Eigen::VectorXd stderr_;
    /// True when every increase between neighbours is within two combined standard errors.
    bool monotone = true;
    std::vector<Eigen::Index> violations;
    std::size_t excluded = 0;
};

/// E|eta[n]| with a fresh matrix and signal per trial (trial t uses rng.derive(t)).
inline DecayProfile error_decay_profile(const SpectralGaussian& model, const MatrixSource& source, std::size_t trials,
                                        const SeededRng& rng, Parallelism par = {}) {
    detail::require(trials >= 1, "error_decay_profile: trials must be positive");
    detail::require(source.cols() == model.dim(), "error_decay_profile: matrix columns differ from model dimension");
    const Eigen::Index n = model.dim();
    Eigen::MatrixXd abs_err = Eigen::MatrixXd::Zero(n, static_cast<Eigen::Index>(trials));
    std::vector<char> ok(trials, 0);
    parallel_for(trials, par, [&](std::size_t t) {
        SeededRng child = rng.derive(t);
        const SensingMatrix phi = source.draw(child);
        const Eigen::VectorXd x = model.draw(child);
        try {
            const DecodeResult r = map_decode(model, phi, phi.apply(x));
            abs_err.col(static_cast<Eigen::Index>(t)) = (x - r.estimate).cwiseAbs();
            ok[t] = 1;
        } catch (const SingularGramError&) {
        }
    });
    DecayProfile out;
    out.mean_abs_error.resize(n);
    out.stderr_.resize(n);
    for (std::size_t t = 0; t < trials; ++t) out.excluded += ok[t] ? 0 : 1;
    detail::check_exclusions(out.excluded, trials);
    std::vector<double> column;
    column.reserve(trials);
    for (Eigen::Index i = 0; i < n; ++i) {
        column.clear();
        for (std::size_t t = 0; t < trials; ++t)
            if (ok[t]) column.push_back(abs_err(i, static_cast<Eigen::Index>(t)));
        const MeanEstimate est = mean_estimate(column);
        out.mean_abs_error(i) = est.mean;
        out.stderr_(i) = est.stderr_;
    }
    for (Eigen::Index i = 0; i + 1 < n; ++i) {
        const double rise = out.mean_abs_error(i + 1) - out.mean_abs_error(i);
        const double slack = 2.0 * std::hypot(out.stderr_(i), out.stderr_(i + 1));
        if (rise > slack) {
            out.monotone = false;
            out.violations.push_back(i + 1);
        }
    }
    return out;
}

enum class ConstantMethod { ClosedForm, MonteCarlo };

inline std::string_view to_string(ConstantMethod m) {
    return m == ConstantMethod::ClosedForm ? "closed_form" : "monte_carlo";
}

/// RIP-in-expectation constants on K = {1..k} and its complement.
struct RipExpectationReport {
    Eigen::Index k = 0;
    double a_k = 0.0;
    double b_k = 0.0;
    double c0 = 0.0;
    /// E|eta|^2, E|eta_K|^2 and E|eta_{K^C}|^2 under the same draws.
    double error_energy = 0.0;
    double head_energy = 0.0;
    double tail_energy = 0.0;
    std::size_t trials = 0;
    std::size_t excluded = 0;
    ConstantMethod method = ConstantMethod::ClosedForm;
};

namespace detail {

/// Per-trial sums: |Phi eta_K|^2, |eta_K|^2, |Phi eta_Kc|^2, |eta_Kc|^2.
using RipSums = std::array<double, 4>;

inline RipSums closed_form_rip_terms(const SpectralGaussian& model, const SensingMatrix& phi, Eigen::Index k) {
    const Eigen::Index n = model.dim();
    const Eigen::MatrixXd cov = error_covariance(model, phi);
    const Eigen::MatrixXd dense = phi.dense();
    const Eigen::MatrixXd head_cols = dense.leftCols(k);
    const Eigen::MatrixXd tail_cols = dense.rightCols(n - k);
    // trace(Phi R_K Sigma R_K^T Phi^T) = trace(Phi_K Sigma_KK Phi_K^T).
    const double head_measured = (head_cols * cov.topLeftCorner(k, k)).cwiseProduct(head_cols).sum();
    const double tail_measured = (tail_cols * cov.bottomRightCorner(n - k, n - k)).cwiseProduct(tail_cols).sum();
    return {head_measured, cov.diagonal().head(k).sum(), tail_measured, cov.diagonal().tail(n - k).sum()};
}

inline RipSums sampled_rip_terms(const SpectralGaussian& model, const SensingMatrix& phi, Eigen::Index k,
                                 SeededRng& rng) {
    const Eigen::Index n = model.dim();
    const Eigen::VectorXd x = model.draw(rng);
    const Eigen::VectorXd eta = x - map_decode(model, phi, phi.apply(x)).estimate;
    Eigen::VectorXd head = Eigen::VectorXd::Zero(n);
    Eigen::VectorXd tail = Eigen::VectorXd::Zero(n);
    head.head(k) = eta.head(k);
    tail.tail(n - k) = eta.tail(n - k);
    return {phi.apply(head).squaredNorm(), head.squaredNorm(), phi.apply(tail).squaredNorm(), tail.squaredNorm()};
}

}  // namespace detail

/**
 * a_K = E|Phi eta_K|^2 / E|eta_K|^2, b_K likewise on K^C, C0 = 1 + b_K / a_K.
 *
 * ClosedForm averages the trace expressions of Sigma_eta over matrix draws;
 * MonteCarlo draws one matrix and one signal per trial and decodes it.
 * Trial t uses rng.derive(t) in both methods. Throws DegenerateError when
 * either error energy vanishes (relative to trace(S)).
 */
inline RipExpectationReport rip_expectation_constants(const SpectralGaussian& model, const MatrixSource& source,
                                                      Eigen::Index k, std::size_t trials, const SeededRng& rng,
                                                      ConstantMethod method, Parallelism par = {}) {
    const Eigen::Index n = model.dim();
    detail::require(k >= 1 && k < n, "rip_expectation_constants: need 1 <= k < N");
    detail::require(trials >= 1, "rip_expectation_constants: trials must be positive");
    detail::require(source.cols() == n, "rip_expectation_constants: matrix columns differ from model dimension");
    const bool closed_form_single = method == ConstantMethod::ClosedForm && source.is_fixed();
    const std::size_t draws = closed_form_single ? 1 : trials;
    std::vector<detail::RipSums> terms(draws);
    std::vector<char> ok(draws, 0);
    parallel_for(draws, par, [&](std::size_t t) {
        SeededRng child = rng.derive(t);
        try {
            const SensingMatrix phi = source.draw(child);
            terms[t] = method == ConstantMethod::ClosedForm ? detail::closed_form_rip_terms(model, phi, k)
                                                            : detail::sampled_rip_terms(model, phi, k, child);
            ok[t] = 1;
        } catch (const SingularGramError&) {
        }
    });
    std::array<CompensatedSum, 4> sums;
    std::size_t kept = 0;
    for (std::size_t t = 0; t < draws; ++t) {
        if (!ok[t]) continue;
        ++kept;
        for (std::size_t j = 0; j < 4; ++j) sums[j].add(terms[t][j]);
    }
    RipExpectationReport out;
    out.k = k;
    out.trials = trials;
    out.method = method;
    out.excluded = draws - kept;
    detail::check_exclusions(out.excluded, draws);
    const double scale = static_cast<double>(kept);
    out.head_energy = sums[1].value() / scale;
    out.tail_energy = sums[3].value() / scale;
    out.error_energy = out.head_energy + out.tail_energy;
    const double floor = 1e-12 * model.covariance().trace();
    if (!(out.head_energy > floor) || !(out.tail_energy > floor))
        throw DegenerateError("RIP-in-expectation constants undefined: error energy on K or K^C is zero");
    out.a_k = sums[0].value() / sums[1].value();
    out.b_k = sums[2].value() / sums[3].value();
    if (!(out.a_k > 0.0) || !(out.b_k > 0.0))
        throw DegenerateError("RIP-in-expectation constants undefined: measured error energy is zero");
    out.c0 = 1.0 + out.b_k / out.a_k;
    return out;
}

struct NullSpaceCheck {
    double lhs = 0.0;  // E|eta|^2, sampled
    double rhs = 0.0;  // (1 + b_K/a_K) E|eta_{K^C}|^2, constants from the closed form
    double c0 = 0.0;
    bool degenerate = false;
};

/**
 * Both sides of E|eta|^2 = C0 E|eta_{K^C}|^2. The constants come from the
 * closed form on rng.derive(0) draws, the error energies from decoded samples
 * on rng.derive(1) draws, so the two sides are estimated independently.
 */
inline NullSpaceCheck null_space_equality_check(const SpectralGaussian& model, const MatrixSource& source,
                                                Eigen::Index k, std::size_t trials, const SeededRng& rng,
                                                Parallelism par = {}) {
    NullSpaceCheck out;
    RipExpectationReport sampled;
    try {
        sampled = rip_expectation_constants(model, source, k, trials, rng.derive(1), ConstantMethod::MonteCarlo, par);
    } catch (const DegenerateError&) {
        out.degenerate = true;
    }
    if (out.degenerate) return out;  // both sides are zero
    try {
        const RipExpectationReport closed =
            rip_expectation_constants(model, source, k, trials, rng.derive(0), ConstantMethod::ClosedForm, par);
        out.c0 = closed.c0;
    } catch (const DegenerateError&) {
        out.degenerate = true;
        out.lhs = sampled.error_energy;
        return out;
    }
    out.lhs = sampled.error_energy;
    out.rhs = out.c0 * sampled.tail_energy;
    return out;
}

}  // namespace scs
