#pragma once

#include <Eigen/Dense>

#include <cmath>
#include <limits>
#include <numbers>
#include <optional>
#include <span>
#include <vector>

#include "scs/decoder.hpp"
#include "scs/errors.hpp"
#include "scs/gaussian_model.hpp"
#include "scs/numeric.hpp"
#include "scs/parallel.hpp"
#include "scs/sensing.hpp"

namespace scs {

/// K weighted Gaussians over patch vectors of length `patch_dim`.
class GmmModel {
public:
    static constexpr double kWeightTolerance = 1e-12;

    GmmModel(std::vector<SpectralGaussian> components, std::vector<double> weights)
        : components_(std::move(components)), weights_(std::move(weights)) {
        detail::require(!components_.empty(), "GmmModel: at least one component is required");
        detail::require(components_.size() == weights_.size(), "GmmModel: one weight per component");
        CompensatedSum total;
        for (std::size_t k = 0; k < components_.size(); ++k) {
            detail::require(components_[k].dim() == components_.front().dim(),
                            "GmmModel: components have different dimensions");
            detail::require(weights_[k] >= 0.0 && std::isfinite(weights_[k]), "GmmModel: weights must be >= 0");
            total.add(weights_[k]);
        }
        detail::require(std::abs(total.value() - 1.0) <= kWeightTolerance, "GmmModel: weights must sum to 1");
    }

    std::size_t size() const noexcept { return components_.size(); }
    Eigen::Index patch_dim() const noexcept { return components_.front().dim(); }
    const SpectralGaussian& component(std::size_t k) const { return components_.at(k); }
    double weight(std::size_t k) const { return weights_.at(k); }
    const std::vector<SpectralGaussian>& components() const noexcept { return components_; }
    const std::vector<double>& weights() const noexcept { return weights_; }

    /// Same shapes, every covariance multiplied by `factor`.
    GmmModel scaled_covariances(double factor) const {
        detail::require(factor > 0.0 && std::isfinite(factor), "GmmModel: scale factor must be positive");
        std::vector<SpectralGaussian> out;
        out.reserve(components_.size());
        for (const auto& c : components_) out.emplace_back(c.mean(), c.basis(), c.eigenvalues() * factor);
        return GmmModel(std::move(out), weights_);
    }

private:
    std::vector<SpectralGaussian> components_;
    std::vector<double> weights_;
};

/// One sensed patch y_i = Phi_i x_i.
struct PatchMeasurement {
    Eigen::VectorXd y;
    SensingMatrix phi;
    std::size_t patch_index = 0;
};

struct EmRecord {
    std::size_t iteration = 0;
    double total_log_posterior = 0.0;
    std::size_t assignment_changes = 0;
    std::size_t flagged_patches = 0;
};

struct EmTrace {
    std::vector<EmRecord> records;

    bool log_posterior_non_decreasing(double slack = 1e-6) const {
        for (std::size_t i = 1; i < records.size(); ++i)
            if (records[i].total_log_posterior < records[i - 1].total_log_posterior - slack) return false;
        return true;
    }
};

struct EmConfig {
    std::size_t components = 20;
    std::size_t max_iters = 5;
    /// Added to every fitted covariance; 1e-6 * 255^2 for 8-bit patches.
    double regularization = 1e-6 * 255.0 * 255.0;
    /// Power-decay exponent of the initial directional spectra.
    double init_decay = 2.0;
    /// Fit covariances to the posterior (estimate scatter plus each patch's
    /// decoding error covariance) instead of to the point estimates alone.
    /// The point-estimate fit shrinks the unobserved directions every
    /// iteration and can lower the log-posterior.
    bool posterior_covariance = true;
    Parallelism parallelism{};
};

namespace detail {

/// Patch content of a straight edge at `theta_deg` passing `offset` pixels from the centre.
inline Eigen::VectorXd edge_pattern(Eigen::Index side, double theta_deg, double offset) {
    const double theta = theta_deg * std::numbers::pi / 180.0;
    const double nx = std::cos(theta);
    const double ny = std::sin(theta);
    const double centre = 0.5 * static_cast<double>(side - 1);
    Eigen::VectorXd v(side * side);
    for (Eigen::Index r = 0; r < side; ++r)
        for (Eigen::Index c = 0; c < side; ++c) {
            const double d = (static_cast<double>(c) - centre) * nx + (static_cast<double>(r) - centre) * ny - offset;
            v(r * side + c) = std::tanh(2.0 * d);  // about one pixel of blur
        }
    return v;
}

/// Orthonormal eigenbasis of one orientation: the constant patch first, then edge PCA.
inline Eigen::MatrixXd directional_basis(Eigen::Index side, double theta_deg) {
    const Eigen::Index n = side * side;
    const double half = 0.5 * static_cast<double>(side);
    Eigen::MatrixXd scatter = Eigen::MatrixXd::Zero(n, n);
    int count = 0;
    for (double offset = -half; offset <= half; offset += 0.25, ++count) {
        Eigen::VectorXd p = edge_pattern(side, theta_deg, offset);
        p.array() -= p.mean();
        scatter += p * p.transpose();
    }
    scatter /= std::max(scatter.trace(), 1e-300);
    // The constant direction is a null vector of the centred scatter; lift it above everything else.
    scatter += 2.0 * Eigen::MatrixXd::Constant(n, n, 1.0 / static_cast<double>(n));
    return symmetric_eigen(scatter).vectors;
}

inline double log_evidence_from_gram(Eigen::MatrixXd gram, const Eigen::VectorXd& residual, double log_weight) {
    const Eigen::Index m = gram.rows();
    if (m == 0) return log_weight;
    const double tau = 1e-8 * gram.trace() / static_cast<double>(m);
    gram.diagonal().array() += tau;
    Eigen::LLT<Eigen::MatrixXd> llt(gram);
    if (llt.info() != Eigen::Success) throw NumericError("component_log_evidence: measured covariance is not PSD");
    const auto& l = llt.matrixL();
    double log_det = 0.0;
    for (Eigen::Index i = 0; i < m; ++i) log_det += std::log(llt.matrixLLT()(i, i));
    log_det *= 2.0;
    const double quad = l.solve(residual).squaredNorm();
    const double value =
        log_weight - 0.5 * (static_cast<double>(m) * std::log(2.0 * std::numbers::pi) + log_det + quad);
    if (std::isnan(value)) throw NumericError("component_log_evidence: non-finite evidence");
    return value;
}

inline Eigen::MatrixXd measured_covariance(const SensingMatrix& phi, const Eigen::MatrixXd& cov) {
    if (phi.is_selection()) return cov(phi.selected(), phi.selected());
    return phi.right_multiply_transpose(phi.left_multiply(cov));
}

}  // namespace detail

/**
 * Initial mixture: K-1 oriented components at angles k*180/(K-1) degrees
 * whose bases come from PCA of synthetic edge patches, plus one isotropic
 * component (constant patch dominant) for flat regions. Every spectrum is
 * normalized to lambda_1 = 1; all means are zero; weights are uniform.
 */
inline GmmModel init_directional(std::size_t k_components, Eigen::Index patch_side, double decay_alpha) {
    detail::require(k_components >= 1, "init_directional: K must be positive");
    detail::require(patch_side >= 1, "init_directional: patch side must be positive");
    const Eigen::Index n = patch_side * patch_side;
    const Spectrum decay = power_decay_spectrum(n, decay_alpha);
    std::vector<SpectralGaussian> components;
    components.reserve(k_components);
    const std::size_t oriented = k_components - 1;
    for (std::size_t k = 0; k < oriented; ++k) {
        const double theta = static_cast<double>(k) * 180.0 / static_cast<double>(oriented);
        components.emplace_back(Eigen::VectorXd::Zero(n), detail::directional_basis(patch_side, theta),
                                decay.eigenvalues());
    }
    Eigen::VectorXd flat = Eigen::VectorXd::Constant(n, n > 1 ? (decay.eigenvalues().sum() - 1.0) / static_cast<double>(n - 1) : 1.0);
    flat(0) = 1.0;
    components.emplace_back(Eigen::VectorXd::Zero(n), dct2d_basis(patch_side).entries(), flat);
    std::vector<double> weights(k_components, 1.0 / static_cast<double>(k_components));
    return GmmModel(std::move(components), std::move(weights));
}

/// log w + log N(y; Phi mu, Phi Sigma Phi^T + tau I), tau = 1e-8 trace / M.
inline double component_log_evidence(const Eigen::VectorXd& y, const SensingMatrix& phi,
                                     const SpectralGaussian& component, double weight) {
    detail::require(phi.cols() == component.dim(), "component_log_evidence: dimension mismatch");
    detail::require(y.size() == phi.rows(), "component_log_evidence: measurement length mismatch");
    const double log_weight = weight > 0.0 ? std::log(weight) : -std::numeric_limits<double>::infinity();
    return detail::log_evidence_from_gram(detail::measured_covariance(phi, component.covariance()),
                                          y - phi.apply(component.mean()), log_weight);
}

struct EStepResult {
    std::vector<std::size_t> assignments;
    Eigen::MatrixXd estimates;  // patch_dim x patches
    double total_log_posterior = 0.0;
    std::vector<std::size_t> flagged;
};

/**
 * Selects, for every patch, the component with the largest measured-domain
 * evidence (lowest index on ties) and decodes the patch with that
 * component's MAP filter.
 */
inline EStepResult e_step(const GmmModel& gmm, std::span<const PatchMeasurement> measurements, Parallelism par = {}) {
    detail::require(!measurements.empty(), "e_step: no measurements");
    const Eigen::Index n = gmm.patch_dim();
    const std::size_t count = measurements.size();
    EStepResult out;
    out.assignments.assign(count, 0);
    out.estimates.resize(n, static_cast<Eigen::Index>(count));
    std::vector<double> best_evidence(count, 0.0);
    std::vector<char> failed(count, 0);

    Eigen::VectorXd prior_mean = Eigen::VectorXd::Zero(n);
    for (std::size_t k = 0; k < gmm.size(); ++k) prior_mean += gmm.weight(k) * gmm.component(k).mean();

    parallel_for(count, par, [&](std::size_t i) {
        const PatchMeasurement& meas = measurements[i];
        detail::require(meas.phi.cols() == n, "e_step: patch dimension differs from the model");
        double best = -std::numeric_limits<double>::infinity();
        std::size_t arg = gmm.size();
        for (std::size_t k = 0; k < gmm.size(); ++k) {
            if (!(gmm.weight(k) > 0.0)) continue;
            try {
                const double ev = component_log_evidence(meas.y, meas.phi, gmm.component(k), gmm.weight(k));
                if (ev > best) {
                    best = ev;
                    arg = k;
                }
            } catch (const NumericError&) {
            }
        }
        if (arg < gmm.size()) {
            try {
                out.estimates.col(static_cast<Eigen::Index>(i)) =
                    map_decode(gmm.component(arg), meas.phi, meas.y).estimate;
                out.assignments[i] = arg;
                best_evidence[i] = best;
                return;
            } catch (const SingularGramError&) {
            }
        }
        failed[i] = 1;
        out.estimates.col(static_cast<Eigen::Index>(i)) = prior_mean;
    });

    CompensatedSum total;
    for (std::size_t i = 0; i < count; ++i) {
        if (failed[i]) {
            out.flagged.push_back(i);
            continue;
        }
        total.add(best_evidence[i]);
    }
    out.total_log_posterior = total.value();
    return out;
}

/**
 * Refits every component on the estimates assigned to it. Components with
 * fewer than N/2 patches keep their previous mean and covariance; weights are
 * always the assignment frequencies.
 */
inline GmmModel m_step(const Eigen::MatrixXd& estimates, std::span<const std::size_t> assignments,
                       const GmmModel& previous, double regularization, Parallelism par = {},
                       std::span<const PatchMeasurement> measurements = {}) {
    detail::require(estimates.cols() >= 1, "m_step: no estimates");
    detail::require(static_cast<std::size_t>(estimates.cols()) == assignments.size(),
                    "m_step: one assignment per estimate");
    detail::require(estimates.rows() == previous.patch_dim(), "m_step: estimate dimension differs from the model");
    const std::size_t k_count = previous.size();
    std::vector<std::vector<Eigen::Index>> members(k_count);
    for (std::size_t i = 0; i < assignments.size(); ++i) {
        detail::require(assignments[i] < k_count, "m_step: assignment out of range");
        members[assignments[i]].push_back(static_cast<Eigen::Index>(i));
    }
    const double total = static_cast<double>(assignments.size());
    const auto min_members = static_cast<std::size_t>(previous.patch_dim() / 2);

    std::vector<std::optional<SpectralGaussian>> fitted(k_count);
    parallel_for(k_count, par, [&](std::size_t k) {
        if (members[k].size() < std::max<std::size_t>(min_members, 1)) return;
        if (measurements.empty()) {
            fitted[k] = fit_gaussian_columns(estimates(Eigen::all, members[k]), regularization);
            return;
        }
        const SpectralGaussian& prior = previous.component(k);
        const Eigen::Index n = prior.dim();
        const double count = static_cast<double>(members[k].size());
        const Eigen::MatrixXd x = estimates(Eigen::all, members[k]);
        Eigen::VectorXd mean = x.rowwise().sum() / count;
        const Eigen::MatrixXd centered = x.colwise() - mean;
        Eigen::MatrixXd cov = centered * centered.transpose();
        Eigen::MatrixXd explained = Eigen::MatrixXd::Zero(n, n);
        for (Eigen::Index i : members[k]) {
            const PatchMeasurement& m = measurements[static_cast<std::size_t>(i)];
            if (m.phi.rows() == 0) continue;
            const Eigen::MatrixXd phi_s = m.phi.left_multiply(prior.covariance());
            const GramFactor f = factor_gram(m.phi.right_multiply_transpose(phi_s));
            const Eigen::MatrixXd z = f.llt.matrixL().solve(phi_s);
            explained.noalias() += z.transpose() * z;
        }
        cov += count * prior.covariance() - explained;
        cov /= count;
        cov.diagonal().array() += regularization;
        fitted[k] = SpectralGaussian::from_covariance(std::move(mean), cov);
    });

    std::vector<SpectralGaussian> components;
    std::vector<double> weights(k_count);
    components.reserve(k_count);
    CompensatedSum weight_sum;
    for (std::size_t k = 0; k < k_count; ++k) {
        components.push_back(fitted[k] ? *fitted[k] : previous.component(k));
        weights[k] = static_cast<double>(members[k].size()) / total;
        weight_sum.add(weights[k]);
    }
    // Integer counts over a common total; renormalize the last rounding ulp.
    const double drift = weight_sum.value() - 1.0;
    for (std::size_t k = k_count; k-- > 0;)
        if (weights[k] > drift) {
            weights[k] -= drift;
            break;
        }
    return GmmModel(std::move(components), std::move(weights));
}

struct EmResult {
    Eigen::MatrixXd estimates;
    std::vector<std::size_t> assignments;
    GmmModel model;
    EmTrace trace;
};

/// Scales a mixture so that its predicted measurement energy matches the observed one.
inline GmmModel match_measurement_energy(const GmmModel& gmm, std::span<const PatchMeasurement> measurements) {
    CompensatedSum observed;
    CompensatedSum predicted;
    for (const auto& m : measurements) {
        observed.add(m.y.squaredNorm());
        for (std::size_t k = 0; k < gmm.size(); ++k) {
            const auto& c = gmm.component(k);
            const Eigen::VectorXd mu = m.phi.apply(c.mean());
            predicted.add(gmm.weight(k) * (detail::measured_covariance(m.phi, c.covariance()).trace() + mu.squaredNorm()));
        }
    }
    if (!(observed.value() > 0.0) || !(predicted.value() > 0.0)) return gmm;
    return gmm.scaled_covariances(observed.value() / predicted.value());
}

/**
 * MAP-EM piecewise linear decoding. Starts from init_directional (rescaled to
 * the measurement energy), then alternates e_step and m_step until
 * `max_iters` E-steps have run or no assignment changes.
 */
inline EmResult map_em_decode(std::span<const PatchMeasurement> measurements, Eigen::Index patch_side,
                              const EmConfig& config) {
    detail::require(!measurements.empty(), "map_em_decode: no measurements");
    detail::require(config.max_iters >= 1, "map_em_decode: max_iters must be positive");
    GmmModel model = match_measurement_energy(
        init_directional(config.components, patch_side, config.init_decay), measurements);
    EmTrace trace;
    std::vector<std::size_t> previous;
    for (std::size_t iter = 1;; ++iter) {
        EStepResult e = e_step(model, measurements, config.parallelism);
        std::size_t changes = e.assignments.size();
        if (!previous.empty()) {
            changes = 0;
            for (std::size_t i = 0; i < e.assignments.size(); ++i) changes += e.assignments[i] != previous[i];
        }
        trace.records.push_back({iter, e.total_log_posterior, changes, e.flagged.size()});
        if (iter >= config.max_iters || changes == 0)
            return EmResult{std::move(e.estimates), std::move(e.assignments), std::move(model), std::move(trace)};
        model = m_step(e.estimates, e.assignments, model, config.regularization, config.parallelism,
                       config.posterior_covariance ? measurements : std::span<const PatchMeasurement>{});
        previous = std::move(e.assignments);
    }
}

}  // namespace scs
