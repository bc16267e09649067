#pragma once

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <numeric>
#include <span>
#include <vector>

#include "scs/errors.hpp"

namespace scs {

/// Neumaier compensated accumulator.
class CompensatedSum {
public:
    void add(double v) noexcept {
        const double t = sum_ + v;
        if (std::abs(sum_) >= std::abs(v))
            comp_ += (sum_ - t) + v;
        else
            comp_ += (v - t) + sum_;
        sum_ = t;
    }

    double value() const noexcept { return sum_ + comp_; }

private:
    double sum_ = 0.0;
    double comp_ = 0.0;
};

inline double compensated_sum(std::span<const double> values) {
    CompensatedSum s;
    for (double v : values) s.add(v);
    return s.value();
}

/// Mean and standard error of a sample.
struct MeanEstimate {
    double mean = 0.0;
    double stderr_ = 0.0;
    std::size_t count = 0;
};

inline MeanEstimate mean_estimate(std::span<const double> values) {
    MeanEstimate out;
    out.count = values.size();
    if (values.empty()) return out;
    out.mean = compensated_sum(values) / static_cast<double>(values.size());
    if (values.size() > 1) {
        CompensatedSum sq;
        for (double v : values) sq.add((v - out.mean) * (v - out.mean));
        const double var = sq.value() / static_cast<double>(values.size() - 1);
        out.stderr_ = std::sqrt(var / static_cast<double>(values.size()));
    }
    return out;
}

/// Eigen-decomposition of a symmetric matrix with eigenvalues sorted non-increasing.
struct SymmetricEigen {
    Eigen::VectorXd values;
    Eigen::MatrixXd vectors;  // columns
};

/**
 * Symmetric eigensolver. The input is symmetrized first; negative eigenvalues
 * down to -1e-10 * lambda_max are clamped to zero and anything more negative
 * is reported as a NumericError.
 */
inline SymmetricEigen symmetric_eigen(const Eigen::MatrixXd& a) {
    if (a.rows() != a.cols()) throw ArgumentError("symmetric_eigen: matrix is not square");
    const Eigen::MatrixXd sym = 0.5 * (a + a.transpose());
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(sym);
    if (solver.info() != Eigen::Success) throw NumericError("symmetric_eigen: solver did not converge");

    const Eigen::Index n = sym.rows();
    SymmetricEigen out;
    out.values.resize(n);
    out.vectors.resize(n, n);
    // Eigen returns ascending order.
    for (Eigen::Index i = 0; i < n; ++i) {
        out.values(i) = solver.eigenvalues()(n - 1 - i);
        out.vectors.col(i) = solver.eigenvectors().col(n - 1 - i);
    }
    if (n == 0) return out;
    if (!out.values.allFinite()) throw NumericError("symmetric_eigen: non-finite eigenvalue");
    const double scale = std::max(out.values(0), sym.cwiseAbs().maxCoeff());
    for (Eigen::Index i = 0; i < n; ++i) {
        if (out.values(i) < 0.0) {
            if (out.values(i) < -1e-10 * scale)
                throw NumericError("symmetric_eigen: matrix is not positive semidefinite");
            out.values(i) = 0.0;
        }
    }
    return out;
}

/// Largest absolute deviation of `q^T q` from the identity.
inline double orthonormality_error(const Eigen::MatrixXd& q) {
    const Eigen::MatrixXd gram = q.transpose() * q;
    return (gram - Eigen::MatrixXd::Identity(gram.rows(), gram.cols())).cwiseAbs().maxCoeff();
}

}  // namespace scs
