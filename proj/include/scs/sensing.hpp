#pragma once

#include <Eigen/Dense>

#include <cmath>
#include <numbers>
#include <numeric>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "scs/errors.hpp"
#include "scs/rng.hpp"
#include "scs/numeric.hpp"

namespace scs {

enum class SensingKind { GaussianIID, Bernoulli, Subsampling, Composed };
enum class BasisKind { Identity, DCT, DCT2D };

inline std::string_view to_string(SensingKind kind) {
    switch (kind) {
        case SensingKind::GaussianIID: return "gaussian";
        case SensingKind::Bernoulli: return "bernoulli";
        case SensingKind::Subsampling: return "subsampling";
        case SensingKind::Composed: return "composed";
    }
    return "unknown";
}

inline SensingKind sensing_kind_from_string(std::string_view name) {
    if (name == "gaussian") return SensingKind::GaussianIID;
    if (name == "bernoulli") return SensingKind::Bernoulli;
    if (name == "subsampling") return SensingKind::Subsampling;
    if (name == "composed") return SensingKind::Composed;
    throw ArgumentError("unknown sensing kind '" + std::string(name) + "'");
}

inline std::string_view to_string(BasisKind kind) {
    switch (kind) {
        case BasisKind::Identity: return "identity";
        case BasisKind::DCT: return "dct";
        case BasisKind::DCT2D: return "dct2d";
    }
    return "unknown";
}

inline BasisKind basis_kind_from_string(std::string_view name) {
    if (name == "identity") return BasisKind::Identity;
    if (name == "dct") return BasisKind::DCT;
    if (name == "dct2d") return BasisKind::DCT2D;
    throw ArgumentError("unknown basis kind '" + std::string(name) + "'");
}

/**
 * M x N measurement operator.
 *
 * Random Gaussian/Bernoulli and composed operators are stored densely.
 * Subsampling operators are stored as the list of selected columns (row r
 * picks x[selected[r]]); `dense()` materializes them. The products below
 * take the structured path for selections, which is what keeps
 * sliding-window image decoding within memory and time budgets.
 */
class SensingMatrix {
public:
    static SensingMatrix from_dense(Eigen::MatrixXd entries, SensingKind kind) {
        detail::require(entries.rows() >= 1 && entries.cols() >= 1, "SensingMatrix: empty matrix");
        detail::require(entries.rows() <= entries.cols(), "SensingMatrix: rows must not exceed columns");
        detail::require(entries.allFinite(), "SensingMatrix: non-finite entries");
        if (kind == SensingKind::Subsampling) return selection_from_dense(entries);
        SensingMatrix out;
        out.rows_ = entries.rows();
        out.cols_ = entries.cols();
        out.kind_ = kind;
        out.entries_ = std::move(entries);
        return out;
    }

    /// Row r selects coordinate `selected[r]`. Indices must be distinct and < cols.
    /// An empty selection is allowed here: it is the operator of a patch with no sensed pixel.
    static SensingMatrix selection(std::vector<Eigen::Index> selected, Eigen::Index cols) {
        detail::require(cols >= 1, "SensingMatrix: selection needs at least one column");
        detail::require(static_cast<Eigen::Index>(selected.size()) <= cols, "SensingMatrix: too many rows");
        std::vector<char> seen(static_cast<std::size_t>(cols), 0);
        for (Eigen::Index c : selected) {
            detail::require(c >= 0 && c < cols, "SensingMatrix: selected column out of range");
            detail::require(!seen[static_cast<std::size_t>(c)], "SensingMatrix: selected columns must be distinct");
            seen[static_cast<std::size_t>(c)] = 1;
        }
        SensingMatrix out;
        out.rows_ = static_cast<Eigen::Index>(selected.size());
        out.cols_ = cols;
        out.kind_ = SensingKind::Subsampling;
        out.selected_ = std::move(selected);
        return out;
    }

    Eigen::Index rows() const noexcept { return rows_; }
    Eigen::Index cols() const noexcept { return cols_; }
    SensingKind kind() const noexcept { return kind_; }
    bool is_selection() const noexcept { return kind_ == SensingKind::Subsampling; }
    std::span<const Eigen::Index> selected() const noexcept { return selected_; }

    Eigen::MatrixXd dense() const {
        if (!is_selection()) return entries_;
        Eigen::MatrixXd out = Eigen::MatrixXd::Zero(rows_, cols_);
        for (Eigen::Index r = 0; r < rows_; ++r) out(r, selected_[static_cast<std::size_t>(r)]) = 1.0;
        return out;
    }

    /// y = Phi x.
    Eigen::VectorXd apply(const Eigen::VectorXd& x) const {
        detail::require(x.size() == cols_, "sense: signal length differs from matrix columns");
        if (!is_selection()) return entries_ * x;
        Eigen::VectorXd y(rows_);
        for (Eigen::Index r = 0; r < rows_; ++r) y(r) = x(selected_[static_cast<std::size_t>(r)]);
        return y;
    }

    /// Phi * a, for `a` with `cols()` rows.
    Eigen::MatrixXd left_multiply(const Eigen::MatrixXd& a) const {
        detail::require(a.rows() == cols_, "SensingMatrix: dimension mismatch in Phi * A");
        if (!is_selection()) return entries_ * a;
        return a(selected_, Eigen::all);
    }

    /// a * Phi^T, for `a` with `cols()` columns.
    Eigen::MatrixXd right_multiply_transpose(const Eigen::MatrixXd& a) const {
        detail::require(a.cols() == cols_, "SensingMatrix: dimension mismatch in A * Phi^T");
        if (!is_selection()) return a * entries_.transpose();
        return a(Eigen::all, selected_);
    }

    /// Phi^T w.
    Eigen::VectorXd transpose_apply(const Eigen::VectorXd& w) const {
        detail::require(w.size() == rows_, "SensingMatrix: dimension mismatch in Phi^T w");
        if (!is_selection()) return entries_.transpose() * w;
        Eigen::VectorXd out = Eigen::VectorXd::Zero(cols_);
        for (Eigen::Index r = 0; r < rows_; ++r) out(selected_[static_cast<std::size_t>(r)]) = w(r);
        return out;
    }

private:
    SensingMatrix() = default;

    static SensingMatrix selection_from_dense(const Eigen::MatrixXd& entries) {
        std::vector<Eigen::Index> selected;
        selected.reserve(static_cast<std::size_t>(entries.rows()));
        for (Eigen::Index r = 0; r < entries.rows(); ++r) {
            Eigen::Index hit = -1;
            for (Eigen::Index c = 0; c < entries.cols(); ++c) {
                const double v = entries(r, c);
                if (v == 0.0) continue;
                detail::require(v == 1.0 && hit < 0, "SensingMatrix: subsampling rows must hold a single 1");
                hit = c;
            }
            detail::require(hit >= 0, "SensingMatrix: subsampling row without a 1");
            selected.push_back(hit);
        }
        return selection(std::move(selected), entries.cols());
    }

    Eigen::Index rows_ = 0;
    Eigen::Index cols_ = 0;
    SensingKind kind_ = SensingKind::Composed;
    Eigen::MatrixXd entries_;
    std::vector<Eigen::Index> selected_;
};

/// Orthonormal N x N change of basis.
class Basis {
public:
    Basis(Eigen::MatrixXd entries, BasisKind kind) : entries_(std::move(entries)), kind_(kind) {
        detail::require(entries_.rows() >= 1 && entries_.rows() == entries_.cols(), "Basis: matrix must be square");
        detail::require(entries_.allFinite() && orthonormality_error(entries_) <= kOrthonormalityTolerance,
                        "Basis: matrix is not orthonormal");
    }

    static constexpr double kOrthonormalityTolerance = 1e-10;

    static Basis identity(Eigen::Index n) {
        detail::require(n >= 1, "Basis: dimension must be positive");
        return Basis(Eigen::MatrixXd::Identity(n, n), BasisKind::Identity);
    }

    Eigen::Index dim() const noexcept { return entries_.rows(); }
    const Eigen::MatrixXd& entries() const noexcept { return entries_; }
    BasisKind kind() const noexcept { return kind_; }

private:
    Eigen::MatrixXd entries_;
    BasisKind kind_;
};

/// iid N(0, 1/M) entries, so that E|Phi x|^2 = |x|^2.
inline SensingMatrix gaussian_matrix(Eigen::Index m, Eigen::Index n, SeededRng& rng) {
    detail::require(m >= 1 && n >= 1, "gaussian_matrix: sizes must be positive");
    detail::require(m <= n, "gaussian_matrix: M must not exceed N");
    const double scale = 1.0 / std::sqrt(static_cast<double>(m));
    Eigen::MatrixXd entries(m, n);
    for (Eigen::Index r = 0; r < m; ++r)
        for (Eigen::Index c = 0; c < n; ++c) entries(r, c) = scale * rng.normal();
    return SensingMatrix::from_dense(std::move(entries), SensingKind::GaussianIID);
}

/// Entries uniform on {+1/sqrt(M), -1/sqrt(M)}.
inline SensingMatrix bernoulli_matrix(Eigen::Index m, Eigen::Index n, SeededRng& rng) {
    detail::require(m >= 1 && n >= 1, "bernoulli_matrix: sizes must be positive");
    detail::require(m <= n, "bernoulli_matrix: M must not exceed N");
    const double scale = 1.0 / std::sqrt(static_cast<double>(m));
    Eigen::MatrixXd entries(m, n);
    for (Eigen::Index r = 0; r < m; ++r)
        for (Eigen::Index c = 0; c < n; ++c) entries(r, c) = rng.coin() ? scale : -scale;
    return SensingMatrix::from_dense(std::move(entries), SensingKind::Bernoulli);
}

/// M distinct coordinates drawn uniformly without replacement (partial Fisher-Yates).
inline SensingMatrix subsampling_matrix(Eigen::Index m, Eigen::Index n, SeededRng& rng) {
    detail::require(m >= 1 && n >= 1, "subsampling_matrix: sizes must be positive");
    detail::require(m <= n, "subsampling_matrix: M must not exceed N");
    std::vector<Eigen::Index> pool(static_cast<std::size_t>(n));
    std::iota(pool.begin(), pool.end(), Eigen::Index{0});
    for (Eigen::Index i = 0; i < m; ++i) {
        const auto j = i + static_cast<Eigen::Index>(rng.below(static_cast<std::uint64_t>(n - i)));
        std::swap(pool[static_cast<std::size_t>(i)], pool[static_cast<std::size_t>(j)]);
    }
    pool.resize(static_cast<std::size_t>(m));
    return SensingMatrix::selection(std::move(pool), n);
}

/**
 * Orthonormal DCT-II analysis matrix: row 0 is 1/sqrt(N), row j >= 1 is
 * sqrt(2/N) cos(pi (2n+1) j / (2N)).
 */
inline Basis dct_basis(Eigen::Index n) {
    detail::require(n >= 1, "dct_basis: N must be positive");
    Eigen::MatrixXd d(n, n);
    const double nn = static_cast<double>(n);
    for (Eigen::Index j = 0; j < n; ++j) {
        const double scale = j == 0 ? std::sqrt(1.0 / nn) : std::sqrt(2.0 / nn);
        for (Eigen::Index i = 0; i < n; ++i)
            d(j, i) = scale * std::cos(std::numbers::pi * (2.0 * static_cast<double>(i) + 1.0) *
                                       static_cast<double>(j) / (2.0 * nn));
    }
    return Basis(std::move(d), BasisKind::DCT);
}

/// JPEG zigzag traversal of a side x side grid, as (row, col) pairs.
inline std::vector<std::pair<Eigen::Index, Eigen::Index>> zigzag_order(Eigen::Index side) {
    std::vector<std::pair<Eigen::Index, Eigen::Index>> order;
    order.reserve(static_cast<std::size_t>(side * side));
    for (Eigen::Index s = 0; s <= 2 * (side - 1); ++s) {
        const Eigen::Index lo = std::max<Eigen::Index>(0, s - side + 1);
        const Eigen::Index hi = std::min<Eigen::Index>(s, side - 1);
        if (s % 2 == 1) {
            for (Eigen::Index r = lo; r <= hi; ++r) order.emplace_back(r, s - r);
        } else {
            for (Eigen::Index c = lo; c <= hi; ++c) order.emplace_back(s - c, c);
        }
    }
    return order;
}

/**
 * Separable 2-D DCT synthesis basis for side x side patches (N = side^2,
 * row-major pixel order). Column m is the m-th cosine atom in zigzag
 * frequency order, so column 0 is the constant patch. Coefficient vectors
 * a map to patches as x = entries * a.
 */
inline Basis dct2d_basis(Eigen::Index side) {
    detail::require(side >= 1, "dct2d_basis: side must be positive");
    const Eigen::MatrixXd d = dct_basis(side).entries();
    const auto order = zigzag_order(side);
    const Eigen::Index n = side * side;
    Eigen::MatrixXd atoms(n, n);
    for (Eigen::Index m = 0; m < n; ++m) {
        const auto [u, v] = order[static_cast<std::size_t>(m)];
        for (Eigen::Index r = 0; r < side; ++r)
            for (Eigen::Index c = 0; c < side; ++c) atoms(r * side + c, m) = d(u, r) * d(v, c);
    }
    return Basis(std::move(atoms), BasisKind::DCT2D);
}

/// Phi * Psi.
inline SensingMatrix compose(const SensingMatrix& phi, const Basis& psi) {
    detail::require(phi.cols() == psi.dim(), "compose: matrix columns differ from basis dimension");
    return SensingMatrix::from_dense(phi.left_multiply(psi.entries()), SensingKind::Composed);
}

inline Eigen::VectorXd sense(const SensingMatrix& phi, const Eigen::VectorXd& x) { return phi.apply(x); }

}  // namespace scs
