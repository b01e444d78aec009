// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstddef>
#include <numeric>
#include <string>
#include <variant>
#include <vector>

#include <Eigen/Dense>

#include "dmdc/error.hpp"

namespace dmdc {

using Index = Eigen::Index;
using Complex = std::complex<double>;
using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;
using ComplexMatrix = Eigen::MatrixXcd;
using ComplexVector = Eigen::VectorXcd;

// Columns are snapshots at uniform sampling: X, X' and the stacked Omega.
using SnapshotMatrix = Matrix;
// Columns are the inputs applied at the matching snapshot of X.
using ControlMatrix = Matrix;

inline constexpr double kDefaultRankThreshold = 1e-10;
inline constexpr double kZeroEigenvalue = 1e-12;

inline bool all_finite(const Matrix& m) { return m.allFinite(); }

inline void require_finite(const Matrix& m, const char* where) {
    require(all_finite(m), ErrorKind::InvalidInput, std::string(where) + ": matrix contains non-finite entries");
}

/// Either an explicit rank or a relative singular-value threshold.
class TruncationPolicy {
public:
    TruncationPolicy() = default;

    static TruncationPolicy rank(Index k) {
        require(k >= 1, ErrorKind::InvalidInput, "explicit truncation rank must be >= 1, got " + std::to_string(k));
        TruncationPolicy p;
        p.value_ = Rank{k};
        return p;
    }

    static TruncationPolicy threshold(double tau) {
        require(tau > 0.0 && tau < 1.0, ErrorKind::InvalidInput,
                "relative truncation threshold must lie in (0,1), got " + std::to_string(tau));
        TruncationPolicy p;
        p.value_ = Threshold{tau};
        return p;
    }

    [[nodiscard]] bool is_explicit() const noexcept { return std::holds_alternative<Rank>(value_); }
    [[nodiscard]] Index explicit_rank() const { return std::get<Rank>(value_).k; }
    [[nodiscard]] double tau() const { return std::get<Threshold>(value_).tau; }

    [[nodiscard]] std::string describe() const {
        if (is_explicit()) return "rank:" + std::to_string(explicit_rank());
        char buf[64];
        std::snprintf(buf, sizeof buf, "threshold:%.17g", tau());
        return buf;
    }

    friend bool operator==(const TruncationPolicy&, const TruncationPolicy&) = default;

private:
    struct Rank {
        Index k;
        friend bool operator==(const Rank&, const Rank&) = default;
    };
    struct Threshold {
        double tau;
        friend bool operator==(const Threshold&, const Threshold&) = default;
    };
    std::variant<Threshold, Rank> value_{Threshold{kDefaultRankThreshold}};
};

/// Rank-k factors u * diag(sigma) * v^T. Each column of u has its
/// largest-magnitude entry non-negative, which fixes the sign of every
/// singular pair and makes repeated calls bitwise identical.
struct TruncatedSvd {
    Matrix u;
    Vector sigma;
    Matrix v;

    [[nodiscard]] Index rank() const noexcept { return sigma.size(); }

    [[nodiscard]] Matrix reconstruct() const { return u * sigma.asDiagonal() * v.transpose(); }
};

struct EigenDecomposition {
    ComplexVector values;
    ComplexMatrix vectors;

    [[nodiscard]] Index size() const noexcept { return values.size(); }
};

namespace detail {

inline Eigen::JacobiSVD<Matrix> full_svd(const Matrix& m, bool with_vectors) {
    const int options = with_vectors ? (Eigen::ComputeThinU | Eigen::ComputeThinV) : 0;
    return Eigen::JacobiSVD<Matrix>(m, options);
}

inline Index count_above(const Vector& sigma, double tau) {
    if (sigma.size() == 0 || !(sigma(0) > 0.0)) return 0;
    Index k = 0;
    while (k < sigma.size() && sigma(k) / sigma(0) > tau) ++k;
    return k;
}

// Descending magnitude, then descending real part, then descending imaginary part.
inline bool eigen_precedes(const Complex& a, const Complex& b) {
    const double ma = std::abs(a);
    const double mb = std::abs(b);
    if (ma != mb) return ma > mb;
    if (a.real() != b.real()) return a.real() > b.real();
    return a.imag() > b.imag();
}

} // namespace detail

inline TruncatedSvd truncated_svd(const Matrix& m, const TruncationPolicy& trunc = {}) {
    require(m.rows() >= 1 && m.cols() >= 1, ErrorKind::Shape, "truncated_svd: empty matrix");
    require_finite(m, "truncated_svd");

    const auto svd = detail::full_svd(m, true);
    const Vector& s = svd.singularValues();
    require(s.size() > 0 && s(0) > 0.0, ErrorKind::DegenerateMatrix,
            "truncated_svd: matrix has no positive singular value");

    Index k = 0;
    if (trunc.is_explicit()) {
        k = trunc.explicit_rank();
        require(k <= std::min(m.rows(), m.cols()), ErrorKind::InvalidInput,
                "truncated_svd: rank " + std::to_string(k) + " exceeds min(rows, cols) = " +
                    std::to_string(std::min(m.rows(), m.cols())));
        require(s(k - 1) > 0.0, ErrorKind::DegenerateMatrix,
                "truncated_svd: singular value " + std::to_string(k) + " is zero");
    } else {
        k = detail::count_above(s, trunc.tau());
    }

    TruncatedSvd out{svd.matrixU().leftCols(k), s.head(k), svd.matrixV().leftCols(k)};
    for (Index j = 0; j < k; ++j) {
        Index pivot = 0;
        out.u.col(j).cwiseAbs().maxCoeff(&pivot);
        if (out.u(pivot, j) < 0.0) {
            out.u.col(j) *= -1.0;
            out.v.col(j) *= -1.0;
        }
    }
    return out;
}

inline Index numerical_rank(const Matrix& m, double tau = kDefaultRankThreshold) {
    require(tau > 0.0 && tau < 1.0, ErrorKind::InvalidInput, "numerical_rank: threshold must lie in (0,1)");
    require_finite(m, "numerical_rank");
    if (m.size() == 0) return 0;
    return detail::count_above(detail::full_svd(m, false).singularValues(), tau);
}

struct EigOptions {
    Index max_dim = 2048;
};

/// Eigenpairs of a real square matrix, sorted by descending magnitude (ties by
/// real part, then imaginary part). Eigenvectors have unit 2-norm.
inline EigenDecomposition eig(const Matrix& a, const EigOptions& opts = {}) {
    require(a.rows() == a.cols(), ErrorKind::Shape,
            "eig: matrix is " + std::to_string(a.rows()) + "x" + std::to_string(a.cols()) + ", not square");
    require(a.rows() <= opts.max_dim, ErrorKind::InvalidInput,
            "eig: dimension " + std::to_string(a.rows()) + " exceeds cap " + std::to_string(opts.max_dim));
    require_finite(a, "eig");

    const Index n = a.rows();
    EigenDecomposition out;
    if (n == 0) return out;

    Eigen::EigenSolver<Matrix> solver(a, true);
    require(solver.info() == Eigen::Success, ErrorKind::NumericalFailure,
            "eig: QR iteration did not converge for " + std::to_string(n) + "x" + std::to_string(n) + " matrix");

    const ComplexVector values = solver.eigenvalues();
    const ComplexMatrix vectors = solver.eigenvectors();

    std::vector<Index> order(static_cast<std::size_t>(n));
    std::iota(order.begin(), order.end(), Index{0});
    std::stable_sort(order.begin(), order.end(),
                     [&](Index i, Index j) { return detail::eigen_precedes(values(i), values(j)); });

    out.values.resize(n);
    out.vectors.resize(n, n);
    for (Index k = 0; k < n; ++k) {
        const Index src = order[static_cast<std::size_t>(k)];
        out.values(k) = values(src);
        const double norm = vectors.col(src).norm();
        out.vectors.col(k) = norm > 0.0 ? ComplexVector(vectors.col(src) / norm) : ComplexVector(vectors.col(src));
    }
    return out;
}

} // namespace dmdc
