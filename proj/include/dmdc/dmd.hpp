// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <string>
#include <utility>

#include "dmdc/linalg.hpp"

namespace dmdc {

struct DmdOptions {
    /// Scale every mode to unit 2-norm. Off by default: the exact lift
    /// already fixes a meaningful scale.
    bool normalize_modes = false;
    EigOptions eig{};
};

/// Largest state dimension for which the full n x n operator may be formed.
inline constexpr Index kDenseOperatorLimit = 500;

struct DmdModel {
    Matrix a_tilde;     // r x r
    Matrix basis;       // n x r, left singular vectors of X
    EigenDecomposition eigen;
    ComplexMatrix modes; // n x r
    Index rank = 0;
    double dt = 1.0;
    Matrix lift;        // n x r, X' V S^-1; the full operator is lift * basis^T

    [[nodiscard]] Index state_dim() const noexcept { return basis.rows(); }
};

struct SnapshotPair {
    SnapshotMatrix x;
    SnapshotMatrix xp;
};

inline SnapshotPair split_trajectory(const Matrix& traj) {
    require(traj.cols() >= 2, ErrorKind::InsufficientData,
            "split_trajectory: need at least 2 snapshots, got " + std::to_string(traj.cols()));
    const Index m = traj.cols();
    return {traj.leftCols(m - 1), traj.rightCols(m - 1)};
}

namespace detail {

// Exact-DMD lift: phi = lift * w for nonzero eigenvalues, zero_basis * w otherwise.
inline ComplexMatrix lift_modes(const Matrix& lift, const Matrix& zero_basis, const EigenDecomposition& eigen,
                                bool normalize) {
    const Index r = eigen.size();
    ComplexMatrix modes(lift.rows(), r);
    const ComplexMatrix lift_c = lift.cast<Complex>();
    const ComplexMatrix zero_c = zero_basis.cast<Complex>();
    for (Index k = 0; k < r; ++k) {
        if (std::abs(eigen.values(k)) > kZeroEigenvalue)
            modes.col(k) = lift_c * eigen.vectors.col(k);
        else
            modes.col(k) = zero_c * eigen.vectors.col(k);
        if (normalize) {
            const double norm = modes.col(k).norm();
            if (norm > 0.0) modes.col(k) /= norm;
        }
    }
    return modes;
}

inline void require_same_shape(const Matrix& a, const Matrix& b, const char* where) {
    require(a.rows() == b.rows() && a.cols() == b.cols(), ErrorKind::Shape,
            std::string(where) + ": X is " + std::to_string(a.rows()) + "x" + std::to_string(a.cols()) +
                " but X' is " + std::to_string(b.rows()) + "x" + std::to_string(b.cols()));
    require(a.cols() >= 1, ErrorKind::InsufficientData, std::string(where) + ": no snapshot columns");
}

} // namespace detail

/// Modes of the reduced operator lifted back to state space.
inline ComplexMatrix dmd_modes(const EigenDecomposition& eigen, const Matrix& lift, const Matrix& basis,
                               bool normalize = false) {
    return detail::lift_modes(lift, basis, eigen, normalize);
}

inline DmdModel dmd_fit(const SnapshotMatrix& x, const SnapshotMatrix& xp, const TruncationPolicy& trunc = {},
                        double dt = 1.0, const DmdOptions& opts = {}) {
    detail::require_same_shape(x, xp, "dmd_fit");
    require_finite(xp, "dmd_fit");
    const TruncatedSvd svd = truncated_svd(x, trunc);

    DmdModel model;
    model.rank = svd.rank();
    model.dt = dt;
    model.basis = svd.u;
    model.lift = xp * svd.v * svd.sigma.cwiseInverse().asDiagonal();
    model.a_tilde = svd.u.transpose() * model.lift;
    model.eigen = eig(model.a_tilde, opts.eig);
    model.modes = dmd_modes(model.eigen, model.lift, model.basis, opts.normalize_modes);
    return model;
}

/// The full n x n operator. Only available for n <= dense_limit.
inline Matrix full_operator(const DmdModel& model, Index dense_limit = kDenseOperatorLimit) {
    require(model.state_dim() <= dense_limit, ErrorKind::InvalidInput,
            "full_operator: state dimension " + std::to_string(model.state_dim()) + " exceeds dense limit " +
                std::to_string(dense_limit));
    return model.lift * model.basis.transpose();
}

} // namespace dmdc
