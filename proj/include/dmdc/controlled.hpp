// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <string>
#include <utility>

#include "dmdc/dmd.hpp"
#include "dmdc/linalg.hpp"

namespace dmdc {

enum class DmdcVariant { KnownInputMap, UnknownInputMap };

/// Reduced model x~_{k+1} = a_tilde x~_k + b_tilde u_k with lift x = basis x~.
///
/// For the unknown-input-map fit, `basis` spans the output space (left
/// singular vectors of X') and the input-space factors of Omega = [X; Y] are
/// kept so the full operators can be formed for small n. For the known-map
/// fit, `basis` comes from X and `state_factor` is that same basis.
struct DmdcModel {
    DmdcVariant variant = DmdcVariant::UnknownInputMap;
    Matrix a_tilde;      // r x r
    Matrix b_tilde;      // r x l
    Matrix basis;        // n x r
    EigenDecomposition eigen;
    ComplexMatrix modes; // n x r
    Index input_rank = 0;  // p
    Index output_rank = 0; // r
    double dt = 1.0;

    Matrix lift;           // n x p: X' V S^-1 (or (X' - B Y) V S^-1)
    Matrix state_factor;   // n x p: U1
    Matrix control_factor; // l x p: U2 (unknown map only)
    Matrix known_b;        // n x l (known map only)

    [[nodiscard]] Index state_dim() const noexcept { return basis.rows(); }
    [[nodiscard]] Index input_dim() const noexcept { return b_tilde.cols(); }
};

struct IdentifiabilityReport {
    Index omega_rank = 0;
    Index required_rank = 0;
    bool collinearity_flag = false;
};

struct DmdcFit {
    DmdcModel model;
    IdentifiabilityReport report;
};

struct DmdcOptions {
    bool normalize_modes = false;
    EigOptions eig{};
};

inline SnapshotMatrix stack_omega(const SnapshotMatrix& x, const ControlMatrix& upsilon) {
    require(x.cols() == upsilon.cols() || upsilon.rows() == 0, ErrorKind::Shape,
            "stack_omega: X has " + std::to_string(x.cols()) + " columns but the control matrix has " +
                std::to_string(upsilon.cols()));
    if (upsilon.rows() == 0) return x;
    SnapshotMatrix omega(x.rows() + upsilon.rows(), x.cols());
    omega << x, upsilon;
    return omega;
}

inline IdentifiabilityReport check_identifiability(const SnapshotMatrix& x, const ControlMatrix& upsilon) {
    IdentifiabilityReport report;
    report.omega_rank = numerical_rank(stack_omega(x, upsilon), kDefaultRankThreshold);
    report.required_rank = numerical_rank(x, kDefaultRankThreshold) + upsilon.rows();
    report.collinearity_flag = report.omega_rank < report.required_rank;
    return report;
}

namespace detail {

inline void require_control_shape(const SnapshotMatrix& x, const SnapshotMatrix& xp, const ControlMatrix& upsilon,
                                  const char* where) {
    require_same_shape(x, xp, where);
    require(upsilon.rows() == 0 || upsilon.cols() == x.cols(), ErrorKind::Shape,
            std::string(where) + ": control matrix has " + std::to_string(upsilon.cols()) + " columns, expected " +
                std::to_string(x.cols()));
    require_finite(xp, where);
    require_finite(upsilon, where);
}

} // namespace detail

/// Dynamics with a known input map: regress X' - B Y onto X.
inline DmdcModel dmdc_fit_known_b(const SnapshotMatrix& x, const SnapshotMatrix& xp, const ControlMatrix& upsilon,
                                  const Matrix& b, const TruncationPolicy& trunc = {}, double dt = 1.0,
                                  const DmdcOptions& opts = {}) {
    detail::require_control_shape(x, xp, upsilon, "dmdc_fit_known_b");
    require(b.rows() == x.rows() && b.cols() == upsilon.rows(), ErrorKind::Shape,
            "dmdc_fit_known_b: B is " + std::to_string(b.rows()) + "x" + std::to_string(b.cols()) + ", expected " +
                std::to_string(x.rows()) + "x" + std::to_string(upsilon.rows()));
    require_finite(b, "dmdc_fit_known_b");

    const SnapshotMatrix unforced = upsilon.rows() == 0 ? xp : SnapshotMatrix(xp - b * upsilon);
    const TruncatedSvd svd = truncated_svd(x, trunc);

    DmdcModel model;
    model.variant = DmdcVariant::KnownInputMap;
    model.input_rank = svd.rank();
    model.output_rank = svd.rank();
    model.dt = dt;
    model.basis = svd.u;
    model.lift = unforced * svd.v * svd.sigma.cwiseInverse().asDiagonal();
    model.state_factor = svd.u;
    model.known_b = b;
    model.a_tilde = svd.u.transpose() * model.lift;
    model.b_tilde = svd.u.transpose() * b;
    model.eigen = eig(model.a_tilde, opts.eig);
    model.modes = detail::lift_modes(model.lift, model.basis, model.eigen, opts.normalize_modes);
    return model;
}

/// Modes of the unknown-input-map model: phi = X' V S^-1 U1^T U^ w, falling back
/// to the output basis U^ w for zero eigenvalues.
inline ComplexMatrix dmdc_modes(const DmdcModel& model, bool normalize = false) {
    if (model.variant == DmdcVariant::KnownInputMap)
        return detail::lift_modes(model.lift, model.basis, model.eigen, normalize);
    const Matrix reduced_lift = model.lift * (model.state_factor.transpose() * model.basis);
    return detail::lift_modes(reduced_lift, model.basis, model.eigen, normalize);
}

/// Joint estimate of dynamics and input map from state and control snapshots.
///
/// `trunc_p` truncates the SVD of Omega = [X; Y] (input space), `trunc_r` the
/// SVD of X' (output space). A threshold-derived r larger than p is capped at
/// p; an explicit r larger than p is a truncation-order error.
inline DmdcFit dmdc_fit_unknown_b(const SnapshotMatrix& x, const SnapshotMatrix& xp, const ControlMatrix& upsilon,
                                  const TruncationPolicy& trunc_p = {}, const TruncationPolicy& trunc_r = {},
                                  double dt = 1.0, const DmdcOptions& opts = {}) {
    detail::require_control_shape(x, xp, upsilon, "dmdc_fit_unknown_b");
    const Index n = x.rows();
    const Index l = upsilon.rows();

    const SnapshotMatrix omega = stack_omega(x, upsilon);
    const TruncatedSvd in = truncated_svd(omega, trunc_p);
    const Index p = in.rank();

    if (trunc_r.is_explicit())
        require(trunc_r.explicit_rank() <= p, ErrorKind::TruncationOrder,
                "dmdc_fit_unknown_b: output rank r = " + std::to_string(trunc_r.explicit_rank()) +
                    " exceeds input rank p = " + std::to_string(p));
    TruncatedSvd out = truncated_svd(xp, trunc_r);
    if (out.rank() > p) {
        out.u.conservativeResize(Eigen::NoChange, p);
        out.v.conservativeResize(Eigen::NoChange, p);
        out.sigma.conservativeResize(p);
    }
    const Index r = out.rank();

    DmdcFit fit;
    DmdcModel& model = fit.model;
    model.variant = DmdcVariant::UnknownInputMap;
    model.input_rank = p;
    model.output_rank = r;
    model.dt = dt;
    model.basis = out.u;
    model.lift = xp * in.v * in.sigma.cwiseInverse().asDiagonal();
    model.state_factor = in.u.topRows(n);
    model.control_factor = in.u.bottomRows(l);

    const Matrix projected = model.basis.transpose() * model.lift; // r x p
    model.a_tilde = projected * (model.state_factor.transpose() * model.basis);
    model.b_tilde = projected * model.control_factor.transpose();
    model.eigen = eig(model.a_tilde, opts.eig);
    model.modes = dmdc_modes(model, opts.normalize_modes);

    fit.report = check_identifiability(x, upsilon);
    return fit;
}

struct FullOperators {
    Matrix a; // n x n
    Matrix b; // n x l
};

/// Full-dimensional [A, B] estimate. Only available for n <= dense_limit.
inline FullOperators full_operators(const DmdcModel& model, Index dense_limit = kDenseOperatorLimit) {
    require(model.state_dim() <= dense_limit, ErrorKind::InvalidInput,
            "full_operators: state dimension " + std::to_string(model.state_dim()) + " exceeds dense limit " +
                std::to_string(dense_limit));
    if (model.variant == DmdcVariant::KnownInputMap)
        return {model.lift * model.state_factor.transpose(), model.known_b};
    return {model.lift * model.state_factor.transpose(), model.lift * model.control_factor.transpose()};
}

} // namespace dmdc
