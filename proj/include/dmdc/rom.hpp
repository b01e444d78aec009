// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <optional>
#include <string>
#include <vector>

#include "dmdc/controlled.hpp"
#include "dmdc/dmd.hpp"
#include "dmdc/linalg.hpp"

namespace dmdc {

/// Discrete-time (A, B, C) with no feedthrough.
struct StateSpaceRealization {
    Matrix a; // r x r
    Matrix b; // r x l
    Matrix c; // q x r
    double dt = 1.0;

    [[nodiscard]] Index states() const noexcept { return a.rows(); }
    [[nodiscard]] Index inputs() const noexcept { return b.cols(); }
    [[nodiscard]] Index outputs() const noexcept { return c.rows(); }

    void validate() const {
        require(a.rows() == a.cols(), ErrorKind::Shape, "realization: A must be square");
        require(b.rows() == a.rows(), ErrorKind::Shape,
                "realization: B has " + std::to_string(b.rows()) + " rows, expected " + std::to_string(a.rows()));
        require(c.cols() == a.rows(), ErrorKind::Shape,
                "realization: C has " + std::to_string(c.cols()) + " columns, expected " + std::to_string(a.rows()));
        require(a.allFinite() && b.allFinite() && c.allFinite(), ErrorKind::InvalidInput,
                "realization: non-finite entries");
    }
};

struct FrequencyResponseCurve {
    std::vector<double> omegas;
    std::vector<Vector> sigmas; // each of length min(q, l), non-increasing
};

inline StateSpaceRealization realize(const DmdcModel& model, const std::optional<Matrix>& c_override = std::nullopt) {
    StateSpaceRealization ss{model.a_tilde, model.b_tilde, c_override.value_or(model.basis), model.dt};
    ss.validate();
    return ss;
}

inline StateSpaceRealization realize(const DmdModel& model, const std::optional<Matrix>& c_override = std::nullopt) {
    StateSpaceRealization ss{model.a_tilde, Matrix(model.rank, 0), c_override.value_or(model.basis), model.dt};
    ss.validate();
    return ss;
}

/// Iterates x_{k+1} = A x_k + B u_k and returns C x_{k+1} for k = 0..h-1,
/// where h = u_seq.cols(). Inputs are ignored when the realization has none.
inline Matrix simulate(const StateSpaceRealization& ss, const Vector& x0, const ControlMatrix& u_seq) {
    ss.validate();
    require(x0.size() == ss.states(), ErrorKind::Shape,
            "simulate: initial state has " + std::to_string(x0.size()) + " entries, expected " +
                std::to_string(ss.states()));
    const Index horizon = u_seq.cols();
    require(horizon >= 1, ErrorKind::InvalidInput, "simulate: horizon must be >= 1");
    const bool forced = ss.inputs() > 0;
    if (forced)
        require(u_seq.rows() == ss.inputs(), ErrorKind::Shape,
                "simulate: input sequence has " + std::to_string(u_seq.rows()) + " rows, expected " +
                    std::to_string(ss.inputs()));

    Matrix outputs(ss.outputs(), horizon);
    Vector state = x0;
    for (Index k = 0; k < horizon; ++k) {
        Vector next = ss.a * state;
        if (forced) next.noalias() += ss.b * u_seq.col(k);
        require(next.allFinite(), ErrorKind::Divergence, "simulate: state became non-finite at step " + std::to_string(k));
        state = std::move(next);
        outputs.col(k) = ss.c * state;
    }
    return outputs;
}

inline constexpr double kSingularFrequencyTolerance = 1e-12;

/// 200 log-spaced points in [1e-3, pi] rad/sample.
inline std::vector<double> default_frequency_grid(std::size_t count = 200, double lo = 1e-3,
                                                  double hi = std::numbers::pi) {
    require(count >= 1, ErrorKind::InvalidInput, "frequency grid: need at least one point");
    require(lo > 0.0 && hi <= std::numbers::pi && lo <= hi, ErrorKind::InvalidInput,
            "frequency grid: bounds must satisfy 0 < lo <= hi <= pi");
    std::vector<double> grid(count);
    if (count == 1) {
        grid[0] = hi;
        return grid;
    }
    const double a = std::log10(lo);
    const double b = std::log10(hi);
    for (std::size_t i = 0; i < count; ++i)
        grid[i] = std::pow(10.0, a + (b - a) * static_cast<double>(i) / static_cast<double>(count - 1));
    grid.back() = hi;
    return grid;
}

/// Singular values of C (e^{i omega} I - A)^{-1} B at one frequency.
/// `poles` are the eigenvalues of A, used for the singularity check.
inline Vector transfer_singular_values(const StateSpaceRealization& ss, double omega, const ComplexVector& poles) {
    const Complex z = std::polar(1.0, omega);
    for (Index i = 0; i < poles.size(); ++i)
        require(std::abs(z - poles(i)) > kSingularFrequencyTolerance, ErrorKind::SingularFrequency,
                "frequency_response: e^{i*omega} is a pole of A at omega = " + std::to_string(omega));
    const Index r = ss.states();
    const ComplexMatrix resolvent = z * ComplexMatrix::Identity(r, r) - ss.a.cast<Complex>();
    const ComplexMatrix state_gain = resolvent.partialPivLu().solve(ss.b.cast<Complex>());
    const ComplexMatrix h = ss.c.cast<Complex>() * state_gain;
    return Eigen::JacobiSVD<ComplexMatrix>(h).singularValues();
}

inline FrequencyResponseCurve frequency_response(const StateSpaceRealization& ss, const std::vector<double>& omegas) {
    ss.validate();
    require(ss.inputs() >= 1, ErrorKind::InvalidInput, "frequency_response: realization has no inputs");
    const ComplexVector poles = eig(ss.a).values;

    FrequencyResponseCurve curve;
    curve.omegas = omegas;
    curve.sigmas.reserve(omegas.size());
    for (std::size_t i = 0; i < omegas.size(); ++i) {
        const double w = omegas[i];
        require(w > 0.0 && w <= std::numbers::pi, ErrorKind::InvalidInput,
                "frequency_response: omega at grid point " + std::to_string(i) + " outside (0, pi]");
        try {
            curve.sigmas.push_back(transfer_singular_values(ss, w, poles));
        } catch (const Error& e) {
            if (e.kind() != ErrorKind::SingularFrequency) throw;
            fail(ErrorKind::SingularFrequency,
                 "frequency_response: singular at grid point " + std::to_string(i) + " (omega = " + std::to_string(w) + ")");
        }
    }
    return curve;
}

/// Max over pairs of a minimum-cost matching between two eigenvalue lists.
/// Exhaustive over permutations up to 8 entries, greedy (closest pair first) above.
inline double spectral_distance(const ComplexVector& a, const ComplexVector& b,
                                std::vector<Index>* matching = nullptr) {
    require(a.size() == b.size(), ErrorKind::Shape,
            "spectral_distance: lists have " + std::to_string(a.size()) + " and " + std::to_string(b.size()) +
                " entries");
    const Index k = a.size();
    std::vector<Index> best(static_cast<std::size_t>(k));
    if (k == 0) {
        if (matching) matching->clear();
        return 0.0;
    }

    auto cost = [&](Index i, Index j) { return std::abs(a(i) - b(j)); };

    if (k <= 8) {
        std::vector<Index> perm(static_cast<std::size_t>(k));
        std::iota(perm.begin(), perm.end(), Index{0});
        double best_sum = std::numeric_limits<double>::infinity();
        double best_max = 0.0;
        do {
            double sum = 0.0;
            double worst = 0.0;
            for (Index i = 0; i < k; ++i) {
                const double c = cost(i, perm[static_cast<std::size_t>(i)]);
                sum += c;
                worst = std::max(worst, c);
            }
            if (sum < best_sum || (sum == best_sum && worst < best_max)) {
                best_sum = sum;
                best_max = worst;
                best = perm;
            }
        } while (std::next_permutation(perm.begin(), perm.end()));
        if (matching) *matching = best;
        return best_max;
    }

    std::vector<bool> used_a(static_cast<std::size_t>(k), false);
    std::vector<bool> used_b(static_cast<std::size_t>(k), false);
    double worst = 0.0;
    for (Index step = 0; step < k; ++step) {
        double c_min = std::numeric_limits<double>::infinity();
        Index bi = 0;
        Index bj = 0;
        for (Index i = 0; i < k; ++i) {
            if (used_a[static_cast<std::size_t>(i)]) continue;
            for (Index j = 0; j < k; ++j) {
                if (used_b[static_cast<std::size_t>(j)]) continue;
                if (const double c = cost(i, j); c < c_min) {
                    c_min = c;
                    bi = i;
                    bj = j;
                }
            }
        }
        used_a[static_cast<std::size_t>(bi)] = true;
        used_b[static_cast<std::size_t>(bj)] = true;
        best[static_cast<std::size_t>(bi)] = bj;
        worst = std::max(worst, c_min);
    }
    if (matching) *matching = best;
    return worst;
}

} // namespace dmdc
