// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numbers>
#include <optional>
#include <random>
#include <set>
#include <string>
#include <utility>
#include <vector>

#include "dmdc/linalg.hpp"
#include "dmdc/rom.hpp"

namespace dmdc {

/// Generator-side system. When `c_true` is present the dynamics live in latent
/// coordinates and the data are observed through it: x' = C (A C^T x + B u).
struct GroundTruth {
    Matrix a_true;
    Matrix b_true;
    std::optional<Matrix> c_true;
    ComplexVector eigs_true;
    std::optional<ComplexMatrix> modes_true;
    std::uint64_t seed = 0;
};

struct SynthDataset {
    SnapshotMatrix x;
    SnapshotMatrix xp;
    ControlMatrix upsilon;
    GroundTruth truth;
    double dt = 1.0;
};

/// Spatial actuation for the Fourier example: a Gaussian bump on the periodic grid.
struct ActuationSpec {
    double center_x = 0.5; // fraction of the domain
    double center_y = 0.5;
    double width = 5.0;    // standard deviation in grid cells
    double amplitude = -1.0;
};

/// One step of the generator model applied to data-space snapshots.
inline Matrix predict(const GroundTruth& truth, const SnapshotMatrix& x, const ControlMatrix& u) {
    const bool forced = truth.b_true.cols() > 0 && u.rows() > 0;
    if (truth.c_true) {
        const Matrix& c = *truth.c_true;
        Matrix latent = truth.a_true * (c.transpose() * x);
        if (forced) latent += truth.b_true * u;
        return c * latent;
    }
    Matrix next = truth.a_true * x;
    if (forced) next += truth.b_true * u;
    return next;
}

namespace detail {

inline std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t stream) {
    // splitmix64 finalizer
    std::uint64_t z = seed + 0x9E3779B97F4A7C15ULL * (stream + 1);
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
}

inline Matrix gaussian(Index rows, Index cols, std::mt19937_64& rng) {
    std::normal_distribution<double> dist(0.0, 1.0);
    Matrix m(rows, cols);
    for (Index j = 0; j < cols; ++j)
        for (Index i = 0; i < rows; ++i) m(i, j) = dist(rng);
    return m;
}

// Thin Q with a deterministic sign: diag(R) made non-negative.
inline Matrix orthonormal_columns(const Matrix& m) {
    Eigen::HouseholderQR<Matrix> qr(m);
    Matrix q = qr.householderQ() * Matrix::Identity(m.rows(), m.cols());
    const Matrix& r = qr.matrixQR();
    for (Index j = 0; j < m.cols(); ++j)
        if (r(j, j) < 0.0) q.col(j) *= -1.0;
    return q;
}

inline ComplexVector sorted_eigenvalues(std::vector<Complex> values) {
    std::stable_sort(values.begin(), values.end(), eigen_precedes);
    ComplexVector out(static_cast<Index>(values.size()));
    for (std::size_t i = 0; i < values.size(); ++i) out(static_cast<Index>(i)) = values[i];
    return out;
}

inline Matrix rotation_block(Complex mu) {
    Matrix block(2, 2);
    block << mu.real(), -mu.imag(), mu.imag(), mu.real();
    return block;
}

} // namespace detail

/// Unstable plant A = diag(1.5, 0.1), B = e1 under state feedback u = K x1.
inline SynthDataset gen_example1(const Vector& x0, double k_gain = -1.0, Index m = 5) {
    require(x0.size() == 2, ErrorKind::InvalidInput, "gen_example1: initial state must have 2 entries");
    require(m >= 2, ErrorKind::InsufficientData, "gen_example1: need m >= 2 snapshots, got " + std::to_string(m));
    Matrix a(2, 2);
    a << 1.5, 0.0, 0.0, 0.1;
    Matrix b(2, 1);
    b << 1.0, 0.0;

    Matrix traj(2, m);
    ControlMatrix upsilon(1, m - 1);
    traj.col(0) = x0;
    for (Index k = 0; k + 1 < m; ++k) {
        upsilon(0, k) = k_gain * traj(0, k);
        traj.col(k + 1) = a * traj.col(k) + b * upsilon(0, k);
    }

    SynthDataset ds;
    ds.x = traj.leftCols(m - 1);
    ds.xp = traj.rightCols(m - 1);
    ds.upsilon = std::move(upsilon);
    ds.truth.a_true = a;
    ds.truth.b_true = b;
    ds.truth.eigs_true = detail::sorted_eigenvalues({Complex(1.5, 0.0), Complex(0.1, 0.0)});
    return ds;
}

inline constexpr double kStableRadius = 0.95;

/// Random stable (A, B, C): eigenvalues uniform in the disk of radius 0.95
/// (conjugate-paired), rotated by a random orthogonal similarity; B standard
/// normal; C standard normal with orthonormalized columns (rows when q < n).
inline std::pair<StateSpaceRealization, GroundTruth> gen_random_stable_ss(Index n, Index l, Index q,
                                                                          std::uint64_t seed) {
    require(n >= 1 && l >= 1 && q >= 1, ErrorKind::InvalidConfig, "gen_random_stable_ss: n, l, q must be >= 1");
    std::mt19937_64 rng(detail::derive_seed(seed, 0));
    std::uniform_real_distribution<double> unit(0.0, 1.0);

    Matrix block_diag = Matrix::Zero(n, n);
    std::vector<Complex> eigs;
    Index i = 0;
    for (; i + 1 < n; i += 2) {
        const double radius = kStableRadius * std::sqrt(unit(rng));
        const double angle = std::numbers::pi * unit(rng);
        const Complex mu = std::polar(radius, angle);
        block_diag.block(i, i, 2, 2) = detail::rotation_block(mu);
        eigs.push_back(mu);
        eigs.push_back(std::conj(mu));
    }
    if (i < n) {
        const double real = kStableRadius * (2.0 * unit(rng) - 1.0);
        block_diag(i, i) = real;
        eigs.emplace_back(real, 0.0);
    }

    const Matrix rotation = detail::orthonormal_columns(detail::gaussian(n, n, rng));
    StateSpaceRealization ss;
    ss.a = rotation * block_diag * rotation.transpose();
    ss.b = detail::gaussian(n, l, rng);
    const Matrix c_raw = detail::gaussian(q, n, rng);
    ss.c = q >= n ? detail::orthonormal_columns(c_raw) : Matrix(detail::orthonormal_columns(c_raw.transpose()).transpose());

    GroundTruth truth;
    truth.a_true = ss.a;
    truth.b_true = ss.b;
    truth.c_true = ss.c;
    truth.eigs_true = detail::sorted_eigenvalues(std::move(eigs));
    truth.seed = seed;
    return {ss, truth};
}

/// Standard-normal l x (m-1) input history.
inline ControlMatrix gen_random_inputs(Index l, Index m, std::uint64_t seed) {
    require(l >= 1 && m >= 2, ErrorKind::InvalidConfig, "gen_random_inputs: need l >= 1 and m >= 2");
    std::mt19937_64 rng(detail::derive_seed(seed, 1));
    return detail::gaussian(l, m - 1, rng);
}

namespace detail {

inline SynthDataset observe_latent_trajectory(const Matrix& a, const Matrix& b, const Matrix& c, const Vector& z0,
                                              const ControlMatrix& upsilon) {
    const Index m = upsilon.cols() + 1;
    Matrix latent(a.rows(), m);
    latent.col(0) = z0;
    for (Index k = 0; k + 1 < m; ++k) latent.col(k + 1) = a * latent.col(k) + b * upsilon.col(k);
    const Matrix observed = c * latent;
    SynthDataset ds;
    ds.x = observed.leftCols(m - 1);
    ds.xp = observed.rightCols(m - 1);
    ds.upsilon = upsilon;
    return ds;
}

} // namespace detail

/// Large-scale stable system: a random n-state model with l inputs observed
/// through q measurements, driven by standard-normal inputs from a random state.
inline SynthDataset gen_example2(Index n, Index l, Index q, Index m, std::uint64_t seed) {
    require(m >= 2, ErrorKind::InsufficientData, "gen_example2: need m >= 2 snapshots");
    auto [ss, truth] = gen_random_stable_ss(n, l, q, seed);
    const ControlMatrix upsilon = gen_random_inputs(l, m, seed);
    std::mt19937_64 rng(detail::derive_seed(seed, 2));
    const Vector z0 = detail::gaussian(n, 1, rng);

    SynthDataset ds = detail::observe_latent_trajectory(ss.a, ss.b, ss.c, z0, upsilon);
    ds.truth = std::move(truth);
    return ds;
}

struct Wavevector {
    int kx = 0;
    int ky = 0;
    friend auto operator<=>(const Wavevector&, const Wavevector&) = default;
};

struct SparseFourierConfig {
    Index grid = 128;
    Index n_modes = 5;
    Index m = 60;
    std::uint64_t seed = 0;
    ActuationSpec actuation{};
    double dt = 1.0;
    double damping_min = 0.005;
    double damping_max = 0.05;
    double frequency_min = 0.5;
    double frequency_max = 2.0;
};

/// Largest wavevector component drawn for a grid; keeps the modes resolved by
/// a 5-cell actuation bump.
inline int max_wavenumber(Index grid) { return std::max(2, static_cast<int>(grid / 16)); }

/// Periodic field on a grid x grid torus made of n_modes Fourier modes (plus
/// their conjugates), each damped and oscillating, driven through a Gaussian
/// actuation bump by a random binary input. Snapshots are flattened row-major
/// (index = iy * grid + ix).
///
/// Latent coordinates are z_j = sqrt(2) (Re c_j, Im c_j) for the complex mode
/// coefficient c_j, so the latent operator is block diagonal with 2x2
/// rotation-scaling blocks and C stacks sqrt(2) (Re phi_j, -Im phi_j).
inline SynthDataset gen_sparse_fourier(const SparseFourierConfig& cfg) {
    const Index g = cfg.grid;
    require(g >= 2 && (g & (g - 1)) == 0, ErrorKind::InvalidConfig,
            "gen_sparse_fourier: grid " + std::to_string(g) + " is not a power of two");
    require(cfg.n_modes >= 1, ErrorKind::InvalidConfig, "gen_sparse_fourier: need at least one mode");
    require(cfg.m >= 2, ErrorKind::InsufficientData, "gen_sparse_fourier: need m >= 2 snapshots");
    require(cfg.actuation.width > 0.0, ErrorKind::InvalidConfig, "gen_sparse_fourier: actuation width must be > 0");

    const int kmax = max_wavenumber(g);
    const Index available = ((2 * kmax + 1) * (2 * kmax + 1) - 1) / 2;
    require(cfg.n_modes <= available, ErrorKind::InvalidConfig,
            "gen_sparse_fourier: " + std::to_string(cfg.n_modes) + " modes requested but only " +
                std::to_string(available) + " wavevectors fit the grid");

    std::mt19937_64 rng(detail::derive_seed(cfg.seed, 3));
    std::uniform_int_distribution<int> component(-kmax, kmax);
    std::uniform_real_distribution<double> damping(cfg.damping_min, cfg.damping_max);
    std::uniform_real_distribution<double> frequency(cfg.frequency_min, cfg.frequency_max);

    // One representative per conjugate pair: ky > 0, or ky == 0 and kx > 0.
    std::vector<Wavevector> waves;
    std::set<Wavevector> seen;
    while (static_cast<Index>(waves.size()) < cfg.n_modes) {
        const Wavevector w{component(rng), component(rng)};
        if (!(w.ky > 0 || (w.ky == 0 && w.kx > 0))) continue;
        if (seen.insert(w).second) waves.push_back(w);
    }

    const Index k = cfg.n_modes;
    const Index n = g * g;
    std::vector<Complex> mus;
    Matrix a = Matrix::Zero(2 * k, 2 * k);
    for (Index j = 0; j < k; ++j) {
        const double delta = damping(rng);
        const double omega = frequency(rng);
        const Complex mu = std::exp(Complex(-delta, omega) * cfg.dt);
        mus.push_back(mu);
        a.block(2 * j, 2 * j, 2, 2) = detail::rotation_block(mu);
    }

    const double inv_g = 1.0 / static_cast<double>(g);
    Matrix c(n, 2 * k);
    ComplexMatrix phi(n, k);
    for (Index j = 0; j < k; ++j) {
        const auto& w = waves[static_cast<std::size_t>(j)];
        for (Index iy = 0; iy < g; ++iy) {
            for (Index ix = 0; ix < g; ++ix) {
                const double theta = 2.0 * std::numbers::pi * inv_g *
                                     (static_cast<double>(w.kx * ix) + static_cast<double>(w.ky * iy));
                const Index idx = iy * g + ix;
                phi(idx, j) = std::polar(inv_g, theta);
                c(idx, 2 * j) = std::numbers::sqrt2 * inv_g * std::cos(theta);
                c(idx, 2 * j + 1) = -std::numbers::sqrt2 * inv_g * std::sin(theta);
            }
        }
    }

    Vector bump(n);
    const double cx = cfg.actuation.center_x * static_cast<double>(g);
    const double cy = cfg.actuation.center_y * static_cast<double>(g);
    const double two_s2 = 2.0 * cfg.actuation.width * cfg.actuation.width;
    const double gd = static_cast<double>(g);
    for (Index iy = 0; iy < g; ++iy) {
        for (Index ix = 0; ix < g; ++ix) {
            double dx = std::fabs(static_cast<double>(ix) - cx);
            double dy = std::fabs(static_cast<double>(iy) - cy);
            dx = std::min(dx, gd - dx);
            dy = std::min(dy, gd - dy);
            bump(iy * g + ix) = cfg.actuation.amplitude * std::exp(-(dx * dx + dy * dy) / two_s2);
        }
    }
    const Matrix b = c.transpose() * bump;

    std::bernoulli_distribution coin(0.5);
    ControlMatrix upsilon(1, cfg.m - 1);
    for (Index t = 0; t + 1 < cfg.m; ++t) upsilon(0, t) = coin(rng) ? 1.0 : 0.0;
    const Vector z0 = detail::gaussian(2 * k, 1, rng);

    SynthDataset ds = detail::observe_latent_trajectory(a, b, c, z0, upsilon);
    ds.dt = cfg.dt;

    // Truth eigenvalues in library order with the matching complex spatial modes.
    std::vector<std::pair<Complex, ComplexVector>> pairs;
    for (Index j = 0; j < k; ++j) {
        pairs.emplace_back(mus[static_cast<std::size_t>(j)], phi.col(j));
        pairs.emplace_back(std::conj(mus[static_cast<std::size_t>(j)]), phi.col(j).conjugate());
    }
    std::stable_sort(pairs.begin(), pairs.end(),
                     [](const auto& l, const auto& r) { return detail::eigen_precedes(l.first, r.first); });
    ComplexVector eigs(2 * k);
    ComplexMatrix modes(n, 2 * k);
    for (Index j = 0; j < 2 * k; ++j) {
        eigs(j) = pairs[static_cast<std::size_t>(j)].first;
        modes.col(j) = pairs[static_cast<std::size_t>(j)].second;
    }

    ds.truth.a_true = std::move(a);
    ds.truth.b_true = b;
    ds.truth.c_true = std::move(c);
    ds.truth.eigs_true = std::move(eigs);
    ds.truth.modes_true = std::move(modes);
    ds.truth.seed = cfg.seed;
    return ds;
}

/// Adds i.i.d. N(0, sigma^2) noise to every entry of x and x'. Truth is untouched.
inline SynthDataset add_noise(SynthDataset ds, double sigma, std::uint64_t seed) {
    require(sigma >= 0.0 && std::isfinite(sigma), ErrorKind::InvalidInput, "add_noise: sigma must be >= 0");
    if (sigma == 0.0) return ds;
    std::mt19937_64 rng(detail::derive_seed(seed, 4));
    ds.x += sigma * detail::gaussian(ds.x.rows(), ds.x.cols(), rng);
    ds.xp += sigma * detail::gaussian(ds.xp.rows(), ds.xp.cols(), rng);
    return ds;
}

} // namespace dmdc
