// SPDX-License-Identifier: Apache-2.0
#include <gtest/gtest.h>

#include <numbers>
#include <random>

#include "dmdc/rom.hpp"
#include "dmdc/synth.hpp"
#include "oracles.hpp"

using namespace dmdc;

namespace {

StateSpaceRealization scalar(double a, double b, double c) {
    return {Matrix::Constant(1, 1, a), Matrix::Constant(1, 1, b), Matrix::Constant(1, 1, c), 1.0};
}

} // namespace

TEST(Realize, ShapesFollowModel) {
    const SynthDataset ds = gen_example2(2, 1, 100, 60, 5);
    const DmdcFit fit = dmdc_fit_unknown_b(ds.x, ds.xp, ds.upsilon);
    const StateSpaceRealization ss = realize(fit.model);
    EXPECT_EQ(fit.model.output_rank, 2);
    EXPECT_EQ(ss.c.rows(), 100);
    EXPECT_EQ(ss.c.cols(), 2);
    EXPECT_EQ(ss.b.cols(), 1);
    EXPECT_THROW(realize(fit.model, Matrix::Identity(3, 3)), Error);

    const DmdModel plain = dmd_fit(ds.x, ds.xp);
    const StateSpaceRealization autonomous = realize(plain);
    EXPECT_EQ(autonomous.inputs(), 0);
    EXPECT_NO_THROW(simulate(autonomous, Vector::Ones(plain.rank), Matrix(0, 4)));
}

TEST(Simulate, ScalarRecursion) {
    Matrix u(1, 3);
    u << 1, -1, 1;
    const Matrix y = simulate(scalar(0.5, 1.0, 1.0), Vector::Ones(1), u);
    ASSERT_EQ(y.cols(), 3);
    EXPECT_DOUBLE_EQ(y(0, 0), 1.5);
    EXPECT_DOUBLE_EQ(y(0, 1), -0.25);
    EXPECT_DOUBLE_EQ(y(0, 2), 0.875);
}

TEST(Simulate, IdentityHoldsState) {
    StateSpaceRealization ss{Matrix::Identity(3, 3), Matrix::Zero(3, 1), Matrix::Identity(3, 3), 1.0};
    Vector x0(3);
    x0 << 1, -2, 3;
    const Matrix y = simulate(ss, x0, Matrix::Ones(1, 5));
    for (Index k = 0; k < 5; ++k) EXPECT_EQ(y.col(k), x0);
}

TEST(Simulate, ReplaysFeedbackExample) {
    Vector x0(2);
    x0 << 4, 7;
    const SynthDataset ds = gen_example1(x0, -1.0, 5);
    const DmdcModel model = dmdc_fit_known_b(ds.x, ds.xp, ds.upsilon, ds.truth.b_true);
    const StateSpaceRealization ss = realize(model);
    const Matrix y = simulate(ss, model.basis.transpose() * x0, ds.upsilon);
    EXPECT_LE((y - ds.xp).norm(), 1e-8 * ds.xp.norm());
}

TEST(Simulate, ReproducesTrainingOutputsOfExactFit) {
    const SynthDataset ds = gen_example2(4, 2, 30, 80, 9);
    const DmdcFit fit = dmdc_fit_unknown_b(ds.x, ds.xp, ds.upsilon);
    const StateSpaceRealization ss = realize(fit.model);
    const Matrix y = simulate(ss, fit.model.basis.transpose() * ds.x.col(0), ds.upsilon);
    EXPECT_LE((y - ds.xp).norm(), 1e-8 * ds.xp.norm());
}

TEST(Simulate, ErrorsAndDivergence) {
    Matrix u = Matrix::Ones(1, 2000);
    try {
        simulate(scalar(1e200, 1.0, 1.0), Vector::Ones(1), u);
        FAIL();
    } catch (const Error& e) {
        EXPECT_EQ(e.kind(), ErrorKind::Divergence);
        EXPECT_NE(std::string(e.what()).find("step 1"), std::string::npos);
    }
    EXPECT_THROW(simulate(scalar(0.5, 1, 1), Vector::Ones(2), u), Error);
    EXPECT_THROW(simulate(scalar(0.5, 1, 1), Vector::Ones(1), Matrix::Ones(2, 3)), Error);
    EXPECT_THROW(simulate(scalar(0.5, 1, 1), Vector::Ones(1), Matrix(1, 0)), Error);
}

TEST(FrequencyResponse, PureDelayHasUnitGain) {
    const auto grid = default_frequency_grid();
    ASSERT_EQ(grid.size(), 200u);
    EXPECT_DOUBLE_EQ(grid.front(), 1e-3);
    EXPECT_DOUBLE_EQ(grid.back(), std::numbers::pi);
    const FrequencyResponseCurve curve = frequency_response(scalar(0.0, 1.0, 1.0), grid);
    for (const Vector& s : curve.sigmas) EXPECT_NEAR(s(0), 1.0, 1e-14);
}

TEST(FrequencyResponse, FirstOrderLowFrequencyGain) {
    // |1 / (e^{iw} - 0.5)| -> 2 as w -> 0.
    const FrequencyResponseCurve curve = frequency_response(scalar(0.5, 1.0, 1.0), {1e-6, 1e-3});
    EXPECT_NEAR(curve.sigmas[0](0), 2.0, 1e-9);
    EXPECT_NEAR(curve.sigmas[1](0), 1.0 / std::abs(std::polar(1.0, 1e-3) - 0.5), 1e-14);
}

TEST(FrequencyResponse, SingularFrequencyIsReported) {
    Matrix a(2, 2);
    const double w = 0.7;
    a << std::cos(w), -std::sin(w), std::sin(w), std::cos(w);
    StateSpaceRealization ss{a, Matrix::Ones(2, 1), Matrix::Identity(2, 2), 1.0};
    try {
        frequency_response(ss, {0.1, w});
        FAIL();
    } catch (const Error& e) {
        EXPECT_EQ(e.kind(), ErrorKind::SingularFrequency);
        EXPECT_NE(std::string(e.what()).find("grid point 1"), std::string::npos);
    }
    EXPECT_THROW(frequency_response(ss, {0.0}), Error);
}

TEST(FrequencyResponse, ConjugateSymmetryAndOrdering) {
    auto [ss, truth] = gen_random_stable_ss(6, 3, 20, 77);
    const ComplexVector poles = eig(ss.a).values;
    for (double w : default_frequency_grid(25)) {
        const Vector pos = transfer_singular_values(ss, w, poles);
        const Vector neg = transfer_singular_values(ss, -w, poles);
        ASSERT_EQ(pos.size(), 3);
        EXPECT_LE((pos - neg).cwiseAbs().maxCoeff(), 1e-12 * pos(0));
        for (Index j = 1; j < pos.size(); ++j) EXPECT_LE(pos(j), pos(j - 1));
    }
}

TEST(SpectralDistance, Cases) {
    ComplexVector a(2), b(2);
    a << Complex(1.5, 0), Complex(0.1, 0);
    b << Complex(0.1, 0), Complex(1.5, 0);
    EXPECT_EQ(spectral_distance(a, a), 0.0);
    EXPECT_EQ(spectral_distance(a, b), 0.0);

    ComplexVector c(2), d(2);
    c << Complex(1, 0), Complex(0, 1);
    d << Complex(1, 0), Complex(0, 1.1);
    EXPECT_NEAR(spectral_distance(c, d), 0.1, 1e-15);
    EXPECT_THROW(spectral_distance(a, ComplexVector::Zero(3)), Error);
}

TEST(SpectralDistance, PseudometricAndBruteForceAgreement) {
    std::mt19937_64 rng(123);
    std::normal_distribution<double> nd(0.0, 1.0);
    for (int trial = 0; trial < 50; ++trial) {
        const Index k = 1 + trial % 7;
        ComplexVector a(k), b(k);
        for (Index i = 0; i < k; ++i) {
            a(i) = {nd(rng), nd(rng)};
            b(i) = {nd(rng), nd(rng)};
        }
        std::vector<Complex> va(a.data(), a.data() + k), vb(b.data(), b.data() + k);
        EXPECT_DOUBLE_EQ(spectral_distance(a, b), oracle::brute_force_matching(va, vb));
        EXPECT_DOUBLE_EQ(spectral_distance(a, b), spectral_distance(b, a));
        EXPECT_EQ(spectral_distance(a, a), 0.0);
    }
}

TEST(SpectralDistance, GreedyAboveEightStillFindsIdenticalSets) {
    ComplexVector a(10), b(10);
    for (Index i = 0; i < 10; ++i) {
        a(i) = std::polar(0.9, 0.3 * static_cast<double>(i));
        b(9 - i) = a(i);
    }
    EXPECT_EQ(spectral_distance(a, b), 0.0);
}
