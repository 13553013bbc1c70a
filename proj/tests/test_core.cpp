#include <dynplan/core.hpp>
#include <dynplan/rng.hpp>

#include <gtest/gtest.h>

using namespace dynplan;

TEST(Core, ZeroErrorsGiveZeroFreeEnergy) {
    std::vector<PredictionError> errs{{"a", Vec::Zero(3), Precision::identity(3)}, {"b", Vec::Zero(2), Precision::scalar(2, 5.0)}};
    EXPECT_EQ(laplace_free_energy(errs), 0.0);
}

TEST(Core, FreeEnergyIsHalfWeightedSquare) {
    std::vector<PredictionError> errs{{"a", (Vec(2) << 1.0, 2.0).finished(), Precision::diagonal((Vec(2) << 2.0, 0.5).finished())}};
    EXPECT_DOUBLE_EQ(laplace_free_energy(errs), 0.5 * (2.0 * 1.0 + 0.5 * 4.0));
}

TEST(Core, FullPrecisionMatchesQuadraticForm) {
    Mat m(2, 2);
    m << 2.0, 0.5, 0.5, 1.0;
    Precision p(m);
    Vec e = (Vec(2) << 0.3, -1.2).finished();
    EXPECT_NEAR(p.quad(e), e.dot(m * e), 1e-14);
    EXPECT_FALSE(p.is_diagonal());
}

TEST(Core, PrecisionRejectsAsymmetricAndIndefinite) {
    Mat a(2, 2);
    a << 1.0, 0.2, 0.0, 1.0;
    EXPECT_THROW(Precision{a}, ContractViolation);
    Mat b(2, 2);
    b << 1.0, 0.0, 0.0, -1.0;
    EXPECT_THROW(Precision{b}, ContractViolation);
    EXPECT_THROW(Precision::diagonal((Vec(1) << -1.0).finished()), ContractViolation);
}

TEST(Core, ShiftOperatorMovesOrdersUp) {
    GeneralizedBelief b{(Vec(2) << 1.0, 2.0).finished(), (Vec(2) << 3.0, 4.0).finished()};
    GeneralizedBelief s = shift_operator(b);
    EXPECT_EQ(s.mu, b.mu_prime);
    EXPECT_EQ(s.mu_prime, Vec::Zero(2));
}

TEST(Core, EulerRejectsNonPositiveDt) {
    Vec x = Vec::Ones(2);
    EXPECT_THROW(euler_step(x, x, 0.0), ContractViolation);
    EXPECT_THROW(euler_step(x, x, -0.1), ContractViolation);
}

TEST(Core, EulerOnDecayApproachesExponential) {
    // dx/dt = -x from 1, compared with exp(-t) at t = 1
    for (double dt : {1e-2, 1e-3, 1e-4}) {
        Vec x = Vec::Ones(1);
        const int n = static_cast<int>(std::lround(1.0 / dt));
        for (int i = 0; i < n; ++i) x = euler_step(x, -x, dt);
        double err = std::abs(x[0] - std::exp(-1.0));
        EXPECT_LT(err, 0.25 * dt);  // first-order: error ~ t e^-t dt / 2
        EXPECT_GT(err, 0.1 * dt);
    }
}

TEST(Core, SoftmaxAndClampedLog) {
    Vec p = softmax((Vec(3) << 1000.0, 1000.0, -1000.0).finished());
    EXPECT_NEAR(p[0], 0.5, 1e-12);
    EXPECT_NEAR(p.sum(), 1.0, 1e-15);
    EXPECT_DOUBLE_EQ(clamped_log(0.0), std::log(kLogFloor));
}

TEST(Rng, CounterDrawsArePure) {
    CounterRng a(7), b(7), c(8);
    EXPECT_EQ(a.bits(3, 4, 5), b.bits(3, 4, 5));
    EXPECT_NE(a.bits(3, 4, 5), c.bits(3, 4, 5));
    EXPECT_NE(a.bits(3, 4, 5), a.bits(3, 4, 6));
}

TEST(Rng, NormalMomentsWithinBounds) {
    CounterRng r(11);
    const int N = 100000;
    double s = 0.0, s2 = 0.0;
    for (int i = 0; i < N; ++i) {
        double z = r.normal(static_cast<std::uint64_t>(i), 1, 0);
        s += z;
        s2 += z * z;
    }
    double mean = s / N, var = s2 / N - mean * mean;
    EXPECT_LT(std::abs(mean), 3.0 / std::sqrt(static_cast<double>(N)));
    EXPECT_NEAR(var, 1.0, 0.02);
}
