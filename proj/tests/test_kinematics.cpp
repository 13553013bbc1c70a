#include "oracle.hpp"

#include <dynplan/kinematics.hpp>

#include <gtest/gtest.h>

using namespace dynplan;

TEST(Kinematics, ZeroLengthIsPureRotation) {
    Vec p = (Vec(3) << 1.0, 2.0, 0.3).finished();
    Vec c = roto_translate(p, (Vec(2) << 0.4, 0.0).finished());
    EXPECT_DOUBLE_EQ(c[0], 1.0);
    EXPECT_DOUBLE_EQ(c[1], 2.0);
    EXPECT_NEAR(c[2], 0.7, 1e-15);
}

TEST(Kinematics, StraightArmAlongX) {
    std::vector<IntrinsicState> chain{{0.0, 1.0}, {0.0, 1.0}};
    auto out = forward_kinematics(chain, {});
    EXPECT_NEAR(out.back().x, 2.0, 1e-15);
    EXPECT_NEAR(out.back().y, 0.0, 1e-15);
}

TEST(Kinematics, QuarterTurnOnUnitLink) {
    ExtrinsicState e = roto_translate(ExtrinsicState{}, IntrinsicState{kPi / 2, 1.0});
    EXPECT_NEAR(e.x, 0.0, 1e-15);
    EXPECT_NEAR(e.y, 1.0, 1e-15);
}

TEST(Kinematics, EmptyChainRejected) { EXPECT_THROW(forward_kinematics({}, {}), ContractViolation); }

TEST(Kinematics, RotoJacobiansMatchDifferences) {
    std::mt19937_64 rng(1);
    for (int trial = 0; trial < 50; ++trial) {
        Vec p = oracle::random_vec(rng, 3, -3.0, 3.0);
        Vec in = oracle::random_vec(rng, 2, 0.0, 2.0);
        in[0] = in[0] * 3.0 - 3.0;
        Mat jp = oracle::numeric_jacobian([&](const Vec& q) { return roto_translate(q, in); }, p);
        Mat ji = oracle::numeric_jacobian([&](const Vec& q) { return roto_translate(p, q); }, in);
        EXPECT_LT(oracle::relative_gap(roto_jacobian_parent(p, in), jp), 1e-6);
        EXPECT_LT(oracle::relative_gap(roto_jacobian_intrinsic(p, in), ji), 1e-6);
    }
}

TEST(Kinematics, ChainMatchesComplexFold) {
    std::mt19937_64 rng(2);
    for (int trial = 0; trial < 100; ++trial) {
        const int n = 1 + trial % 28;
        Vec a = oracle::random_vec(rng, n, -kPi, kPi);
        Vec l = oracle::random_vec(rng, n, 0.05, 1.0);
        Vec base = oracle::random_vec(rng, 3, -1.0, 1.0);
        auto z = oracle::complex_fold(a, l, {base[0], base[1]}, base[2]);
        Vec e = chain_end_position(a, l, base);
        EXPECT_NEAR(e[0], z.real(), 1e-10);
        EXPECT_NEAR(e[1], z.imag(), 1e-10);
        Mat J = oracle::numeric_jacobian([&](const Vec& q) { return chain_end_position(q, l, base); }, a);
        EXPECT_LT(oracle::relative_gap(chain_end_jacobian(a, l, base), J), 1e-6);
    }
}

TEST(Kinematics, IeGradientsAreJacobianTransposes) {
    Vec p = (Vec(3) << 0.1, 0.2, 0.3).finished();
    Vec in = (Vec(2) << 0.4, 0.8).finished();
    PredictionError e{"e", (Vec(3) << 1.0, -1.0, 0.5).finished(), Precision::scalar(3, 2.0)};
    IEGradients g = ie_gradients(p, in, e);
    EXPECT_LT((g.parent - roto_jacobian_parent(p, in).transpose() * (2.0 * e.value)).norm(), 1e-14);
    EXPECT_LT((g.intrinsic - roto_jacobian_intrinsic(p, in).transpose() * (2.0 * e.value)).norm(), 1e-14);
}
