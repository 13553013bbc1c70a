#include "oracle.hpp"

#include <dynplan/discrete.hpp>

#include <gtest/gtest.h>

using namespace dynplan;

namespace {

DiscreteModel random_model(std::mt19937_64& rng, int n, int outcomes, int actions, int horizon) {
    DiscreteModel m;
    for (int i = 0; i < n; ++i) m.states.push_back("s" + std::to_string(i));
    for (int a = 0; a < actions; ++a) {
        m.actions.push_back("a" + std::to_string(a));
        m.B.push_back(oracle::random_stochastic(rng, n, n));
    }
    Modality mod;
    mod.name = "o";
    mod.A = oracle::random_stochastic(rng, outcomes, n);
    mod.C = oracle::random_vec(rng, outcomes, -2.0, 0.0);
    mod.cause = true;
    m.modalities.push_back(mod);
    m.D = oracle::random_simplex(rng, n);
    m.horizon = horizon;
    m.policies = enumerate_policies(actions, horizon);
    return m;
}

} // namespace

TEST(Discrete, EnumeratesAllPolicies) {
    auto p = enumerate_policies(3, 2);
    EXPECT_EQ(p.size(), 9u);
    EXPECT_EQ(p[5], (std::vector<int>{1, 2}));
}

TEST(Discrete, ExactStateMarginalsOnRandomChains) {
    std::mt19937_64 rng(21);
    for (int trial = 0; trial < 20; ++trial) {
        const int n = 2 + trial % 3, H = 1 + trial % 3;
        DiscreteModel m = random_model(rng, n, 3, 2, H);
        const auto& policy = m.policies[trial % m.policies.size()];
        DiscreteObs obs(H + 1);
        std::vector<Vec> ll;
        for (int t = 0; t <= H; ++t) {
            Vec o = oracle::random_simplex(rng, 3);
            obs[t].push_back(o);
            ll.push_back(clamped_log(m.modalities[0].A).transpose() * o);
        }
        std::vector<Mat> B;
        for (int a : policy) B.push_back(m.B[a]);
        auto ref = oracle::enumerate_marginals(m.D, B, ll);
        auto s = infer_states(m, policy, m.D, obs);
        for (int t = 0; t <= H; ++t) EXPECT_LT((s[t] - ref[t]).cwiseAbs().maxCoeff(), 1e-9);
    }
}

TEST(Discrete, NoObservationsLeavePriorPropagation) {
    std::mt19937_64 rng(5);
    DiscreteModel m = random_model(rng, 4, 2, 2, 2);
    DiscreteObs obs(3, std::vector<std::optional<Vec>>{std::nullopt});
    auto s = infer_states(m, m.policies[2], m.D, obs);
    EXPECT_LT((s[0] - m.D).norm(), 1e-12);
    EXPECT_LT((s[1] - m.B[m.policies[2][0]] * m.D).norm(), 1e-12);
}

TEST(Discrete, AmbiguityOfIdentityIsZero) {
    EXPECT_LT(ambiguity_vector(Mat::Identity(3, 3)).cwiseAbs().maxCoeff(), 1e-8);
    Mat flat = Mat::Constant(2, 2, 0.5);
    EXPECT_NEAR(ambiguity_vector(flat)[0], std::log(2.0), 1e-12);
}

TEST(Discrete, PreferredOutcomeWins) {
    // two states, action 1 moves to state 1 whose outcome is preferred
    DiscreteModel m;
    m.states = {"a", "b"};
    m.actions = {"stay", "go"};
    m.B = {Mat::Identity(2, 2), (Mat(2, 2) << 0.0, 0.0, 1.0, 1.0).finished()};
    m.modalities.push_back({"o", Mat::Identity(2, 2), (Vec(2) << 0.0, 3.0).finished(), false});
    m.D = (Vec(2) << 1.0, 0.0).finished();
    m.horizon = 1;
    Planner p(m);
    PlannerStep st = p.step({(Vec(2) << 1.0, 0.0).finished()});
    EXPECT_GT(st.policy[1], 0.9);
    EXPECT_GT(st.next_state[1], 0.9);
}

TEST(Discrete, SimplexViolationsReported) {
    DiscreteModel m;
    m.states = {"a", "b"};
    m.actions = {"x"};
    m.B = {Mat::Identity(2, 2)};
    m.modalities.push_back({"o", (Mat(2, 2) << 0.5, 0.0, 0.4, 1.0).finished(), Vec::Zero(2), false});
    m.D = (Vec(2) << 0.5, 0.5).finished();
    auto errs = validate_model(m);
    ASSERT_FALSE(errs.empty());
    EXPECT_NE(errs[0].find("sums to 0.9"), std::string::npos);
    EXPECT_THROW(Planner{m}, ConfigError);
}

TEST(Discrete, TopDownCausesAreNormalized) {
    Mat A = (Mat(3, 2) << 0.7, 0.1, 0.2, 0.1, 0.1, 0.8).finished();
    Vec v = top_down_causes(A, (Vec(2) << 0.3, 0.7).finished(), (Vec(3) << 0.5, -1.0, 2.0).finished());
    EXPECT_NEAR(v.sum(), 1.0, 1e-15);
}
