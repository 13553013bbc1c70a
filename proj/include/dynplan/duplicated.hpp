#pragma once
// Flat kinematic agent in which forward and inverse kinematics are duplicated:
// f(x, v) = k J' (v - T(x)), g_p(x) = x, g_v(x, v) = [T(x), v]. Kept for comparison runs.

#include "kinematics.hpp"
#include "unit.hpp"

namespace dynplan {

// d/dx of J(x)' r with r held fixed, minus J'J (the dependence of r = v - T(x) on x).
inline Mat duplicated_dynamics_jacobian(const Vec& x, const Vec& v, const Vec& lengths, const Vec& base, double k) {
    const int n = static_cast<int>(x.size());
    Vec phis(n);
    double phi = base[2];
    for (int i = 0; i < n; ++i) {
        phi += x[i];
        phis[i] = phi;
    }
    Mat J = chain_end_jacobian(x, lengths, base);
    Vec r = v - chain_end_position(x, lengths, base);
    Mat out = -J.transpose() * J;
    for (int j = 0; j < n; ++j)
        for (int i = 0; i < n; ++i) {
            // d J(:, j) / d x_i = sum_{k >= max(i, j)} l_k [-cos phi_k, -sin phi_k]
            double dx = 0.0, dy = 0.0;
            for (int q = std::max(i, j); q < n; ++q) {
                dx -= lengths[q] * std::cos(phis[q]);
                dy -= lengths[q] * std::sin(phis[q]);
            }
            out(j, i) += dx * r[0] + dy * r[1];
        }
    return k * out;
}

inline DynamicsMap duplicated_dynamics(const Vec& lengths, const Vec& base, double k) {
    DynamicsMap f;
    f.predict = [=](const Vec& x, const Vec& v) {
        return Vec(k * chain_end_jacobian(x, lengths, base).transpose() * (v - chain_end_position(x, lengths, base)));
    };
    f.jac_x = [=](const Vec& x, const Vec& v) { return duplicated_dynamics_jacobian(x, v, lengths, base, k); };
    f.jac_v = [=](const Vec& x, const Vec&) { return Mat(k * chain_end_jacobian(x, lengths, base).transpose()); };
    return f;
}

struct DuplicatedOptions {
    double pi_proprio = 1.0;
    double pi_hand = 1.0;
    double pi_target = 1.0;
    double pi_x = 1.0;
    double gain = 1.0;
};

// Channels: 0 proprioception (angles), 1 hand position, 2 target position.
inline ContinuousUnit make_duplicated_unit(const Vec& angles0, const Vec& lengths, const Vec& base,
                                           const Vec& target0, const DuplicatedOptions& o) {
    const int n = static_cast<int>(angles0.size());
    ContinuousUnit u;
    u.x = {angles0, Vec::Zero(n)};
    u.v = target0;
    u.eta_x = Vec::Zero(n);
    u.pi_eta_x = Precision::scalar(n, 0.0);
    u.eta_v = Vec::Zero(2);
    u.pi_eta_v = Precision::scalar(2, 0.0);
    Channel p{"proprio", identity_likelihood(n), Precision::scalar(n, o.pi_proprio), true};
    u.channels.push_back(p);
    LikelihoodMap hand;
    hand.out_dim = 2;
    hand.predict = [=](const Vec& x, const Vec&) { return chain_end_position(x, lengths, base); };
    hand.jac_x = [=](const Vec& x, const Vec&) { return chain_end_jacobian(x, lengths, base); };
    u.channels.push_back({"hand", hand, Precision::scalar(2, o.pi_hand)});
    u.channels.push_back({"target", cause_likelihood(n, 2), Precision::scalar(2, o.pi_target)});
    u.f = duplicated_dynamics(lengths, base, o.gain);
    u.pi_x = Precision::scalar(n, o.pi_x);
    return u;
}

} // namespace dynplan
