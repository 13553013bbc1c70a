// One joint reaching 120 deg from a belief of -40 deg, assembled from the unit API directly.
#include <dynplan/unit.hpp>

#include <cstdio>

using namespace dynplan;

int main() {
    const double dt = 0.01, gain = 500.0;
    const double deg = kPi / 180.0;

    ContinuousUnit u;
    u.x = {Vec::Constant(1, -40.0 * deg), Vec::Zero(1)};
    u.eta_x = Vec::Zero(1);
    u.pi_eta_x = Precision::scalar(1, 0.0);
    u.pi_eta_v = Precision::scalar(0, 1.0);
    u.f = target_attractor(Vec::Constant(1, 120.0 * deg));
    u.pi_x = Precision::scalar(1, 1.0);
    u.channels.push_back({"proprio", identity_likelihood(1), Precision::scalar(1, 1.0), true});
    u.action_jacobian = Mat::Constant(1, 1, gain * dt);
    check_unit(u);

    double angle = 0.0, velocity = 0.0;
    double f0 = 0.0;
    for (int k = 0; k <= 5000; ++k) {
        StepOutput out = step(u, {Vec::Constant(1, angle)}, dt);
        if (k == 0) f0 = out.report.free_energy;
        // the action derivative drives the joint velocity
        velocity += dt * out.action_derivative[0];
        angle += dt * velocity;
        if (k % 500 == 0)
            std::printf("t=%5.2f  arm=%8.3f deg  belief=%8.3f deg  F=%.3e\n", k * dt, angle / deg, u.x.mu[0] / deg,
                        out.report.free_energy);
        if (k == 5000) std::printf("F_final/F_init = %.3e\n", out.report.free_energy / f0);
    }
    return 0;
}
