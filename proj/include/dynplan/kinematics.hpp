#pragma once
// Planar roto-translations and the intrinsic/extrinsic (IE) link between levels.
// Extrinsic vectors are [x, y, phi]; intrinsic vectors are [theta, length].

#include "core.hpp"
#include "unit.hpp"

namespace dynplan {

struct ExtrinsicState {
    double x = 0.0;
    double y = 0.0;
    double phi = 0.0;

    Vec vec() const { return (Vec(3) << x, y, phi).finished(); }
    static ExtrinsicState from(const Vec& v) {
        require(v.size() == 3, "extrinsic state has 3 components");
        return {v[0], v[1], v[2]};
    }
};

struct IntrinsicState {
    double angle = 0.0;
    double length = 0.0;

    Vec vec() const { return (Vec(2) << angle, length).finished(); }
    static IntrinsicState from(const Vec& v) {
        require(v.size() == 2, "intrinsic state has 2 components");
        return {v[0], v[1]};
    }
};

inline ExtrinsicState roto_translate(const ExtrinsicState& parent, const IntrinsicState& intr) {
    const double phi = parent.phi + intr.angle;
    return {parent.x + intr.length * std::cos(phi), parent.y + intr.length * std::sin(phi), phi};
}

inline Vec roto_translate(const Vec& parent, const Vec& intr) {
    return roto_translate(ExtrinsicState::from(parent), IntrinsicState::from(intr)).vec();
}

// d g / d parent (3x3)
inline Mat roto_jacobian_parent(const Vec& parent, const Vec& intr) {
    const double phi = parent[2] + intr[0];
    const double l = intr[1];
    Mat j = Mat::Identity(3, 3);
    j(0, 2) = -l * std::sin(phi);
    j(1, 2) = l * std::cos(phi);
    return j;
}

// d g / d intrinsic (3x2)
inline Mat roto_jacobian_intrinsic(const Vec& parent, const Vec& intr) {
    const double phi = parent[2] + intr[0];
    const double l = intr[1];
    Mat j(3, 2);
    j << -l * std::sin(phi), std::cos(phi),
          l * std::cos(phi), std::sin(phi),
          1.0, 0.0;
    return j;
}

inline std::vector<ExtrinsicState> forward_kinematics(const std::vector<IntrinsicState>& chain,
                                                      const ExtrinsicState& root) {
    require(!chain.empty(), "forward kinematics needs a nonempty chain");
    std::vector<ExtrinsicState> out;
    ExtrinsicState cur = root;
    for (const auto& link : chain) {
        cur = roto_translate(cur, link);
        out.push_back(cur);
    }
    return out;
}

struct IEGradients {
    Vec parent;     // dg/dx_e(i-1)' Pi eps
    Vec intrinsic;  // dg/dx_i' Pi eps
};

inline IEGradients ie_gradients(const Vec& parent, const Vec& intr, const PredictionError& eps_e) {
    Vec w = eps_e.pi.apply(eps_e.value);
    return {roto_jacobian_parent(parent, intr).transpose() * w,
            roto_jacobian_intrinsic(parent, intr).transpose() * w};
}

// End-effector position of a serial chain as a function of its joint angles (fixed lengths).
inline Vec chain_end_position(const Vec& angles, const Vec& lengths, const Vec& base) {
    require(angles.size() == lengths.size(), "angles and lengths differ");
    double x = base[0], y = base[1], phi = base[2];
    for (int k = 0; k < angles.size(); ++k) {
        phi += angles[k];
        x += lengths[k] * std::cos(phi);
        y += lengths[k] * std::sin(phi);
    }
    return (Vec(2) << x, y).finished();
}

// d end / d angles (2 x n)
inline Mat chain_end_jacobian(const Vec& angles, const Vec& lengths, const Vec& base) {
    const int n = static_cast<int>(angles.size());
    Vec phis(n);
    double phi = base[2];
    for (int k = 0; k < n; ++k) {
        phi += angles[k];
        phis[k] = phi;
    }
    Mat j = Mat::Zero(2, n);
    for (int c = 0; c < n; ++c)
        for (int k = c; k < n; ++k) {
            j(0, c) -= lengths[k] * std::sin(phis[k]);
            j(1, c) += lengths[k] * std::cos(phis[k]);
        }
    return j;
}

// Vision of a potential configuration: hand position of the block [offset, offset+n).
inline LikelihoodMap fk_likelihood(int total, int offset, const Vec& lengths, const Vec& base) {
    const int n = static_cast<int>(lengths.size());
    require(offset >= 0 && offset + n <= total, "fk block out of range");
    LikelihoodMap g;
    g.out_dim = 2;
    g.predict = [=](const Vec& x, const Vec&) { return chain_end_position(x.segment(offset, n), lengths, base); };
    g.jac_x = [=](const Vec& x, const Vec&) {
        Mat j = Mat::Zero(2, total);
        j.block(0, offset, 2, n) = chain_end_jacobian(x.segment(offset, n), lengths, base);
        return j;
    };
    return g;
}

} // namespace dynplan
