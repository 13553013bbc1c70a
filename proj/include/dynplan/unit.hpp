#pragma once
// Continuous active-inference unit: hidden states over a path, Gaussian hidden causes,
// pluggable likelihoods and dynamics, and action through proprioceptive errors.

#include "core.hpp"

#include <functional>
#include <optional>
#include <utility>

namespace dynplan {

struct LikelihoodMap {
    int out_dim = 0;
    std::function<Vec(const Vec& x, const Vec& v)> predict;
    std::function<Mat(const Vec& x, const Vec& v)> jac_x;
    std::function<Mat(const Vec& x, const Vec& v)> jac_v;  // empty: g does not depend on v
};

struct DynamicsMap {
    std::function<Vec(const Vec& x, const Vec& v)> predict;
    std::function<Mat(const Vec& x, const Vec& v)> jac_x;
    std::function<Mat(const Vec& x, const Vec& v)> jac_v;  // empty: f does not depend on v
};

struct Channel {
    std::string name;
    LikelihoodMap g;
    Precision pi;
    bool proprioceptive = false;
};

struct ContinuousUnit {
    GeneralizedBelief x;
    Vec v;  // cause mean; may be empty
    Vec eta_x;
    Precision pi_eta_x;
    Vec eta_v;
    Precision pi_eta_v;
    std::vector<Channel> channels;
    DynamicsMap f;
    Precision pi_x;
    bool infer_causes = true;
    Mat action_jacobian;  // d g_p / d a for the proprioceptive channel
};

using Observations = std::vector<std::optional<Vec>>;

struct UnitErrors {
    std::vector<std::optional<Vec>> obs;  // nullopt: channel absent this tick
    Vec eta_x;
    Vec eta_v;
    Vec x;
};

struct StepReport {
    double free_energy = 0.0;
    std::vector<std::pair<std::string, double>> norms;
    std::vector<std::string> missing;
};

struct StepOutput {
    StepReport report;
    Vec action_derivative;
};

inline void check_unit(const ContinuousUnit& u) {
    const int n = u.x.dim();
    require(u.eta_x.size() == n && u.pi_eta_x.dim() == n, "eta_x dimension mismatch");
    require(u.pi_x.dim() == n, "pi_x dimension mismatch");
    require(u.eta_v.size() == u.v.size() && u.pi_eta_v.dim() == u.v.size(), "eta_v dimension mismatch");
    for (const auto& c : u.channels) require(c.pi.dim() == c.g.out_dim, "channel precision mismatch: " + c.name);
}

inline UnitErrors compute_errors(const ContinuousUnit& u, const Observations& obs) {
    require(obs.size() == u.channels.size(), "one observation slot per channel");
    UnitErrors e;
    e.obs.resize(obs.size());
    for (std::size_t k = 0; k < obs.size(); ++k) {
        if (!obs[k]) continue;
        const auto& g = u.channels[k].g;
        require(obs[k]->size() == g.out_dim, "observation dimension mismatch: " + u.channels[k].name);
        e.obs[k] = *obs[k] - g.predict(u.x.mu, u.v);
    }
    e.eta_x = u.x.mu - u.eta_x;
    e.eta_v = u.v - u.eta_v;
    e.x = u.x.mu_prime - u.f.predict(u.x.mu, u.v);
    return e;
}

inline double free_energy(const ContinuousUnit& u, const UnitErrors& e) {
    std::vector<PredictionError> terms;
    for (std::size_t k = 0; k < e.obs.size(); ++k)
        if (e.obs[k]) terms.push_back({u.channels[k].name, *e.obs[k], u.channels[k].pi});
    terms.push_back({"eta_x", e.eta_x, u.pi_eta_x});
    if (u.v.size() > 0) terms.push_back({"eta_v", e.eta_v, u.pi_eta_v});
    terms.push_back({"x", e.x, u.pi_x});
    return laplace_free_energy(terms);
}

// [mu' - Pi_eta e_eta + sum dg'Pi_o e_o + df'Pi_x e_x ; -Pi_x e_x]
inline GeneralizedBelief update_hidden_states(const ContinuousUnit& u, const UnitErrors& e) {
    Vec wx = u.pi_x.apply(e.x);
    Vec d0 = u.x.mu_prime - u.pi_eta_x.apply(e.eta_x) + u.f.jac_x(u.x.mu, u.v).transpose() * wx;
    for (std::size_t k = 0; k < e.obs.size(); ++k) {
        if (!e.obs[k]) continue;
        const auto& c = u.channels[k];
        d0 += c.g.jac_x(u.x.mu, u.v).transpose() * c.pi.apply(*e.obs[k]);
    }
    return {d0, -wx};
}

// -Pi_eta_v e_eta_v + dg_v'Pi_o e_o + df_v'Pi_x e_x
inline Vec update_hidden_causes(const ContinuousUnit& u, const UnitErrors& e) {
    Vec d = -u.pi_eta_v.apply(e.eta_v);
    for (std::size_t k = 0; k < e.obs.size(); ++k) {
        const auto& c = u.channels[k];
        if (!e.obs[k] || !c.g.jac_v) continue;
        d += c.g.jac_v(u.x.mu, u.v).transpose() * c.pi.apply(*e.obs[k]);
    }
    if (u.f.jac_v) d += u.f.jac_v(u.x.mu, u.v).transpose() * u.pi_x.apply(e.x);
    return d;
}

// -dg_p/da' Pi_p e_p
inline Vec update_action(const Mat& dg_da, const PredictionError& proprio) {
    require(dg_da.rows() == proprio.value.size(), "action jacobian mismatch");
    return -dg_da.transpose() * proprio.pi.apply(proprio.value);
}

// One synchronous tick: errors from pre-step beliefs, then everything integrated at once.
inline StepOutput step(ContinuousUnit& u, const Observations& obs, double dt) {
    require(dt > 0.0, "dt must be positive");
    UnitErrors e = compute_errors(u, obs);
    StepOutput out;
    out.report.free_energy = free_energy(u, e);
    for (std::size_t k = 0; k < e.obs.size(); ++k) {
        if (e.obs[k])
            out.report.norms.emplace_back(u.channels[k].name, e.obs[k]->norm());
        else
            out.report.missing.push_back(u.channels[k].name);
    }
    out.report.norms.emplace_back("eta_x", e.eta_x.norm());
    if (u.v.size() > 0) out.report.norms.emplace_back("eta_v", e.eta_v.norm());
    out.report.norms.emplace_back("x", e.x.norm());

    GeneralizedBelief dx = update_hidden_states(u, e);
    Vec dv = (u.v.size() > 0 && u.infer_causes) ? update_hidden_causes(u, e) : Vec::Zero(u.v.size());
    for (std::size_t k = 0; k < e.obs.size(); ++k) {
        const auto& c = u.channels[k];
        if (c.proprioceptive && e.obs[k] && u.action_jacobian.size() > 0) {
            out.action_derivative = update_action(u.action_jacobian, {c.name, *e.obs[k], c.pi});
            break;
        }
    }

    u.x.mu = euler_step(u.x.mu, dx.mu, dt);
    u.x.mu_prime = euler_step(u.x.mu_prime, dx.mu_prime, dt);
    if (u.v.size() > 0) u.v = euler_step(u.v, dv, dt);

    if (!u.x.mu.allFinite()) throw NumericAbort("non-finite belief in unit term mu_x");
    if (!u.x.mu_prime.allFinite()) throw NumericAbort("non-finite belief in unit term mu_x'");
    if (!u.v.allFinite()) throw NumericAbort("non-finite belief in unit term mu_v");
    if (out.action_derivative.size() > 0 && !out.action_derivative.allFinite())
        throw NumericAbort("non-finite action derivative");
    return out;
}

// Common maps.
inline LikelihoodMap identity_likelihood(int n) {
    LikelihoodMap g;
    g.out_dim = n;
    g.predict = [](const Vec& x, const Vec&) { return x; };
    g.jac_x = [n](const Vec&, const Vec&) { return Mat(Mat::Identity(n, n)); };
    return g;
}

// Selects `count` components of x starting at `offset`.
inline LikelihoodMap select_likelihood(int n, int offset, int count) {
    require(offset >= 0 && offset + count <= n, "selection out of range");
    LikelihoodMap g;
    g.out_dim = count;
    g.predict = [offset, count](const Vec& x, const Vec&) { return Vec(x.segment(offset, count)); };
    g.jac_x = [n, offset, count](const Vec&, const Vec&) {
        Mat j = Mat::Zero(count, n);
        j.block(0, offset, count, count).setIdentity();
        return j;
    };
    return g;
}

// Observation generated directly by the causes (target vision in tracking).
inline LikelihoodMap cause_likelihood(int nx, int nv) {
    LikelihoodMap g;
    g.out_dim = nv;
    g.predict = [](const Vec&, const Vec& v) { return v; };
    g.jac_x = [nx, nv](const Vec&, const Vec&) { return Mat(Mat::Zero(nv, nx)); };
    g.jac_v = [nv](const Vec&, const Vec&) { return Mat(Mat::Identity(nv, nv)); };
    return g;
}

// f = rho - x
inline DynamicsMap target_attractor(const Vec& rho) {
    DynamicsMap f;
    const int n = static_cast<int>(rho.size());
    f.predict = [rho](const Vec& x, const Vec&) { return Vec(rho - x); };
    f.jac_x = [n](const Vec&, const Vec&) { return Mat(-Mat::Identity(n, n)); };
    return f;
}

// f = v - x
inline DynamicsMap cause_attractor(int n) {
    DynamicsMap f;
    f.predict = [](const Vec& x, const Vec& v) { return Vec(v - x); };
    f.jac_x = [n](const Vec&, const Vec&) { return Mat(-Mat::Identity(n, n)); };
    f.jac_v = [n](const Vec&, const Vec&) { return Mat(Mat::Identity(n, n)); };
    return f;
}

inline DynamicsMap zero_dynamics(int n) {
    DynamicsMap f;
    f.predict = [n](const Vec&, const Vec&) { return Vec(Vec::Zero(n)); };
    f.jac_x = [n](const Vec&, const Vec&) { return Mat(Mat::Zero(n, n)); };
    return f;
}

} // namespace dynplan
