#pragma once
// Categorical causes over continuous trajectories: Bayesian model average going down,
// reduced-model evidence and model comparison coming up.

#include "intention.hpp"

namespace dynplan {

// f_m(x) = i_m(x) - x with its own prior precision.
struct ReducedModel {
    Intention intention;
    Precision pi;

    Vec f(const Vec& x) const { return attractor_error(intention, x); }
};

struct ReducedPosterior {
    Vec mean;
    Mat precision;
};

inline Vec bma_prior(const Vec& v, const std::vector<ReducedModel>& models, const Vec& x) {
    std::vector<Vec> f;
    for (const auto& m : models) f.push_back(m.f(x));
    return mix_trajectories(v, f);
}

// P_m = P + Pi_m - Pi ;  mu'_m = P_m^-1 (P mu' + Pi_m f_m - Pi eta')
inline ReducedPosterior reduced_posterior(const Mat& P, const Mat& Pi, const Mat& Pi_m, const Vec& mu_prime,
                                          const Vec& f_m, const Vec& eta_prime) {
    const auto n = mu_prime.size();
    require(P.rows() == n && Pi.rows() == n && Pi_m.rows() == n && f_m.size() == n && eta_prime.size() == n,
            "reduced posterior dimension mismatch");
    ReducedPosterior r;
    r.precision = P + Pi_m - Pi;
    Eigen::LLT<Mat> llt(r.precision);
    if (llt.info() != Eigen::Success)
        throw NumericAbort("degenerate reduction: reduced posterior precision is not positive definite");
    r.mean = llt.solve(P * mu_prime + Pi_m * f_m - Pi * eta_prime);
    return r;
}

// L_m = 1/2 (mu'_m' P_m mu'_m - f_m' Pi_m f_m - mu'' P mu' + eta'' Pi eta')
inline double log_evidence(const Mat& P, const Mat& Pi, const Mat& Pi_m, const Vec& mu_prime, const Vec& f_m,
                           const Vec& eta_prime) {
    ReducedPosterior r = reduced_posterior(P, Pi, Pi_m, mu_prime, f_m, eta_prime);
    return 0.5 * (r.mean.dot(r.precision * r.mean) - f_m.dot(Pi_m * f_m) - mu_prime.dot(P * mu_prime) +
                  eta_prime.dot(Pi * eta_prime));
}

struct HybridState {
    Vec v;    // current causes
    Vec H_v;  // prior over causes
    Vec l;    // accumulated log evidence
    int window = 30;
    int count = 0;
};

inline void check_simplex(const Vec& p, const std::string& what, double tol = 1e-9) {
    if (p.size() == 0 || p.minCoeff() < -tol || std::abs(p.sum() - 1.0) > tol)
        throw ConfigError(what + " is not a probability vector");
}

inline HybridState make_hybrid_state(const Vec& prior, int window) {
    check_simplex(prior, "hybrid prior");
    if (window <= 0) throw ConfigError("hybrid window must be positive");
    return {prior, prior, Vec::Zero(prior.size()), window, 0};
}

// Adds dt * L_m for every reduced model; returns true when the window is complete.
inline bool accumulate_evidence(HybridState& h, const Vec& L, double dt) {
    require(L.size() == h.l.size(), "evidence dimension mismatch");
    h.l += dt * L;
    ++h.count;
    return h.count >= h.window;
}

// v = softmax(ln H_v + l), then the accumulator starts over.
inline Vec bmc_update(HybridState& h) {
    h.v = softmax(clamped_log(h.H_v) + h.l);
    h.l.setZero();
    h.count = 0;
    return h.v;
}

// All L_m for the current posterior.
inline Vec reduced_evidence(const std::vector<ReducedModel>& models, const Mat& P, const Mat& Pi,
                            const Vec& x, const Vec& mu_prime, const Vec& eta_prime) {
    Vec L(static_cast<int>(models.size()));
    for (std::size_t m = 0; m < models.size(); ++m)
        L[static_cast<int>(m)] = log_evidence(P, Pi, models[m].pi.matrix(), mu_prime, models[m].f(x), eta_prime);
    return L;
}

// Hybrid unit over a plain continuous unit: dynamics are the BMA of the reduced models.
struct HybridUnit {
    ContinuousUnit base;
    std::vector<ReducedModel> reduced;
    HybridState state;
    Mat P;  // posterior precision of the 1st order

    // Installs eta' = sum v_m f_m as the dynamics of the base unit.
    void refresh_dynamics() {
        std::vector<Intention> is;
        for (const auto& m : reduced) is.push_back(m.intention);
        base.f = intention_dynamics(is);
        base.v = state.v;
        base.infer_causes = false;
    }

    Vec evidence() const {
        Vec eta = bma_prior(state.v, reduced, base.x.mu);
        return reduced_evidence(reduced, P, base.pi_x.matrix(), base.x.mu, base.x.mu_prime, eta);
    }

    // One tick of the base unit plus evidence; BMC at the window boundary.
    StepOutput tick(const Observations& obs, double dt) {
        Vec L = evidence();
        StepOutput out = step(base, obs, dt);
        if (accumulate_evidence(state, L, dt)) {
            bmc_update(state);
            base.v = state.v;
        }
        return out;
    }
};

} // namespace dynplan
