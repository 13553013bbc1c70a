#pragma once
// Discrete planner over categorical states whose outcomes include the hybrid units' causes.
//
// Time slices of a policy run tau = 0..H: slice 0 is the current step, slices 1..H are
// reached by the H actions of the policy.

#include "core.hpp"
#include "hybrid.hpp"

#include <optional>

namespace dynplan {

struct Modality {
    std::string name;
    Mat A;      // outcomes x states, columns on the simplex
    Vec C;      // log preferences over outcomes
    bool cause = false;  // outcomes are a hybrid unit's causes
    std::vector<std::string> outcomes;

    int outcome(const std::string& n) const {
        for (std::size_t i = 0; i < outcomes.size(); ++i)
            if (outcomes[i] == n) return static_cast<int>(i);
        return -1;
    }
};

struct DiscreteModel {
    std::vector<std::string> states;
    std::vector<std::string> actions;
    std::vector<Modality> modalities;
    std::vector<Mat> B;  // one per action, next x current, columns on the simplex
    Vec D;
    int horizon = 1;
    std::vector<std::vector<int>> policies;
    bool policy_uses_vfe = false;
    int sweeps = 16;

    int n_states() const { return static_cast<int>(D.size()); }
};

inline std::vector<std::vector<int>> enumerate_policies(int n_actions, int horizon) {
    require(n_actions > 0 && horizon > 0, "policy enumeration needs actions and a horizon");
    std::vector<std::vector<int>> out{{}};
    for (int t = 0; t < horizon; ++t) {
        std::vector<std::vector<int>> next;
        for (const auto& p : out)
            for (int a = 0; a < n_actions; ++a) {
                auto q = p;
                q.push_back(a);
                next.push_back(q);
            }
        out = std::move(next);
    }
    return out;
}

inline std::vector<std::string> validate_model(const DiscreteModel& m, double tol = 1e-9) {
    std::vector<std::string> errs;
    auto check_cols = [&](const Mat& M, const std::string& what) {
        for (int j = 0; j < M.cols(); ++j) {
            if (M.col(j).minCoeff() < 0.0) errs.push_back(what + " column " + std::to_string(j) + " has a negative entry");
            double s = M.col(j).sum();
            if (std::abs(s - 1.0) > tol)
                errs.push_back(what + " column " + std::to_string(j) + " sums to " + std::to_string(s));
        }
    };
    const int n = m.n_states();
    if (n == 0) errs.push_back("D is empty");
    if (n > 0 && (m.D.minCoeff() < 0.0 || std::abs(m.D.sum() - 1.0) > tol)) errs.push_back("D is not on the simplex");
    if (m.B.size() != m.actions.size()) errs.push_back("one B matrix per action required");
    for (std::size_t a = 0; a < m.B.size(); ++a) {
        if (m.B[a].rows() != n || m.B[a].cols() != n) errs.push_back("B[" + std::to_string(a) + "] has wrong shape");
        else check_cols(m.B[a], "B[" + (a < m.actions.size() ? m.actions[a] : std::to_string(a)) + "]");
    }
    for (const auto& mod : m.modalities) {
        if (mod.A.cols() != n) errs.push_back("A of '" + mod.name + "' has wrong column count");
        else check_cols(mod.A, "A of '" + mod.name + "'");
        if (mod.C.size() != mod.A.rows()) errs.push_back("C of '" + mod.name + "' has wrong length");
    }
    if (m.horizon <= 0) errs.push_back("horizon must be positive");
    for (const auto& p : m.policies)
        for (int a : p)
            if (a < 0 || a >= static_cast<int>(m.actions.size())) errs.push_back("policy references unknown action");
    return errs;
}

// Per slice, per modality: observed outcome distribution (nullopt: not observed).
using DiscreteObs = std::vector<std::vector<std::optional<Vec>>>;

// ln A' v summed over observed modalities of one slice.
inline Vec log_likelihood(const DiscreteModel& m, const std::vector<std::optional<Vec>>& obs) {
    Vec ll = Vec::Zero(m.n_states());
    for (std::size_t k = 0; k < obs.size() && k < m.modalities.size(); ++k)
        if (obs[k]) ll += clamped_log(m.modalities[k].A).transpose() * *obs[k];
    return ll;
}

// s_tau = softmax(ln B_{tau-1} s_{tau-1} + ln B_tau' s_{tau+1} + ln A' v_tau), where the past and future
// terms carry the forward (filtered) and backward (smoothed evidence) messages; on a chain this is exact.
inline std::vector<Vec> infer_states(const DiscreteModel& m, const std::vector<int>& policy, const Vec& prior,
                                     const DiscreteObs& obs) {
    const int T = static_cast<int>(policy.size()) + 1;
    const int n = m.n_states();
    require(prior.size() == n, "prior dimension mismatch");
    std::vector<Vec> ll(T, Vec::Zero(n));
    for (int t = 0; t < T && t < static_cast<int>(obs.size()); ++t) ll[t] = log_likelihood(m, obs[t]);

    std::vector<Vec> fwd(T), bwd(T, Vec::Constant(n, 1.0 / n)), s(T, Vec::Constant(n, 1.0 / n));
    for (int sweep = 0; sweep < std::max(1, m.sweeps); ++sweep) {
        fwd[0] = softmax(clamped_log(prior) + ll[0]);
        for (int t = 1; t < T; ++t) fwd[t] = softmax(clamped_log(Vec(m.B[policy[t - 1]] * fwd[t - 1])) + ll[t]);
        bwd[T - 1] = Vec::Constant(n, 1.0 / n);
        for (int t = T - 2; t >= 0; --t) {
            Vec msg = softmax(ll[t + 1] + clamped_log(bwd[t + 1]));
            bwd[t] = softmax(clamped_log(Vec(m.B[policy[t]].transpose() * msg)));
        }
        for (int t = 0; t < T; ++t) {
            Vec past = t == 0 ? clamped_log(prior) : clamped_log(Vec(m.B[policy[t - 1]] * fwd[t - 1]));
            s[t] = softmax(past + clamped_log(bwd[t]) + ll[t]);
        }
    }
    return s;
}

// F = sum s ln s - sum v ln A s - s_0 ln D - sum s_tau ln B s_{tau-1}
inline double variational_free_energy(const DiscreteModel& m, const std::vector<int>& policy, const Vec& prior,
                                      const DiscreteObs& obs, const std::vector<Vec>& s) {
    double f = 0.0;
    for (std::size_t t = 0; t < s.size(); ++t) {
        f += s[t].dot(clamped_log(s[t]));
        if (t < obs.size())
            for (std::size_t k = 0; k < obs[t].size() && k < m.modalities.size(); ++k)
                if (obs[t][k]) f -= obs[t][k]->dot(clamped_log(m.modalities[k].A) * s[t]);
    }
    f -= s[0].dot(clamped_log(prior));
    for (std::size_t t = 1; t < s.size(); ++t) f -= s[t].dot(clamped_log(m.B[policy[t - 1]]) * s[t - 1]);
    return f;
}

struct EfeTerms {
    double risk = 0.0;
    double ambiguity = 0.0;
    double total() const { return risk + ambiguity; }
};

// H_A = -diag(A' ln A)
inline Vec ambiguity_vector(const Mat& A) {
    Mat L = clamped_log(A);
    Vec h(A.cols());
    for (int j = 0; j < A.cols(); ++j) h[j] = -A.col(j).dot(L.col(j));
    return h;
}

// G = sum_tau [ v_tau (ln v_tau - C) + s_tau H_A ], v_tau = A s_tau, over future slices and modalities.
inline EfeTerms expected_free_energy_terms(const DiscreteModel& m, const std::vector<Vec>& s) {
    EfeTerms g;
    for (std::size_t t = 1; t < s.size(); ++t)
        for (const auto& mod : m.modalities) {
            Vec v = mod.A * s[t];
            g.risk += v.dot(clamped_log(v) - mod.C);
            g.ambiguity += s[t].dot(ambiguity_vector(mod.A));
        }
    return g;
}

inline double expected_free_energy(const DiscreteModel& m, const std::vector<Vec>& s) {
    return expected_free_energy_terms(m, s).total();
}

inline Vec infer_policies(const Vec& G, const Vec& F, bool use_vfe) {
    return use_vfe ? softmax(-G - F) : softmax(-G);
}

// v = softmax(ln A s + l)
inline Vec top_down_causes(const Mat& A, const Vec& s, const Vec& l) {
    require(A.cols() == s.size() && A.rows() == l.size(), "top-down cause dimension mismatch");
    return softmax(clamped_log(Vec(A * s)) + l);
}

struct PlannerStep {
    int tau = 0;
    Vec state;       // marginal at the current step
    Vec next_state;  // marginal predicted for the next step
    Vec policy;
    Vec G;
    Vec F;
    std::vector<Vec> observed;  // per modality, what entered state inference
    std::vector<Vec> emitted;   // per modality, prior for the next window
};

class Planner {
public:
    explicit Planner(DiscreteModel m) : m_(std::move(m)), prior_(m_.D) {
        auto errs = validate_model(m_);
        if (!errs.empty()) throw ConfigError("discrete model: " + errs.front());
        if (m_.policies.empty()) m_.policies = enumerate_policies(static_cast<int>(m_.actions.size()), m_.horizon);
    }

    const DiscreteModel& model() const { return m_; }
    const Vec& prior() const { return prior_; }

    // inputs[k]: accumulated log evidence for cause modalities, outcome distribution otherwise.
    PlannerStep step(const std::vector<Vec>& inputs) {
        require(inputs.size() == m_.modalities.size(), "one input per modality");
        PlannerStep out;
        out.tau = tau_++;
        DiscreteObs obs(1);
        for (std::size_t k = 0; k < inputs.size(); ++k) {
            const auto& mod = m_.modalities[k];
            Vec o = mod.cause ? top_down_causes(mod.A, prior_, inputs[k]) : inputs[k];
            require(o.size() == mod.A.rows(), "observation size mismatch for " + mod.name);
            obs[0].push_back(o);
            out.observed.push_back(o);
        }
        const int P = static_cast<int>(m_.policies.size());
        out.G.resize(P);
        out.F.resize(P);
        std::vector<std::vector<Vec>> s(P);
        for (int p = 0; p < P; ++p) {
            s[p] = infer_states(m_, m_.policies[p], prior_, obs);
            out.F[p] = variational_free_energy(m_, m_.policies[p], prior_, obs, s[p]);
            out.G[p] = expected_free_energy(m_, s[p]);
        }
        out.policy = infer_policies(out.G, out.F, m_.policy_uses_vfe);
        out.state = Vec::Zero(m_.n_states());
        out.next_state = Vec::Zero(m_.n_states());
        for (int p = 0; p < P; ++p) {
            out.state += out.policy[p] * s[p][0];
            out.next_state += out.policy[p] * s[p][1];
        }
        for (const auto& mod : m_.modalities)
            out.emitted.push_back(top_down_causes(mod.A, out.next_state, Vec::Zero(mod.A.rows())));
        prior_ = out.next_state;
        return out;
    }

private:
    DiscreteModel m_;
    Vec prior_;
    int tau_ = 0;
};

} // namespace dynplan
