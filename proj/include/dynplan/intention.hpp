#pragma once
// Flexible intentions over factorized hidden states.

#include "core.hpp"
#include "unit.hpp"

#include <map>

namespace dynplan {

// Ordered named blocks x_0..x_N; block 0 is the body itself.
class EntityFactorization {
public:
    EntityFactorization() = default;
    EntityFactorization(std::vector<std::string> names, std::vector<int> dims)
        : names_(std::move(names)), dims_(std::move(dims)) {
        require(names_.size() == dims_.size() && !names_.empty(), "factorization needs names and dims");
        offsets_.push_back(0);
        for (int d : dims_) {
            require(d > 0, "block dimension must be positive");
            offsets_.push_back(offsets_.back() + d);
        }
    }
    // Equal-dimension blocks.
    EntityFactorization(std::vector<std::string> names, int dim)
        : EntityFactorization(names, std::vector<int>(names.size(), dim)) {}

    int blocks() const { return static_cast<int>(names_.size()); }
    int total() const { return offsets_.back(); }
    int offset(int b) const { return offsets_.at(b); }
    int dim(int b) const { return dims_.at(b); }
    const std::string& name(int b) const { return names_.at(b); }

    int index(const std::string& name) const {
        for (int b = 0; b < blocks(); ++b)
            if (names_[b] == name) return b;
        throw ConfigError("unknown block '" + name + "'");
    }

    Vec concat(const std::vector<Vec>& parts) const {
        require(static_cast<int>(parts.size()) == blocks(), "block count mismatch");
        Vec x(total());
        for (int b = 0; b < blocks(); ++b) {
            require(parts[b].size() == dims_[b], "block dimension mismatch");
            x.segment(offsets_[b], dims_[b]) = parts[b];
        }
        return x;
    }
    std::vector<Vec> split(const Vec& x) const {
        require(x.size() == total(), "state dimension mismatch");
        std::vector<Vec> parts;
        for (int b = 0; b < blocks(); ++b) parts.push_back(x.segment(offsets_[b], dims_[b]));
        return parts;
    }

private:
    std::vector<std::string> names_;
    std::vector<int> dims_;
    std::vector<int> offsets_;
};

struct Intention {
    std::string name;
    Mat W;
    Vec b;

    // Identity map: the stay intention.
    static Intention stay(const std::string& name, int n) { return {name, Mat::Identity(n, n), Vec::Zero(n)}; }

    int dim() const { return static_cast<int>(b.size()); }

    // Row `to` now reads component `from` instead of itself.
    Intention& copy(int to, int from) {
        W.row(to).setZero();
        W(to, from) = 1.0;
        b[to] = 0.0;
        return *this;
    }
    // Row `to` becomes the constant `value`.
    Intention& set(int to, double value) {
        W.row(to).setZero();
        b[to] = value;
        return *this;
    }
};

inline void check_intention(const Intention& i, int n) {
    if (i.W.rows() != n || i.W.cols() != n || i.b.size() != n)
        throw ConfigError("intention '" + i.name + "' does not match state dimension " + std::to_string(n));
}

inline Vec intention_state(const Intention& i, const Vec& x) {
    require(i.W.cols() == x.size() && i.W.rows() == i.b.size(), "intention dimension mismatch");
    return i.W * x + i.b;
}

inline Vec attractor_error(const Intention& i, const Vec& x) {
    require(i.W.rows() == x.size(), "intention output must match state");
    return intention_state(i, x) - x;
}

// eta' = sum_m v_m e_m
inline Vec mix_trajectories(const Vec& v, const std::vector<Vec>& errors) {
    require(static_cast<std::size_t>(v.size()) == errors.size(), "one cause per intention");
    require(!errors.empty(), "no intentions to mix");
    Vec eta = Vec::Zero(errors.front().size());
    for (std::size_t m = 0; m < errors.size(); ++m) eta += v[static_cast<int>(m)] * errors[m];
    return eta;
}

inline Vec dynamics_error_full(const Vec& mu_prime, const Vec& eta_prime) {
    require(mu_prime.size() == eta_prime.size(), "trajectory dimension mismatch");
    return mu_prime - eta_prime;
}

// f(x, v) = sum_m v_m (i_m(x) - x), with v the gains.
inline DynamicsMap intention_dynamics(std::vector<Intention> intentions) {
    require(!intentions.empty(), "need at least one intention");
    const int n = intentions.front().dim();
    for (const auto& i : intentions) check_intention(i, n);
    DynamicsMap f;
    f.predict = [intentions](const Vec& x, const Vec& v) {
        std::vector<Vec> e;
        for (const auto& i : intentions) e.push_back(attractor_error(i, x));
        return mix_trajectories(v, e);
    };
    f.jac_x = [intentions, n](const Vec&, const Vec& v) {
        Mat j = Mat::Zero(n, n);
        for (std::size_t m = 0; m < intentions.size(); ++m)
            j += v[static_cast<int>(m)] * (intentions[m].W - Mat::Identity(n, n));
        return j;
    };
    f.jac_v = [intentions, n](const Vec& x, const Vec&) {
        Mat j(n, static_cast<int>(intentions.size()));
        for (std::size_t m = 0; m < intentions.size(); ++m) j.col(static_cast<int>(m)) = attractor_error(intentions[m], x);
        return j;
    };
    return f;
}

} // namespace dynplan
