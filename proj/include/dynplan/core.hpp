#pragma once
// Generalized-coordinate numerics shared by every unit.

#include "errors.hpp"

#include <Eigen/Dense>
#include <cmath>
#include <string>
#include <vector>

namespace dynplan {

using Vec = Eigen::VectorXd;
using Mat = Eigen::MatrixXd;

constexpr double kLogFloor = 1e-10;

inline bool all_finite(const Vec& v) { return v.allFinite(); }

// Belief over a path: 0th and 1st order.
struct GeneralizedBelief {
    Vec mu;
    Vec mu_prime;

    GeneralizedBelief() = default;
    GeneralizedBelief(Vec m, Vec mp) : mu(std::move(m)), mu_prime(std::move(mp)) {
        require(mu.size() == mu_prime.size(), "belief orders differ in dimension");
    }
    static GeneralizedBelief zeros(int n) { return {Vec::Zero(n), Vec::Zero(n)}; }

    int dim() const { return static_cast<int>(mu.size()); }
    bool finite() const { return mu.allFinite() && mu_prime.allFinite(); }
};

// Symmetric PSD weighting. Diagonal unless built from a full matrix.
class Precision {
public:
    Precision() = default;

    explicit Precision(Mat m) : m_(std::move(m)), diag_(false) {
        require(m_.rows() == m_.cols(), "precision must be square");
        require((m_ - m_.transpose()).cwiseAbs().maxCoeff() <= 1e-9 * (1.0 + m_.cwiseAbs().maxCoeff()),
                "precision must be symmetric");
        Eigen::SelfAdjointEigenSolver<Mat> es(m_, Eigen::EigenvaluesOnly);
        require(es.eigenvalues().minCoeff() >= -1e-9, "precision must be positive semidefinite");
    }

    static Precision diagonal(const Vec& d) {
        for (int i = 0; i < d.size(); ++i) require(d[i] >= 0.0, "negative precision entry");
        Precision p;
        p.m_ = d.asDiagonal();
        p.diag_ = true;
        return p;
    }
    static Precision scalar(int n, double s) { return diagonal(Vec::Constant(n, s)); }
    static Precision identity(int n) { return scalar(n, 1.0); }

    int dim() const { return static_cast<int>(m_.rows()); }
    bool is_diagonal() const { return diag_; }
    const Mat& matrix() const { return m_; }

    Vec apply(const Vec& e) const {
        require(e.size() == m_.rows(), "precision/error dimension mismatch");
        if (diag_) return m_.diagonal().cwiseProduct(e);
        return m_ * e;
    }
    double quad(const Vec& e) const { return e.dot(apply(e)); }

    Precision block(int start, int n) const {
        Precision p;
        p.m_ = m_.block(start, start, n, n);
        p.diag_ = diag_;
        return p;
    }

private:
    Mat m_;
    bool diag_ = true;
};

struct PredictionError {
    std::string name;
    Vec value;
    Precision pi;
};

inline Vec weighted_error(const Vec& err, const Precision& pi) { return pi.apply(err); }

// Sum of 1/2 e'Pi e, additive log-det constants dropped.
inline double laplace_free_energy(const std::vector<PredictionError>& errors) {
    double f = 0.0;
    for (const auto& e : errors) f += 0.5 * e.pi.quad(e.value);
    return f;
}

inline GeneralizedBelief shift_operator(const GeneralizedBelief& b) {
    return {b.mu_prime, Vec::Zero(b.dim())};
}

inline Vec euler_step(const Vec& state, const Vec& derivative, double dt) {
    require(dt > 0.0, "dt must be positive");
    require(state.size() == derivative.size(), "euler_step dimension mismatch");
    return state + dt * derivative;
}

inline double clamped_log(double x) { return std::log(std::max(x, kLogFloor)); }

inline Vec clamped_log(const Vec& x) {
    Vec r(x.size());
    for (int i = 0; i < x.size(); ++i) r[i] = clamped_log(x[i]);
    return r;
}

inline Mat clamped_log(const Mat& x) {
    Mat r(x.rows(), x.cols());
    for (int j = 0; j < x.cols(); ++j)
        for (int i = 0; i < x.rows(); ++i) r(i, j) = clamped_log(x(i, j));
    return r;
}

inline Vec softmax(const Vec& x) {
    require(x.size() > 0, "softmax of empty vector");
    Vec e = (x.array() - x.maxCoeff()).exp();
    return e / e.sum();
}

constexpr double kPi = 3.14159265358979323846;
inline double deg2rad(double d) { return d * kPi / 180.0; }
inline double rad2deg(double r) { return r * 180.0 / kPi; }

} // namespace dynplan
