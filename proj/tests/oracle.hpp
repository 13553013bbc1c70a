#pragma once
// Independent reference computations shared by the unit tests and the acceptance binary.

#include <dynplan/core.hpp>

#include <complex>
#include <functional>
#include <random>

namespace oracle {

using dynplan::Mat;
using dynplan::Vec;

// Central differences of a vector function.
inline Mat numeric_jacobian(const std::function<Vec(const Vec&)>& f, const Vec& x, double h = 1e-6) {
    Vec f0 = f(x);
    Mat J(f0.size(), x.size());
    for (int i = 0; i < x.size(); ++i) {
        Vec xp = x, xm = x;
        xp[i] += h;
        xm[i] -= h;
        J.col(i) = (f(xp) - f(xm)) / (2.0 * h);
    }
    return J;
}

// max |A - N| / max(1, max |N|)
inline double relative_gap(const Mat& A, const Mat& N) {
    if (A.size() == 0 && N.size() == 0) return 0.0;
    return (A - N).cwiseAbs().maxCoeff() / std::max(1.0, N.cwiseAbs().maxCoeff());
}

// End position of a planar chain by folding unit complex exponentials.
inline std::complex<double> complex_fold(const Vec& angles, const Vec& lengths, std::complex<double> base, double phi0) {
    std::complex<double> z = base;
    std::complex<double> rot = std::polar(1.0, phi0);
    for (int k = 0; k < angles.size(); ++k) {
        rot *= std::polar(1.0, angles[k]);
        z += lengths[k] * rot;
    }
    return z;
}

inline Vec random_vec(std::mt19937_64& rng, int n, double lo, double hi) {
    std::uniform_real_distribution<double> u(lo, hi);
    Vec v(n);
    for (int i = 0; i < n; ++i) v[i] = u(rng);
    return v;
}

inline Vec random_simplex(std::mt19937_64& rng, int n, double floor = 0.02) {
    Vec v = random_vec(rng, n, floor, 1.0);
    return v / v.sum();
}

inline Mat random_stochastic(std::mt19937_64& rng, int rows, int cols) {
    Mat m(rows, cols);
    for (int j = 0; j < cols; ++j) m.col(j) = random_simplex(rng, rows);
    return m;
}

// Gauss-Legendre nodes/weights on [-1, 1] via Newton iteration.
inline void gauss_legendre(int n, std::vector<double>& x, std::vector<double>& w) {
    x.assign(n, 0.0);
    w.assign(n, 0.0);
    for (int i = 0; i < n; ++i) {
        double z = std::cos(3.141592653589793 * (i + 0.75) / (n + 0.5));
        double dp = 0.0;
        for (int it = 0; it < 100; ++it) {
            double p0 = 1.0, p1 = 0.0;
            for (int k = 1; k <= n; ++k) {
                double p2 = p1;
                p1 = p0;
                p0 = ((2.0 * k - 1.0) * z * p1 - (k - 1.0) * p2) / k;
            }
            dp = n * (z * p0 - p1) / (z * z - 1.0);
            double dz = p0 / dp;
            z -= dz;
            if (std::abs(dz) < 1e-15) break;
        }
        x[i] = z;
        w[i] = 2.0 / ((1.0 - z * z) * dp * dp);
    }
}

struct QuadratureBmr {
    double log_z = 0.0;  // ln of the integral of q(x) p_m(x) / p(x)
    double mean = 0.0;
    double precision = 0.0;
};

inline double log_normal(double x, double m, double prec) {
    return 0.5 * std::log(prec / (2.0 * 3.141592653589793)) - 0.5 * prec * (x - m) * (x - m);
}

// Reduced posterior of a 1-D Gaussian model by direct integration.
inline QuadratureBmr quadrature_bmr(double mu, double P, double eta, double Pi, double f, double Pi_m) {
    // integrand is Gaussian-shaped; integrate over a generous window around the posterior mean
    const double Pm = P + Pi_m - Pi;
    const double center = (P * mu + Pi_m * f - Pi * eta) / Pm;
    const double half = 12.0 / std::sqrt(Pm);
    std::vector<double> xs, ws;
    gauss_legendre(200, xs, ws);
    auto log_integrand = [&](double x) { return log_normal(x, mu, P) + log_normal(x, f, Pi_m) - log_normal(x, eta, Pi); };
    double lmax = log_integrand(center);
    double z = 0.0, m1 = 0.0, m2 = 0.0;
    for (int i = 0; i < 200; ++i) {
        double x = center + half * xs[i];
        double g = std::exp(log_integrand(x) - lmax) * half * ws[i];
        z += g;
        m1 += g * x;
        m2 += g * x * x;
    }
    QuadratureBmr r;
    r.log_z = std::log(z) + lmax;
    r.mean = m1 / z;
    r.precision = 1.0 / (m2 / z - r.mean * r.mean);
    return r;
}

// Marginals of p(s_0..s_T) ~ prior(s_0) prod B_t(s_t | s_t-1) prod exp(ll_t(s_t)) by listing every path.
inline std::vector<Vec> enumerate_marginals(const Vec& prior, const std::vector<Mat>& B, const std::vector<Vec>& ll) {
    const int n = static_cast<int>(prior.size());
    const int T = static_cast<int>(ll.size());
    std::vector<Vec> marg(T, Vec::Zero(n));
    std::vector<int> path(T, 0);
    double total = 0.0;
    for (;;) {
        double w = prior[path[0]] * std::exp(ll[0][path[0]]);
        for (int t = 1; t < T; ++t) w *= B[t - 1](path[t], path[t - 1]) * std::exp(ll[t][path[t]]);
        total += w;
        for (int t = 0; t < T; ++t) marg[t][path[t]] += w;
        int k = T - 1;
        while (k >= 0 && ++path[k] == n) path[k--] = 0;
        if (k < 0) break;
    }
    for (auto& m : marg) m /= total;
    return marg;
}

} // namespace oracle
