// Prints one PASS/FAIL line per acceptance criterion; nonzero exit if any fails.
#include "oracle.hpp"

#include <dynplan/discrete.hpp>
#include <dynplan/duplicated.hpp>
#include <dynplan/runner.hpp>

#include <chrono>
#include <cstdio>
#include <filesystem>
#include <thread>

using namespace dynplan;
namespace fs = std::filesystem;

namespace {

int failures = 0;

void report(bool pass, const std::string& name, const std::string& detail) {
    std::printf("[%s] %s: %s\n", pass ? "PASS" : "FAIL", name.c_str(), detail.c_str());
    std::fflush(stdout);
    if (!pass) ++failures;
}

std::string num(double x) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.3g", x);
    return buf;
}

std::string scenario(const std::string& name) { return std::string(SCENARIO_DIR) + "/" + name + ".yaml"; }

struct Ran {
    Simulation sim;
    RunResult r;
};

Ran run(const std::string& name) {
    Ran x{load_simulation(scenario(name)), {}};
    x.r = run_simulation(x.sim);
    return x;
}

double seconds_since(std::chrono::steady_clock::time_point t0) {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

std::size_t last_quarter(const RunResult& r) { return r.rows.size() - r.rows.size() / 4; }

void reaching() {
    Ran x = run("reaching_1dof");
    auto xs = x.r.series("x"), mu = x.r.series("mu"), F = x.r.series("F");
    double ex = std::abs(xs.back() - 120.0), em = std::abs(mu.back() - 120.0);
    double ratio = F.back() / F.front();
    bool ok = ex < 1.0 && em < 1.0 && ratio < 0.01 && x.sim.ticks <= 5000 && x.r.seconds < 1.0;
    report(ok, "reaching",
           "|x-120|=" + num(ex) + " deg, |mu-120|=" + num(em) + " deg (tol 1), F_final/F_init=" + num(ratio) +
               " (tol 0.01), ticks=" + std::to_string(x.sim.ticks) + " (max 5000), runtime=" + num(x.r.seconds) +
               " s (tol 1)");
}

void tracking() {
    Ran x = run("tracking_1dof");
    auto xs = x.r.series("x"), mu = x.r.series("mu"), mp = x.r.series("mu_prime");
    double gap = 0.0, speed = 0.0;
    for (std::size_t i = last_quarter(x.r); i < xs.size(); ++i) {
        gap = std::max(gap, std::abs(mu[i] - xs[i]));
        speed = std::max(speed, std::abs(mp[i] - 10.0) / 10.0);
    }
    report(gap < 1.0 && speed < 0.1, "tracking",
           "last quarter max |mu-x|=" + num(gap) + " deg (tol 1), max |mu'-10|/10=" + num(speed) + " (tol 0.1)");
}

void dynamic_inference() {
    Ran x = run("dynamic_inference");
    auto h = x.r.series("hand_t2"), v1 = x.r.series("v_t1"), v2 = x.r.series("v_t2");
    // approach: the hand first comes within the contact radius of target 2
    const double radius = x.sim.world.radius();
    std::size_t from = h.size();
    for (std::size_t i = 0; i < h.size(); ++i)
        if (h[i] < radius) {
            from = i;
            break;
        }
    bool ok = from < h.size();
    double margin = 1e300;
    for (std::size_t i = from; i < h.size(); ++i) margin = std::min(margin, v2[i] - v1[i]);
    ok = ok && margin > 0.0;
    report(ok, "dynamic inference",
           from < h.size() ? "hand within " + num(radius) + " of target 2 at tick " + std::to_string(x.r.ticks[from]) +
                                 ", min (v_t2 - v_t1) from then to the end=" + num(margin) + " (must be > 0)"
                           : "hand never within " + num(radius) + " of target 2");
}

void pick_and_place() {
    Ran x = run("pick_and_place");
    auto ho = x.r.series("hand_object"), og = x.r.series("object_goal");
    const double radius = x.sim.world.radius();
    double closest = *std::min_element(ho.begin(), ho.end());
    const double arm = x.sim.world.arms.front().total_length();
    // phase order from the per-step log: most probable state at each step
    const auto& rows = x.r.discrete.at(0);
    const auto& names = x.r.discrete_names.at(0);
    std::vector<std::string> phases;
    for (const auto& row : rows) {
        Eigen::Index k;
        row.step.state.maxCoeff(&k);
        if (phases.empty() || phases.back() != names[k]) phases.push_back(names[k]);
    }
    std::vector<std::string> want{"reach", "grasp", "place"};
    std::size_t w = 0;
    for (const auto& p : phases)
        if (w < want.size() && p == want[w]) ++w;
    std::string seq;
    for (const auto& p : phases) seq += (seq.empty() ? "" : ">") + p;
    bool ok = closest < radius && og.back() < 0.05 * arm && w == want.size();
    report(ok, "pick-and-place",
           "min hand-object=" + num(closest) + " (contact radius " + num(radius) + "), final object-goal=" + num(og.back()) +
               " (tol " + num(0.05 * arm) + "), phases " + seq);
}

void tool_use() {
    Ran x = run("tool_use");
    auto len = x.r.series("tool_length"), tip = x.r.series("belief_tip_ball");
    const double truth = x.sim.world.tools.front().length, tol = 0.1 * x.sim.world.arms.front().total_length();
    double rel = std::abs(len.back() - truth) / truth;
    double worst = 0.0;
    for (std::size_t i = last_quarter(x.r); i < tip.size(); ++i) worst = std::max(worst, tip[i]);
    report(rel < 0.05 && worst < tol, "tool use",
           "tool length " + num(len.back()) + " vs " + num(truth) + ", rel error " + num(rel) +
               " (tol 0.05); last quarter max |extremity belief - ball|=" + num(worst) + " (tol " + num(tol) + ")");
}

// Analytic jacobians against central differences.
void gradients() {
    auto t0 = std::chrono::steady_clock::now();
    std::mt19937_64 rng(101);
    double worst = 0.0;
    int checks = 0;
    auto check = [&](const Mat& a, const std::function<Vec(const Vec&)>& f, const Vec& x) {
        worst = std::max(worst, oracle::relative_gap(a, oracle::numeric_jacobian(f, x)));
        ++checks;
    };
    const int N = 100;
    for (int t = 0; t < N; ++t) {
        Vec p = oracle::random_vec(rng, 3, -2.0, 2.0), in = oracle::random_vec(rng, 2, -3.0, 3.0);
        check(roto_jacobian_parent(p, in), [&](const Vec& y) { return roto_translate(y, in); }, p);
        check(roto_jacobian_intrinsic(p, in), [&](const Vec& y) { return roto_translate(p, y); }, in);
    }
    for (int t = 0; t < N; ++t) {
        int n = 1 + t % 8;
        Vec a = oracle::random_vec(rng, n, -3.0, 3.0), l = oracle::random_vec(rng, n, 0.1, 1.5);
        Vec base = oracle::random_vec(rng, 3, -1.0, 1.0);
        check(chain_end_jacobian(a, l, base), [&](const Vec& y) { return chain_end_position(y, l, base); }, a);
        int total = n + 2;
        LikelihoodMap g = fk_likelihood(total, 1, l, base);
        Vec x = oracle::random_vec(rng, total, -3.0, 3.0), v;
        check(g.jac_x(x, v), [&](const Vec& y) { return g.predict(y, v); }, x);
    }
    for (int t = 0; t < N; ++t) {
        int n = 2 + t % 5, m = 1 + t % 3;
        std::vector<Intention> is;
        for (int k = 0; k < m; ++k)
            is.push_back({"i" + std::to_string(k), oracle::random_vec(rng, n * n, -1.0, 1.0).reshaped(n, n),
                          oracle::random_vec(rng, n, -1.0, 1.0)});
        DynamicsMap f = intention_dynamics(is);
        Vec x = oracle::random_vec(rng, n, -2.0, 2.0), v = oracle::random_vec(rng, m, 0.0, 1.0);
        check(f.jac_x(x, v), [&](const Vec& y) { return f.predict(y, v); }, x);
        check(f.jac_v(x, v), [&](const Vec& y) { return f.predict(x, y); }, v);
    }
    for (int t = 0; t < N; ++t) {
        int n = 1 + t % 6;
        Vec l = oracle::random_vec(rng, n, 0.2, 1.0), base = oracle::random_vec(rng, 3, -1.0, 1.0);
        DynamicsMap f = duplicated_dynamics(l, base, oracle::random_vec(rng, 1, 0.1, 2.0)[0]);
        Vec x = oracle::random_vec(rng, n, -3.0, 3.0), v = oracle::random_vec(rng, 2, -2.0, 2.0);
        check(f.jac_x(x, v), [&](const Vec& y) { return f.predict(y, v); }, x);
        check(f.jac_v(x, v), [&](const Vec& y) { return f.predict(x, y); }, v);
    }
    // unit belief update against differences of the free energy
    for (int t = 0; t < N; ++t) {
        int n = 1 + t % 4;
        Vec l = oracle::random_vec(rng, n, 0.2, 1.0), base = oracle::random_vec(rng, 3, -1.0, 1.0);
        ContinuousUnit u;
        u.x = {oracle::random_vec(rng, n, -2.0, 2.0), oracle::random_vec(rng, n, -1.0, 1.0)};
        u.v = oracle::random_vec(rng, 2, -1.0, 1.0);
        u.eta_x = oracle::random_vec(rng, n, -1.0, 1.0);
        u.pi_eta_x = Precision::diagonal(oracle::random_vec(rng, n, 0.1, 2.0));
        u.eta_v = oracle::random_vec(rng, 2, -1.0, 1.0);
        u.pi_eta_v = Precision::diagonal(oracle::random_vec(rng, 2, 0.1, 2.0));
        u.f = duplicated_dynamics(l, base, 0.7);
        u.pi_x = Precision::diagonal(oracle::random_vec(rng, n, 0.1, 2.0));
        u.channels.push_back({"p", identity_likelihood(n), Precision::diagonal(oracle::random_vec(rng, n, 0.1, 2.0)), true});
        u.channels.push_back({"e", fk_likelihood(n, 0, l, base), Precision::diagonal(oracle::random_vec(rng, 2, 0.1, 2.0))});
        Observations obs{oracle::random_vec(rng, n, -2.0, 2.0), oracle::random_vec(rng, 2, -2.0, 2.0)};
        UnitErrors e = compute_errors(u, obs);
        auto F_mu = [&](const Vec& y) {
            ContinuousUnit w = u;
            w.x.mu = y;
            return Vec::Constant(1, free_energy(w, compute_errors(w, obs)));
        };
        auto F_mp = [&](const Vec& y) {
            ContinuousUnit w = u;
            w.x.mu_prime = y;
            return Vec::Constant(1, free_energy(w, compute_errors(w, obs)));
        };
        auto F_v = [&](const Vec& y) {
            ContinuousUnit w = u;
            w.v = y;
            return Vec::Constant(1, free_energy(w, compute_errors(w, obs)));
        };
        GeneralizedBelief d = update_hidden_states(u, e);
        check(Mat((u.x.mu_prime - d.mu).transpose()), F_mu, u.x.mu);
        check(Mat(-d.mu_prime.transpose()), F_mp, u.x.mu_prime);
        check(Mat(-update_hidden_causes(u, e).transpose()), F_v, u.v);
    }
    // network: repulsion jacobian and the full belief update on scenario networks
    {
        Simulation sim = load_simulation(scenario("reach_avoid_4dof"));
        const Network& net = dynamic_cast<NetworkAgent&>(*sim.agents.at(0)).net;
        for (int t = 0; t < N; ++t) {
            Network n = net;
            Group& g = n.groups[0];
            for (const auto& r : g.repulsors) {
                Vec d = oracle::random_vec(rng, 2, -1.0, 1.0);
                d *= oracle::random_vec(rng, 1, 0.2, 0.9)[0] * r.cutoff / d.norm();
                n.nodes[r.node].b.mu.head(2) = n.nodes[r.source].b.mu.head(2) + d;
            }
            auto eta = [&](const Vec& y) {
                Network m = n;
                Group& mg = m.groups[0];
                for (std::size_t k = 0; k < mg.nodes.size(); ++k) {
                    auto& b = m.nodes[mg.nodes[k]].b;
                    b.mu = y.segment(mg.offsets[k], b.dim());
                }
                return m.group_dynamics(mg).eta;
            };
            check(n.group_dynamics(g).jac, eta, n.group_state(g, false));
        }
    }
    for (const char* name : {"multi_limb_tree", "tool_use", "pick_and_place"}) {
        Simulation sim = load_simulation(scenario(name));
        auto& agent = dynamic_cast<NetworkAgent&>(*sim.agents.at(0));
        std::vector<std::optional<Vec>> obs;
        for (const auto& s : agent.sources) obs.push_back(sim.world.truth(s));
        std::set<int> params;
        for (const auto& g : agent.net.groups)
            for (const auto& r : g.repulsors) params.insert(r.source);
        const double dt = 1e-3;
        for (int t = 0; t < N / 10; ++t) {
            Network net = agent.net;
            for (auto& n : net.nodes) {
                n.b.mu += oracle::random_vec(rng, n.dim(), -0.05, 0.05);
                n.b.mu_prime = oracle::random_vec(rng, n.dim(), -0.1, 0.1);
                if (n.kind == NodeKind::Intrinsic) n.b.mu[1] = std::max(n.b.mu[1], 0.2);
            }
            Network stepped = net;
            Vec adot;
            stepped.tick(obs, dt, adot);
            for (std::size_t i = 0; i < net.nodes.size(); ++i) {
                if (params.count(static_cast<int>(i))) continue;
                auto F = [&](const Vec& y) {
                    Network m = net;
                    m.nodes[i].b.mu = y;
                    Vec a;
                    return Vec::Constant(1, m.tick(obs, dt, a).free_energy);
                };
                Vec grad = -((stepped.nodes[i].b.mu - net.nodes[i].b.mu) / dt - net.nodes[i].b.mu_prime);
                Mat num = oracle::numeric_jacobian(F, net.nodes[i].b.mu);
                for (int c = 0; c < net.nodes[i].dim(); ++c)
                    if (net.nodes[i].frozen[c]) num(0, c) = grad[c];
                worst = std::max(worst, oracle::relative_gap(grad.transpose(), num));
                ++checks;
            }
        }
    }
    double secs = seconds_since(t0);
    report(worst < 1e-6 && secs < 10.0, "gradient oracle",
           std::to_string(checks) + " jacobians, worst relative gap " + num(worst) + " (tol 1e-6), " + num(secs) +
               " s (tol 10)");
}

Vec clamp_log(const Vec& p) { return p.cwiseMax(1e-10).array().log().matrix(); }

// Expected free energy written out outcome by outcome.
double brute_G(const DiscreteModel& m, const std::vector<Vec>& s) {
    double g = 0.0;
    for (std::size_t t = 1; t < s.size(); ++t)
        for (const auto& mod : m.modalities)
            for (int o = 0; o < mod.A.rows(); ++o) {
                double po = 0.0;
                for (int k = 0; k < mod.A.cols(); ++k) po += mod.A(o, k) * s[t][k];
                g += po * (std::log(std::max(po, 1e-10)) - mod.C[o]);
                for (int k = 0; k < mod.A.cols(); ++k)
                    g -= s[t][k] * mod.A(o, k) * std::log(std::max(mod.A(o, k), 1e-10));
            }
    return g;
}

void discrete() {
    std::mt19937_64 rng(303);
    double worst = 0.0;
    int argmin_ok = 0;
    const int M = 20;
    for (int trial = 0; trial < M; ++trial) {
        std::uniform_int_distribution<int> ns(2, 4), nc(2, 3), na(2, 3), nh(1, 3);
        const int n = ns(rng), c = nc(rng), na_ = na(rng), H = nh(rng);
        DiscreteModel m;
        for (int i = 0; i < n; ++i) m.states.push_back("s" + std::to_string(i));
        for (int a = 0; a < na_; ++a) {
            m.actions.push_back("a" + std::to_string(a));
            m.B.push_back(oracle::random_stochastic(rng, n, n));
        }
        Modality mod;
        mod.name = "cause";
        mod.A = oracle::random_stochastic(rng, c, n);
        mod.C = oracle::random_vec(rng, c, -3.0, 0.0);
        mod.cause = true;
        m.modalities.push_back(mod);
        m.D = oracle::random_simplex(rng, n);
        m.horizon = H;
        Planner planner(m);
        Vec l = oracle::random_vec(rng, c, -2.0, 2.0);
        PlannerStep st = planner.step({l});
        // the cause modality sees softmax(ln A D + l)
        Vec o = clamp_log(mod.A * m.D) + l;
        o = (o.array() - o.maxCoeff()).exp();
        o /= o.sum();
        std::vector<double> G;
        for (std::size_t p = 0; p < planner.model().policies.size(); ++p) {
            const auto& policy = planner.model().policies[p];
            std::vector<Mat> B;
            for (int a : policy) B.push_back(m.B[a]);
            std::vector<Vec> ll(H + 1, Vec::Zero(n));
            ll[0] = Mat(mod.A.cwiseMax(1e-10).array().log().matrix()).transpose() * o;
            auto ref = oracle::enumerate_marginals(m.D, B, ll);
            DiscreteObs obs(1);
            obs[0].push_back(o);
            auto s = infer_states(m, policy, m.D, obs);
            for (int t = 0; t <= H; ++t) worst = std::max(worst, (s[t] - ref[t]).cwiseAbs().maxCoeff());
            G.push_back(brute_G(m, ref));
        }
        Eigen::Index best;
        st.G.minCoeff(&best);
        auto ref_best = std::min_element(G.begin(), G.end()) - G.begin();
        if (best == ref_best) ++argmin_ok;
    }
    report(worst < 1e-6 && argmin_ok == M, "discrete exactness",
           std::to_string(M) + " random models, worst marginal gap " + num(worst) + " (tol 1e-6), argmin G agrees in " +
               std::to_string(argmin_ok) + "/" + std::to_string(M));
}

void bmr() {
    std::mt19937_64 rng(505);
    std::uniform_real_distribution<double> u(0.2, 3.0), m(-2.0, 2.0);
    auto s = [](double x) { return Mat::Constant(1, 1, x); };
    auto v1 = [](double x) { return Vec::Constant(1, x); };
    double worst = 0.0;
    for (int t = 0; t < 50; ++t) {
        double mu = m(rng), eta = m(rng), f = m(rng), Pi = u(rng), Pi_m = u(rng), P = Pi + u(rng);
        auto q = oracle::quadrature_bmr(mu, P, eta, Pi, f, Pi_m);
        ReducedPosterior r = reduced_posterior(s(P), s(Pi), s(Pi_m), v1(mu), v1(f), v1(eta));
        double L = log_evidence(s(P), s(Pi), s(Pi_m), v1(mu), v1(f), v1(eta));
        double logdet = 0.5 * std::log(P * Pi_m / ((P + Pi_m - Pi) * Pi));
        worst = std::max({worst, std::abs(L + logdet - q.log_z), std::abs(r.mean[0] - q.mean),
                          std::abs(r.precision(0, 0) - q.precision) / q.precision});
    }
    double vac = 0.0;
    for (int t = 0; t < 50; ++t) {
        int n = 1 + t % 4;
        Mat R = oracle::random_vec(rng, n * n, -1.0, 1.0).reshaped(n, n);
        Mat Pi = R * R.transpose() + Mat::Identity(n, n);
        Mat P = Pi + Mat::Identity(n, n) * u(rng);
        Vec mu = oracle::random_vec(rng, n, -2.0, 2.0), eta = oracle::random_vec(rng, n, -2.0, 2.0);
        vac = std::max(vac, std::abs(log_evidence(P, Pi, Pi, mu, eta, eta)));
    }
    report(worst < 1e-6 && vac < 1e-12, "BMR oracle",
           "50 cases, worst gap to quadrature " + num(worst) + " (tol 1e-6); vacuous reduction max |L|=" + num(vac) +
               " (tol 1e-12)");
}

std::string replay(const fs::path& p) {
    Simulation sim = load_simulation(p.string());
    RunResult r = run_simulation(sim);
    std::string out = trajectory_csv(r);
    for (std::size_t a = 0; a < sim.agents.size(); ++a) out += discrete_csv(sim, a);
    return out;
}

void determinism() {
    std::vector<fs::path> files;
    for (const auto& e : fs::directory_iterator(SCENARIO_DIR))
        if (e.path().extension() == ".yaml") files.push_back(e.path());
    std::sort(files.begin(), files.end());
    std::vector<std::string> a(files.size()), b(files.size());
    std::vector<std::thread> pool;
    for (std::size_t i = 0; i < files.size(); ++i) {
        pool.emplace_back([&, i] { a[i] = replay(files[i]); });
        pool.emplace_back([&, i] { b[i] = replay(files[i]); });
    }
    for (auto& t : pool) t.join();
    std::string bad;
    for (std::size_t i = 0; i < files.size(); ++i)
        if (a[i].empty() || a[i] != b[i]) bad += " " + files[i].stem().string();
    report(bad.empty(), "determinism",
           std::to_string(files.size()) + " scenarios replayed twice" + (bad.empty() ? ", byte-identical" : ", differ:" + bad));
}

void forward_kinematics_fold() {
    std::mt19937_64 rng(707);
    double worst = 0.0;
    for (int t = 0; t < 1000; ++t) {
        int n = 1 + static_cast<int>(rng() % 28);
        Vec a = oracle::random_vec(rng, n, -kPi, kPi), l = oracle::random_vec(rng, n, 0.05, 2.0);
        Vec base = oracle::random_vec(rng, 3, -2.0, 2.0);
        std::vector<IntrinsicState> chain;
        for (int k = 0; k < n; ++k) chain.push_back({a[k], l[k]});
        auto poses = forward_kinematics(chain, ExtrinsicState::from(base));
        for (int k = 0; k < n; ++k) {
            auto z = oracle::complex_fold(a.head(k + 1), l.head(k + 1), {base[0], base[1]}, base[2]);
            worst = std::max({worst, std::abs(poses[k].x - z.real()), std::abs(poses[k].y - z.imag())});
        }
        Vec end = chain_end_position(a, l, base);
        auto z = oracle::complex_fold(a, l, {base[0], base[1]}, base[2]);
        worst = std::max({worst, std::abs(end[0] - z.real()), std::abs(end[1] - z.imag())});
    }
    report(worst < 1e-10, "forward kinematics", "1000 random chains of 1..28 DoF, worst gap " + num(worst) + " (tol 1e-10)");
}

} // namespace

int main() {
    try {
        reaching();
        tracking();
        dynamic_inference();
        pick_and_place();
        tool_use();
        gradients();
        discrete();
        bmr();
        determinism();
        forward_kinematics_fold();
    } catch (const std::exception& e) {
        std::printf("[FAIL] aborted: %s\n", e.what());
        return 1;
    }
    std::printf("%d of 10 criteria failed\n", failures);
    return failures == 0 ? 0 : 1;
}
