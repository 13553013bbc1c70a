#pragma once
// Closed-loop runs: observe, update agents, step the world, record signals; then assertions and logs.

#include "scenario.hpp"

#include <chrono>
#include <cstdio>
#include <filesystem>

namespace dynplan {

constexpr const char* kCsvSchema = "dynplan-csv v1";
constexpr const char* kDiscreteSchema = "dynplan-discrete v1";

struct AssertionResult {
    std::string name;
    std::string kind;
    bool pass = false;
    std::string detail;
};

struct RunResult {
    std::string scenario;
    std::uint64_t seed = 0;
    double dt = 0.0;
    std::vector<std::string> columns;      // signal names
    std::vector<long> ticks;
    std::vector<std::vector<double>> rows;  // one per recorded tick
    std::vector<AssertionResult> assertions;
    std::vector<std::vector<DiscreteLogRow>> discrete;  // per agent
    std::vector<std::vector<std::string>> discrete_names;  // per agent: state names
    double seconds = 0.0;

    bool passed() const {
        for (const auto& a : assertions)
            if (!a.pass) return false;
        return true;
    }
    int column(const std::string& n) const {
        for (std::size_t i = 0; i < columns.size(); ++i)
            if (columns[i] == n) return static_cast<int>(i);
        return -1;
    }
    std::vector<double> series(const std::string& n) const {
        int c = column(n);
        require(c >= 0, "unknown signal '" + n + "'");
        std::vector<double> s;
        for (const auto& r : rows) s.push_back(r[c]);
        return s;
    }
};

inline Vec signal_vector(const Simulation& s, const SignalRef& r) {
    switch (r.kind) {
    case SignalRef::Kind::World: return s.world.truth(r.source);
    case SignalRef::Kind::Belief: return s.agents[r.agent]->belief(r.key, false);
    case SignalRef::Kind::Velocity: return s.agents[r.agent]->belief(r.key, true);
    case SignalRef::Kind::Cause: return s.agents[r.agent]->cause(r.key);
    case SignalRef::Kind::FreeEnergy: return Vec::Constant(1, s.agents[r.agent]->last_free_energy);
    case SignalRef::Kind::Action: return s.agents[r.agent]->velocity;
    }
    return {};
}

inline double signal_value(const Simulation& s, const SignalSpec& sg) {
    if (sg.distance) {
        Vec a = signal_vector(s, sg.a), b = signal_vector(s, sg.b);
        const int n = static_cast<int>(std::min<Eigen::Index>({a.size(), b.size(), 2}));
        return (a.head(n) - b.head(n)).norm();
    }
    Vec v = signal_vector(s, sg.a);
    require(sg.index >= 0 && sg.index < v.size(), "signal '" + sg.name + "' index out of range");
    return sg.scale * v[sg.index];
}

namespace detail {

inline std::string fmt(double x) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.10g", x);
    return buf;
}

struct Event {
    bool happened = false;
    long tick = 0;
};

} // namespace detail

inline std::vector<AssertionResult> evaluate_assertions(const Simulation& s, const RunResult& r) {
    std::vector<AssertionResult> out;
    std::map<std::string, detail::Event> events;
    const std::size_t N = r.rows.size();
    using detail::fmt;

    for (const auto& a : s.assertions) {
        AssertionResult res{a.name, a.kind, false, ""};
        detail::Event ev;
        if (N == 0) {
            res.detail = "no samples";
            out.push_back(res);
            continue;
        }
        if (a.kind == "discrete_order") {
            const auto* na = dynamic_cast<const NetworkAgent*>(s.agents[a.agent].get());
            const auto& m = na->disc->planner->model();
            const auto& log = s.agents[a.agent]->discrete_log;
            int prev = -1;
            bool ok = true;
            std::string taus;
            for (const auto& [mod, outcome] : a.sequence) {
                int k = -1;
                for (std::size_t i = 0; i < m.modalities.size(); ++i)
                    if (m.modalities[i].name == mod) k = static_cast<int>(i);
                const int o = m.modalities[k].outcome(outcome);
                int first = -1;
                for (const auto& row : log) {
                    Eigen::Index arg;
                    row.step.emitted[k].maxCoeff(&arg);
                    if (arg == o && row.step.tau > prev) {
                        first = row.step.tau;
                        break;
                    }
                }
                taus += (taus.empty() ? "" : ", ") + mod + "=" + outcome + "@" + (first < 0 ? std::string("never") : std::to_string(first));
                if (first < 0) {
                    ok = false;
                    break;
                }
                prev = first;
            }
            res.pass = ok;
            res.detail = "first tau: " + taus;
            out.push_back(res);
            continue;
        }

        std::vector<double> av = r.series(a.a);
        std::vector<double> d = av;
        if (!a.b.empty()) {
            auto bv = r.series(a.b);
            for (std::size_t i = 0; i < N; ++i) d[i] -= bv[i];
        } else if (!std::isnan(a.value) && a.kind != "ratio_final_initial" && a.kind != "final_rel_error") {
            for (auto& x : d) x -= a.value;
        }
        const std::size_t start = std::min(N - 1, static_cast<std::size_t>(a.from * static_cast<double>(N)));

        if (a.kind == "final_below" || a.kind == "final_near") {
            double v = std::abs(d.back());
            res.pass = v < a.tol;
            res.detail = "final |diff| = " + fmt(v) + " (tol " + fmt(a.tol) + ")";
        } else if (a.kind == "ratio_final_initial") {
            double ratio = std::abs(av.back()) / std::max(std::abs(av.front()), 1e-300);
            res.pass = ratio < a.tol;
            res.detail = "final/initial = " + fmt(ratio) + " (max " + fmt(a.tol) + ")";
        } else if (a.kind == "steady_below" || a.kind == "steady_near") {
            double worst = 0.0;
            for (std::size_t i = start; i < N; ++i) worst = std::max(worst, std::abs(d[i]));
            res.pass = worst < a.tol;
            res.detail = "max |diff| over ticks " + std::to_string(r.ticks[start]) + ".." + std::to_string(r.ticks.back()) + " = " +
                         fmt(worst) + " (tol " + fmt(a.tol) + ")";
        } else if (a.kind == "steady_mean_near") {
            double mean = 0.0;
            for (std::size_t i = start; i < N; ++i) mean += d[i];
            mean /= static_cast<double>(N - start);
            res.pass = std::abs(mean) < a.tol;
            res.detail = "mean diff = " + fmt(mean) + " (tol " + fmt(a.tol) + ")";
        } else if (a.kind == "final_rel_error") {
            double target = a.b.empty() ? a.value : r.series(a.b).back();
            double rel = std::abs(av.back() - target) / std::abs(target);
            res.pass = rel < a.tol;
            res.detail = "final " + fmt(av.back()) + " vs " + fmt(target) + ", relative error " + fmt(rel) + " (tol " + fmt(a.tol) + ")";
        } else if (a.kind == "ever_below") {
            double best = std::abs(d[0]);
            for (std::size_t i = 0; i < N; ++i) {
                best = std::min(best, std::abs(d[i]));
                if (!ev.happened && std::abs(d[i]) < a.tol) {
                    ev.happened = true;
                    ev.tick = r.ticks[i];
                }
            }
            res.pass = ev.happened;
            res.detail = ev.happened ? "first at tick " + std::to_string(ev.tick) : "minimum " + fmt(best) + " (tol " + fmt(a.tol) + ")";
        } else if (a.kind == "min_above") {
            double low = std::abs(d[0]);
            for (double x : d) low = std::min(low, std::abs(x));
            res.pass = low > a.tol;
            res.detail = "minimum " + fmt(low) + " (must exceed " + fmt(a.tol) + ")";
        } else if (a.kind == "overtakes") {
            // a > b from some tick until the end
            std::size_t last_bad = N;
            for (std::size_t i = 0; i < N; ++i)
                if (!(d[i] > 0.0)) last_bad = i;
            if (last_bad == N - 1) {
                res.detail = "not above at the end";
            } else {
                std::size_t from = last_bad == N ? 0 : last_bad + 1;
                ev.happened = true;
                ev.tick = r.ticks[from];
                res.pass = true;
                res.detail = "above from tick " + std::to_string(ev.tick) + " to the end";
            }
        }
        if (res.pass && !a.after.empty()) {
            auto it = events.find(a.after);
            if (it == events.end() || !it->second.happened) {
                res.pass = false;
                res.detail += "; required event '" + a.after + "' did not happen";
            } else if (ev.happened && ev.tick < it->second.tick) {
                res.pass = false;
                res.detail += "; happened before '" + a.after + "' (tick " + std::to_string(it->second.tick) + ")";
            } else if (!ev.happened) {
                res.detail += "; after '" + a.after + "' at tick " + std::to_string(it->second.tick);
            }
        }
        if (!ev.happened && res.pass) {
            // final/steady checks mark their event at the end of the run
            ev.happened = true;
            ev.tick = r.ticks.back();
        }
        events[a.name] = ev;
        out.push_back(res);
    }
    return out;
}

inline RunResult run_simulation(Simulation& s) {
    RunResult r;
    r.scenario = s.name;
    r.seed = s.seed;
    r.dt = s.dt;
    for (const auto& sg : s.signals) r.columns.push_back(sg.name);
    r.rows.reserve(static_cast<std::size_t>(s.ticks));
    auto t0 = std::chrono::steady_clock::now();
    std::vector<Vec> actions(s.world.arms.size());
    for (long tick = 1; tick <= s.ticks; ++tick) {
        for (auto& a : s.agents) {
            try {
                a->tick(s.world, s.dt);
            } catch (const NumericAbort& e) {
                throw NumericAbort("tick " + std::to_string(tick) + ", agent '" + a->name + "': " + e.what());
            }
        }
        for (std::size_t i = 0; i < actions.size(); ++i) actions[i] = Vec();
        for (auto& a : s.agents)
            if (a->arm >= 0) actions[a->arm] = a->velocity;
        s.world.step(actions);
        std::vector<double> row;
        row.reserve(s.signals.size());
        for (const auto& sg : s.signals) {
            double v = signal_value(s, sg);
            if (!std::isfinite(v)) throw NumericAbort("tick " + std::to_string(tick) + ": signal '" + sg.name + "' is not finite");
            row.push_back(v);
        }
        r.ticks.push_back(tick);
        r.rows.push_back(std::move(row));
    }
    r.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    r.assertions = evaluate_assertions(s, r);
    for (const auto& a : s.agents) {
        r.discrete.push_back(a->discrete_log);
        std::vector<std::string> names;
        if (const auto* na = dynamic_cast<const NetworkAgent*>(a.get()); na && na->disc) names = na->disc->planner->model().states;
        r.discrete_names.push_back(names);
    }
    return r;
}

inline std::string trajectory_csv(const RunResult& r) {
    std::string out = std::string("# ") + kCsvSchema + " scenario=" + r.scenario + " seed=" + std::to_string(r.seed) +
                      " dt=" + detail::fmt(r.dt) + "\n";
    out += "tick,t";
    for (const auto& c : r.columns) out += "," + c;
    out += "\n";
    for (std::size_t i = 0; i < r.rows.size(); ++i) {
        out += std::to_string(r.ticks[i]) + "," + detail::fmt(static_cast<double>(r.ticks[i]) * r.dt);
        for (double v : r.rows[i]) out += "," + detail::fmt(v);
        out += "\n";
    }
    return out;
}

// Per discrete step: state marginal, best policy, and the cause priors sent down to every modality.
inline std::string discrete_csv(const Simulation& s, std::size_t agent) {
    const auto* na = dynamic_cast<const NetworkAgent*>(s.agents[agent].get());
    if (!na || !na->disc) return "";
    const auto& m = na->disc->planner->model();
    std::string out = std::string("# ") + kDiscreteSchema + " scenario=" + s.name + " agent=" + na->name + "\n";
    out += "tau,tick";
    for (const auto& st : m.states) out += ",s:" + st;
    out += ",policy";
    for (const auto& mod : m.modalities)
        for (const auto& o : mod.outcomes) out += ",obs:" + mod.name + ":" + o;
    for (const auto& mod : m.modalities)
        for (const auto& o : mod.outcomes) out += ",prior:" + mod.name + ":" + o;
    out += "\n";
    for (const auto& row : na->discrete_log) {
        const auto& st = row.step;
        out += std::to_string(st.tau) + "," + std::to_string(row.tick);
        for (int i = 0; i < st.state.size(); ++i) out += "," + detail::fmt(st.state[i]);
        Eigen::Index best;
        st.policy.maxCoeff(&best);
        std::string pol;
        for (int a : m.policies[static_cast<std::size_t>(best)]) pol += (pol.empty() ? "" : ">") + m.actions[a];
        out += "," + pol;
        for (const auto& v : st.observed)
            for (int i = 0; i < v.size(); ++i) out += "," + detail::fmt(v[i]);
        for (const auto& v : st.emitted)
            for (int i = 0; i < v.size(); ++i) out += "," + detail::fmt(v[i]);
        out += "\n";
    }
    return out;
}

inline std::string summary_yaml(const RunResult& r) {
    std::string out = "scenario: " + r.scenario + "\nseed: " + std::to_string(r.seed) + "\nticks: " + std::to_string(r.rows.size()) +
                      "\ndt: " + detail::fmt(r.dt) + "\npassed: " + (r.passed() ? "true" : "false") + "\nassertions:\n";
    for (const auto& a : r.assertions) {
        out += "  - name: " + a.name + "\n    kind: " + a.kind + "\n    pass: " + (a.pass ? "true" : "false") + "\n    detail: \"" +
               a.detail + "\"\n";
    }
    return out;
}

inline void write_file(const std::filesystem::path& p, const std::string& content) {
    std::FILE* f = std::fopen(p.string().c_str(), "wb");
    if (!f) throw ConfigError("cannot write " + p.string());
    std::fwrite(content.data(), 1, content.size(), f);
    std::fclose(f);
}

} // namespace dynplan
