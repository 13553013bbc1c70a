#pragma once
// Scenario files: world layout, agents, logged signals and assertions.
// Angles are written in degrees (angular velocities in deg/s) and converted on load.

#include "agent.hpp"

#include <yaml-cpp/yaml.h>

#include <cstdint>
#include <fstream>
#include <initializer_list>
#include <limits>
#include <set>
#include <sstream>

namespace dynplan {

struct SignalRef {
    enum class Kind { World, Belief, Velocity, Cause, FreeEnergy, Action };
    Kind kind = Kind::World;
    std::string key;
    int agent = 0;
    Source source;  // world refs
};

struct SignalSpec {
    std::string name;
    bool distance = false;
    SignalRef a, b;
    int index = 0;
    double scale = 1.0;
};

struct AssertionSpec {
    std::string name;
    std::string kind;
    std::string a, b;
    double value = std::numeric_limits<double>::quiet_NaN();
    double tol = 0.0;
    double from = 0.75;  // steady-state window starts at this fraction of the run
    std::string after;   // event that must happen first
    std::vector<std::pair<std::string, std::string>> sequence;  // modality=outcome
    int agent = 0;
};

struct PlotSpec {
    std::string name;
    std::string title;
    std::vector<std::string> columns;
};

struct Simulation {
    std::string name;
    std::string description;
    std::string path;
    double dt = 0.01;
    long ticks = 1000;
    std::uint64_t seed = 0;
    World world;
    std::vector<std::unique_ptr<Agent>> agents;
    std::vector<SignalSpec> signals;
    std::vector<AssertionSpec> assertions;
    std::vector<PlotSpec> plots;

    int agent_index(const std::string& n) const {
        for (std::size_t i = 0; i < agents.size(); ++i)
            if (agents[i]->name == n) return static_cast<int>(i);
        throw ConfigError("unknown agent '" + n + "'");
    }
};

namespace detail {

class Loader {
public:
    explicit Loader(std::string path) : path_(std::move(path)) {}

    [[noreturn]] void fail(const YAML::Node& n, const std::string& msg) const {
        std::string where = path_;
        if (n.IsDefined() && n.Mark().line >= 0) where += ":" + std::to_string(n.Mark().line + 1);
        throw ConfigError(where + ": " + msg);
    }
    void note(const YAML::Node& n, const std::string& msg) {
        std::string where = path_;
        if (n.IsDefined() && n.Mark().line >= 0) where += ":" + std::to_string(n.Mark().line + 1);
        errors.push_back(where + ": " + msg);
    }

    YAML::Node req(const YAML::Node& n, const std::string& key, const std::string& ctx) const {
        if (!n.IsMap()) fail(n, ctx + " must be a mapping");
        YAML::Node v = n[key];
        if (!v.IsDefined() || v.IsNull()) fail(n, "missing field '" + key + "' in " + ctx);
        return v;
    }

    void allowed(const YAML::Node& n, std::initializer_list<const char*> keys, const std::string& ctx) const {
        if (!n.IsMap()) fail(n, ctx + " must be a mapping");
        for (const auto& kv : n) {
            auto k = kv.first.as<std::string>();
            bool ok = false;
            for (const char* a : keys) ok = ok || k == a;
            if (!ok) fail(kv.first, "unknown field '" + k + "' in " + ctx);
        }
    }

    double num(const YAML::Node& n) const {
        try {
            return n.as<double>();
        } catch (const YAML::Exception&) {
            fail(n, "expected a number");
        }
    }
    long integer(const YAML::Node& n) const {
        try {
            return n.as<long>();
        } catch (const YAML::Exception&) {
            fail(n, "expected an integer");
        }
    }
    bool boolean(const YAML::Node& n) const {
        try {
            return n.as<bool>();
        } catch (const YAML::Exception&) {
            fail(n, "expected true or false");
        }
    }
    std::string str(const YAML::Node& n) const {
        if (!n.IsScalar()) fail(n, "expected a string");
        return n.as<std::string>();
    }
    Vec vec(const YAML::Node& n) const {
        if (!n.IsSequence()) fail(n, "expected a list of numbers");
        Vec v(static_cast<int>(n.size()));
        for (std::size_t i = 0; i < n.size(); ++i) v[static_cast<int>(i)] = num(n[i]);
        return v;
    }
    Mat mat(const YAML::Node& n) const {
        if (!n.IsSequence() || n.size() == 0) fail(n, "expected a list of rows");
        const std::size_t cols = n[0].IsSequence() ? n[0].size() : 0;
        Mat m(static_cast<int>(n.size()), static_cast<int>(cols));
        for (std::size_t r = 0; r < n.size(); ++r) {
            if (!n[r].IsSequence() || n[r].size() != cols) fail(n[r], "matrix rows must have equal length");
            for (std::size_t c = 0; c < cols; ++c) m(static_cast<int>(r), static_cast<int>(c)) = num(n[r][c]);
        }
        return m;
    }
    std::vector<std::string> strs(const YAML::Node& n) const {
        if (!n.IsSequence()) fail(n, "expected a list of names");
        std::vector<std::string> out;
        for (const auto& x : n) out.push_back(str(x));
        return out;
    }

    double opt_num(const YAML::Node& n, const std::string& key, double def) const {
        return n[key] ? num(n[key]) : def;
    }
    bool opt_bool(const YAML::Node& n, const std::string& key, bool def) const {
        return n[key] ? boolean(n[key]) : def;
    }
    std::string opt_str(const YAML::Node& n, const std::string& key, const std::string& def) const {
        return n[key] ? str(n[key]) : def;
    }

    std::vector<std::string> errors;

private:
    std::string path_;
};

inline Vec deg(const Vec& v) { return v * (kPi / 180.0); }

} // namespace detail

class ScenarioBuilder {
public:
    ScenarioBuilder(std::string path, YAML::Node root) : L_(path), path_(std::move(path)), root_(std::move(root)) {}

    Simulation build(std::optional<std::uint64_t> seed_override) {
        Simulation s;
        s.path = path_;
        L_.allowed(root_, {"name", "description", "dt", "ticks", "seed", "world", "agent", "agents", "signals",
                           "assertions", "plots"},
                   "scenario");
        s.name = L_.str(L_.req(root_, "name", "scenario"));
        s.description = L_.opt_str(root_, "description", "");
        s.dt = L_.num(L_.req(root_, "dt", "scenario"));
        if (s.dt <= 0.0) L_.fail(root_["dt"], "dt must be positive");
        s.ticks = L_.integer(L_.req(root_, "ticks", "scenario"));
        if (s.ticks <= 0) L_.fail(root_["ticks"], "ticks must be positive");
        s.seed = root_["seed"] ? static_cast<std::uint64_t>(L_.integer(root_["seed"])) : 0;
        if (seed_override) s.seed = *seed_override;
        dt_ = s.dt;

        build_world(s.world, L_.req(root_, "world", "scenario"));
        s.world.dt = s.dt;
        s.world.rng = CounterRng(s.seed);
        s.world.init();

        if (root_["agent"] && root_["agents"]) L_.fail(root_["agents"], "use either 'agent' or 'agents'");
        if (root_["agent"]) {
            s.agents.push_back(build_agent(s.world, root_["agent"]));
        } else if (root_["agents"]) {
            for (const auto& a : root_["agents"]) s.agents.push_back(build_agent(s.world, a));
        }
        for (std::size_t i = 0; i < s.agents.size(); ++i)
            for (std::size_t j = 0; j < i; ++j)
                if (s.agents[i]->name == s.agents[j]->name) L_.fail(root_, "duplicate agent name '" + s.agents[i]->name + "'");

        if (root_["signals"])
            for (const auto& n : root_["signals"]) s.signals.push_back(build_signal(s, n));
        std::set<std::string> names;
        for (const auto& sg : s.signals)
            if (!names.insert(sg.name).second) L_.note(root_["signals"], "duplicate signal '" + sg.name + "'");
        if (root_["assertions"])
            for (const auto& n : root_["assertions"]) s.assertions.push_back(build_assertion(s, n, names));
        if (root_["plots"])
            for (const auto& n : root_["plots"]) {
                L_.allowed(n, {"name", "title", "columns"}, "plot");
                PlotSpec p{L_.str(L_.req(n, "name", "plot")), L_.opt_str(n, "title", ""), L_.strs(L_.req(n, "columns", "plot"))};
                for (const auto& c : p.columns)
                    if (!names.count(c) && c != "F") L_.note(n["columns"], "plot '" + p.name + "' uses unknown signal '" + c + "'");
                s.plots.push_back(p);
            }

        if (!L_.errors.empty()) {
            std::string msg;
            for (const auto& e : L_.errors) msg += (msg.empty() ? "" : "\n") + e;
            throw ConfigError(msg);
        }
        for (auto& a : s.agents)
            if (auto* na = dynamic_cast<NetworkAgent*>(a.get())) na->start();
        return s;
    }

private:
    detail::Loader L_;
    std::string path_;
    YAML::Node root_;
    double dt_ = 0.01;

    // ---- world ----

    void build_world(World& w, const YAML::Node& n) {
        L_.allowed(n, {"arms", "objects", "tools", "grasps", "noise", "contact_radius"}, "world");
        if (n["arms"])
            for (const auto& a : n["arms"]) w.arms.push_back(build_arm(a));
        for (std::size_t i = 0; i < w.arms.size(); ++i)
            for (std::size_t j = 0; j < i; ++j)
                if (w.arms[i].name == w.arms[j].name) L_.fail(n["arms"], "duplicate arm '" + w.arms[i].name + "'");
        if (n["objects"])
            for (const auto& o : n["objects"]) w.objects.push_back(build_object(o));
        if (n["tools"])
            for (const auto& t : n["tools"]) {
                L_.allowed(t, {"name", "base", "orientation", "length"}, "tool");
                Tool tl;
                tl.name = L_.str(L_.req(t, "name", "tool"));
                tl.base = L_.vec(L_.req(t, "base", "tool"));
                if (tl.base.size() != 2) L_.fail(t["base"], "tool base is [x, y]");
                tl.orientation = deg2rad(L_.num(L_.req(t, "orientation", "tool")));
                tl.length = L_.num(L_.req(t, "length", "tool"));
                if (tl.length <= 0.0) L_.fail(t["length"], "tool length must be positive");
                w.tools.push_back(tl);
            }
        if (n["noise"]) {
            const auto& z = n["noise"];
            L_.allowed(z, {"proprio", "vision", "touch"}, "noise");
            w.noise.proprio = L_.opt_num(z, "proprio", w.noise.proprio);
            w.noise.vision = L_.opt_num(z, "vision", w.noise.vision);
            w.noise.touch = L_.opt_num(z, "touch", w.noise.touch);
            if (w.noise.proprio < 0 || w.noise.vision < 0 || w.noise.touch < 0) L_.fail(z, "noise must be non-negative");
        }
        w.contact_radius = L_.opt_num(n, "contact_radius", -1.0);
        for (auto& a : w.arms) a.update_poses();
        if (n["grasps"])
            for (const auto& g : n["grasps"]) w.grasps.push_back(build_grasp(w, g));
    }

    Arm build_arm(const YAML::Node& n) {
        L_.allowed(n, {"name", "base", "joints", "script"}, "arm");
        Arm a;
        a.name = L_.str(L_.req(n, "name", "arm"));
        if (n["base"]) {
            Vec b = L_.vec(n["base"]);
            if (b.size() != 3) L_.fail(n["base"], "arm base is [x, y, orientation]");
            a.base = (Vec(3) << b[0], b[1], deg2rad(b[2])).finished();
        }
        const auto& js = L_.req(n, "joints", "arm");
        if (!js.IsSequence() || js.size() == 0) L_.fail(js, "arm needs at least one joint");
        for (std::size_t i = 0; i < js.size(); ++i) {
            const auto& j = js[i];
            L_.allowed(j, {"name", "parent", "length", "angle"}, "joint");
            Joint jt;
            jt.name = L_.str(L_.req(j, "name", "joint"));
            jt.length = L_.num(L_.req(j, "length", "joint"));
            if (jt.length < 0.0) L_.fail(j["length"], "joint length must be non-negative");
            jt.angle = deg2rad(L_.opt_num(j, "angle", 0.0));
            std::string parent = L_.opt_str(j, "parent", i == 0 ? "base" : a.joints.back().name);
            jt.parent = -1;
            if (parent != "base") {
                for (std::size_t k = 0; k < a.joints.size(); ++k)
                    if (a.joints[k].name == parent) jt.parent = static_cast<int>(k);
                if (jt.parent < 0) L_.fail(j, "joint parent '" + parent + "' must be an earlier joint or 'base'");
            }
            for (const auto& o : a.joints)
                if (o.name == jt.name) L_.fail(j, "duplicate joint '" + jt.name + "'");
            a.joints.push_back(jt);
        }
        if (n["script"]) {
            Vec s = detail::deg(L_.vec(n["script"]));
            if (s.size() != static_cast<int>(a.joints.size())) L_.fail(n["script"], "script needs one velocity per joint");
            a.scripted = s;
        }
        return a;
    }

    Object build_object(const YAML::Node& n) {
        L_.allowed(n, {"name", "position", "angle", "motion", "jump"}, "object");
        Object o;
        o.name = L_.str(L_.req(n, "name", "object"));
        bool angular = false;
        if (n["angle"]) {
            angular = true;
            o.initial = Vec::Constant(1, deg2rad(L_.num(n["angle"])));
        } else {
            o.initial = L_.vec(L_.req(n, "position", "object"));
            if (o.initial.size() != 2) L_.fail(n["position"], "object position is [x, y]");
        }
        auto conv = [&](const Vec& v) { return angular ? detail::deg(v) : v; };
        if (n["motion"]) {
            const auto& m = n["motion"];
            L_.allowed(m, {"kind", "velocity", "center", "radius", "omega", "phase", "waypoints", "segment_time"}, "motion");
            std::string k = L_.str(L_.req(m, "kind", "motion"));
            if (k == "static") {
                o.law.kind = MotionKind::Static;
            } else if (k == "linear") {
                o.law.kind = MotionKind::Linear;
                o.law.velocity = conv(L_.vec(L_.req(m, "velocity", "linear motion")));
                if (o.law.velocity.size() != o.initial.size()) L_.fail(m["velocity"], "velocity dimension mismatch");
            } else if (k == "circular") {
                if (angular) L_.fail(m, "circular motion needs a planar object");
                o.law.kind = MotionKind::Circular;
                o.law.center = L_.vec(L_.req(m, "center", "circular motion"));
                if (o.law.center.size() != 2) L_.fail(m["center"], "center is [x, y]");
                o.law.radius = L_.num(L_.req(m, "radius", "circular motion"));
                o.law.omega = deg2rad(L_.num(L_.req(m, "omega", "circular motion")));
                o.law.phase = deg2rad(L_.opt_num(m, "phase", 0.0));
            } else if (k == "scripted") {
                o.law.kind = MotionKind::Scripted;
                const auto& wp = L_.req(m, "waypoints", "scripted motion");
                if (!wp.IsSequence() || wp.size() == 0) L_.fail(wp, "scripted motion needs waypoints");
                for (const auto& p : wp) {
                    Vec v = conv(L_.vec(p));
                    if (v.size() != o.initial.size()) L_.fail(p, "waypoint dimension mismatch");
                    o.law.waypoints.push_back(v);
                }
                o.law.segment_time = L_.num(L_.req(m, "segment_time", "scripted motion"));
                if (o.law.segment_time <= 0.0) L_.fail(m["segment_time"], "segment_time must be positive");
            } else {
                L_.fail(m["kind"], "unknown motion kind '" + k + "' (static, linear, circular, scripted)");
            }
        }
        if (n["jump"]) {
            const auto& j = n["jump"];
            L_.allowed(j, {"tick", "delta"}, "jump");
            o.jump_tick = L_.integer(L_.req(j, "tick", "jump"));
            o.jump = conv(L_.vec(L_.req(j, "delta", "jump")));
            if (o.jump.size() != o.initial.size()) L_.fail(j["delta"], "jump dimension mismatch");
        }
        return o;
    }

    GraspRule build_grasp(const World& w, const YAML::Node& n) {
        L_.allowed(n, {"arm", "hand", "object", "tool", "fingers", "closure"}, "grasp");
        GraspRule g;
        std::string arm = L_.str(L_.req(n, "arm", "grasp"));
        g.arm = w.arm_index(arm);
        if (g.arm < 0) L_.fail(n["arm"], "unknown arm '" + arm + "'");
        g.hand = joint_of(w.arms[g.arm], n["hand"], L_.str(L_.req(n, "hand", "grasp")));
        if (n["tool"]) {
            g.tool = true;
            g.target = w.tool_index(L_.str(n["tool"]));
            if (g.target < 0) L_.fail(n["tool"], "unknown tool");
        } else {
            g.target = w.object_index(L_.str(L_.req(n, "object", "grasp")));
            if (g.target < 0) L_.fail(n["object"], "unknown object");
        }
        if (n["fingers"])
            for (const auto& f : n["fingers"]) {
                L_.allowed(f, {"joint", "open", "closed"}, "finger");
                FingerSpec fs;
                fs.joint = joint_of(w.arms[g.arm], f["joint"], L_.str(L_.req(f, "joint", "finger")));
                fs.open = deg2rad(L_.num(L_.req(f, "open", "finger")));
                fs.closed = deg2rad(L_.num(L_.req(f, "closed", "finger")));
                if (fs.open == fs.closed) L_.fail(f, "open and closed angles must differ");
                g.fingers.push_back(fs);
            }
        g.closure = L_.opt_num(n, "closure", 0.7);
        return g;
    }

    int joint_of(const Arm& a, const YAML::Node& where, const std::string& j) {
        for (std::size_t i = 0; i < a.joints.size(); ++i)
            if (a.joints[i].name == j) return static_cast<int>(i);
        L_.fail(where, "arm '" + a.name + "' has no joint '" + j + "'");
    }

    Source source(const World& w, const YAML::Node& n) {
        try {
            return w.resolve(L_.str(n));
        } catch (const ConfigError& e) {
            L_.fail(n, e.what());
        }
    }

    // ---- agents ----

    std::unique_ptr<Agent> build_agent(const World& w, const YAML::Node& n) {
        std::string kind = L_.str(L_.req(n, "kind", "agent"));
        std::unique_ptr<Agent> a;
        if (kind == "unit") a = build_unit_agent(w, n);
        else if (kind == "network") a = build_network_agent(w, n);
        else L_.fail(n["kind"], "agent kind must be 'unit' or 'network'");
        a->name = L_.opt_str(n, "name", "agent");
        return a;
    }

    int actuated_arm(const World& w, const YAML::Node& n, Agent& a) {
        if (!n["arm"]) return -1;
        std::string arm = L_.str(n["arm"]);
        int i = w.arm_index(arm);
        if (i < 0) L_.fail(n["arm"], "unknown arm '" + arm + "'");
        a.arm = i;
        a.velocity = Vec::Zero(static_cast<int>(w.arms[i].joints.size()));
        return i;
    }

    std::unique_ptr<Agent> build_unit_agent(const World& w, const YAML::Node& n) {
        L_.allowed(n, {"name", "kind", "arm", "action_gain", "blocks", "prior", "pi_x", "causes", "dynamics", "channels", "switch"},
                   "unit agent");
        auto ag = std::make_unique<UnitAgent>();
        const int arm = actuated_arm(w, n, *ag);
        const double gain = L_.opt_num(n, "action_gain", 1.0);

        const auto& bn = L_.req(n, "blocks", "unit agent");
        if (!bn.IsSequence() || bn.size() == 0) L_.fail(bn, "unit agent needs at least one block");
        std::vector<std::string> bnames;
        std::vector<int> bdims;
        std::vector<bool> angular;
        std::vector<Vec> inits;
        for (const auto& b : bn) {
            L_.allowed(b, {"name", "dim", "init", "angular"}, "block");
            bnames.push_back(L_.str(L_.req(b, "name", "block")));
            int d = static_cast<int>(L_.integer(L_.req(b, "dim", "block")));
            if (d <= 0) L_.fail(b["dim"], "block dimension must be positive");
            bdims.push_back(d);
            angular.push_back(L_.opt_bool(b, "angular", true));
            Vec init = b["init"] ? L_.vec(b["init"]) : Vec::Zero(d);
            if (init.size() != d) L_.fail(b["init"], "init has the wrong dimension");
            inits.push_back(angular.back() ? detail::deg(init) : init);
        }
        ag->blocks = EntityFactorization(bnames, bdims);
        const auto& B = ag->blocks;
        const int nx = B.total();
        auto state_conv = [&](const Vec& v) {
            Vec r = v;
            for (int b = 0; b < B.blocks(); ++b)
                if (angular[b]) r.segment(B.offset(b), B.dim(b)) = detail::deg(v.segment(B.offset(b), B.dim(b)));
            return r;
        };

        ContinuousUnit& u = ag->h.base;
        u.x = {B.concat(inits), Vec::Zero(nx)};
        u.eta_x = Vec::Zero(nx);
        u.pi_eta_x = Precision::scalar(nx, 0.0);
        if (n["prior"]) {
            const auto& p = n["prior"];
            L_.allowed(p, {"eta", "pi"}, "prior");
            Vec eta = L_.vec(L_.req(p, "eta", "prior"));
            if (eta.size() != nx) L_.fail(p["eta"], "prior has the wrong dimension");
            u.eta_x = state_conv(eta);
            u.pi_eta_x = Precision::scalar(nx, L_.num(L_.req(p, "pi", "prior")));
        }
        u.pi_x = Precision::scalar(nx, L_.opt_num(n, "pi_x", 1.0));
        u.v = Vec();
        u.eta_v = Vec();
        u.pi_eta_v = Precision::scalar(0, 0.0);

        const auto& dn = L_.req(n, "dynamics", "unit agent");
        L_.allowed(dn, {"kind", "target", "intentions", "gains", "prior", "window", "pi_m"}, "dynamics");
        std::string dk = L_.str(L_.req(dn, "kind", "dynamics"));
        std::vector<Intention> intentions;
        if (dk == "attractor") {
            Vec t = L_.vec(L_.req(dn, "target", "attractor"));
            if (t.size() != nx) L_.fail(dn["target"], "target has the wrong dimension");
            u.f = target_attractor(state_conv(t));
        } else if (dk == "cause_attractor") {
            u.f = cause_attractor(nx);
            const auto& c = L_.req(n, "causes", "unit agent with cause_attractor dynamics");
            L_.allowed(c, {"init", "eta", "pi", "infer"}, "causes");
            Vec v0 = L_.vec(L_.req(c, "init", "causes"));
            if (v0.size() != nx) L_.fail(c["init"], "causes must match the state dimension");
            u.v = state_conv(v0);
            u.eta_v = c["eta"] ? state_conv(L_.vec(c["eta"])) : Vec::Zero(nx);
            u.pi_eta_v = Precision::scalar(nx, L_.opt_num(c, "pi", 0.0));
            u.infer_causes = L_.opt_bool(c, "infer", true);
        } else if (dk == "intentions" || dk == "hybrid") {
            const auto& in = L_.req(dn, "intentions", "dynamics");
            if (!in.IsSequence() || in.size() == 0) L_.fail(in, "dynamics needs at least one intention");
            for (const auto& i : in) intentions.push_back(unit_intention(B, angular, i));
            u.f = intention_dynamics(intentions);
            u.infer_causes = false;
            const int M = static_cast<int>(intentions.size());
            u.eta_v = Vec::Zero(M);
            u.pi_eta_v = Precision::scalar(M, 0.0);
            if (dk == "intentions") {
                u.v = dn["gains"] ? L_.vec(dn["gains"]) : Vec::Ones(M);
                if (u.v.size() != M) L_.fail(dn["gains"], "one gain per intention");
            } else {
                Vec prior = dn["prior"] ? L_.vec(dn["prior"]) : Vec::Constant(M, 1.0 / M);
                if (prior.size() != M) L_.fail(dn["prior"], "one prior entry per intention");
                try {
                    ag->h.state = make_hybrid_state(prior, static_cast<int>(L_.integer(L_.req(dn, "window", "hybrid dynamics"))));
                } catch (const ConfigError& e) {
                    L_.fail(dn, e.what());
                }
                const double pm = L_.opt_num(dn, "pi_m", L_.opt_num(n, "pi_x", 1.0));
                for (const auto& i : intentions) ag->h.reduced.push_back({i, Precision::scalar(nx, pm)});
                ag->h.P = u.pi_x.matrix();
                ag->h.refresh_dynamics();
                ag->hybrid = true;
                u.eta_v = Vec::Zero(M);
                u.pi_eta_v = Precision::scalar(M, 0.0);
            }
        } else {
            L_.fail(dn["kind"], "unknown dynamics kind '" + dk + "' (attractor, cause_attractor, intentions, hybrid)");
        }

        const auto& cn = L_.req(n, "channels", "unit agent");
        if (!cn.IsSequence()) L_.fail(cn, "channels must be a list");
        bool has_proprio = false;
        for (const auto& c : cn) {
            L_.allowed(c, {"name", "source", "map", "block", "pi", "proprio"}, "channel");
            Channel ch;
            ch.name = L_.opt_str(c, "name", L_.str(L_.req(c, "source", "channel")));
            Source src = source(w, c["source"]);
            std::string map = L_.opt_str(c, "map", "block");
            if (map == "block") {
                int b = block_of(B, c);
                ch.g = select_likelihood(nx, B.offset(b), B.dim(b));
            } else if (map == "cause") {
                if (u.v.size() == 0) L_.fail(c, "cause channel needs Gaussian causes");
                ch.g = cause_likelihood(nx, static_cast<int>(u.v.size()));
            } else if (map == "fk") {
                if (arm < 0) L_.fail(c, "fk channel needs the agent's arm");
                int b = block_of(B, c);
                const Arm& A = w.arms[arm];
                if (B.dim(b) != static_cast<int>(A.joints.size())) L_.fail(c, "fk block must have one angle per joint");
                Vec lengths(B.dim(b));
                for (int k = 0; k < lengths.size(); ++k) {
                    if (A.joints[k].parent != k - 1) L_.fail(c, "fk channels need a serial arm");
                    lengths[k] = A.joints[k].length;
                }
                ch.g = fk_likelihood(nx, B.offset(b), lengths, A.base);
            } else {
                L_.fail(c["map"], "unknown channel map '" + map + "' (block, cause, fk)");
            }
            Vec probe = w.truth(src);
            if (probe.size() != ch.g.out_dim)
                L_.fail(c, "source '" + src.spec + "' gives " + std::to_string(probe.size()) + " values, channel predicts " +
                               std::to_string(ch.g.out_dim));
            ch.pi = Precision::scalar(ch.g.out_dim, L_.num(L_.req(c, "pi", "channel")));
            ch.proprioceptive = L_.opt_bool(c, "proprio", false);
            if (ch.proprioceptive) {
                if (has_proprio) L_.fail(c, "only one proprioceptive channel per unit");
                if (arm < 0) L_.fail(c, "proprioceptive channel needs the agent's arm");
                if (ch.g.out_dim != static_cast<int>(w.arms[arm].joints.size()))
                    L_.fail(c, "proprioceptive channel must cover every joint");
                has_proprio = true;
                u.action_jacobian = gain * dt_ * Mat::Identity(ch.g.out_dim, ch.g.out_dim);
            }
            u.channels.push_back(ch);
            ag->sources.push_back(src);
        }

        if (n["switch"]) {
            const auto& s = n["switch"];
            L_.allowed(s, {"block", "comp", "threshold", "before", "after"}, "switch");
            if (dk != "intentions") L_.fail(s, "a switch needs intention dynamics with gains");
            int b = block_of(B, s);
            GainSwitch g;
            g.comp = B.offset(b) + static_cast<int>(L_.opt_num(s, "comp", 0));
            g.threshold = L_.opt_num(s, "threshold", 0.5);
            g.before = L_.vec(L_.req(s, "before", "switch"));
            g.after = L_.vec(L_.req(s, "after", "switch"));
            if (g.before.size() != u.v.size() || g.after.size() != u.v.size()) L_.fail(s, "switch gains need one entry per intention");
            ag->gain_switch = g;
            u.v = g.before;
        }
        try {
            check_unit(u);
        } catch (const ContractViolation& e) {
            L_.fail(n, e.what());
        }
        return ag;
    }

    int block_of(const EntityFactorization& B, const YAML::Node& n) {
        std::string b = L_.str(L_.req(n, "block", "block reference"));
        for (int i = 0; i < B.blocks(); ++i)
            if (B.name(i) == b) return i;
        L_.fail(n["block"], "unknown block '" + b + "'");
    }

    Intention unit_intention(const EntityFactorization& B, const std::vector<bool>& angular, const YAML::Node& n) {
        L_.allowed(n, {"name", "copy", "set"}, "intention");
        Intention i = Intention::stay(L_.str(L_.req(n, "name", "intention")), B.total());
        if (n["copy"])
            for (const auto& c : n["copy"]) {
                L_.allowed(c, {"to", "from"}, "copy");
                int to = block_by_name(B, c["to"]), from = block_by_name(B, c["from"]);
                if (B.dim(to) != B.dim(from)) L_.fail(c, "copied blocks differ in dimension");
                for (int k = 0; k < B.dim(to); ++k) i.copy(B.offset(to) + k, B.offset(from) + k);
            }
        if (n["set"])
            for (const auto& c : n["set"]) {
                L_.allowed(c, {"block", "comp", "value"}, "set");
                int b = block_by_name(B, c["block"]);
                int comp = static_cast<int>(L_.opt_num(c, "comp", 0));
                if (comp < 0 || comp >= B.dim(b)) L_.fail(c, "component out of range");
                double v = L_.num(L_.req(c, "value", "set"));
                i.set(B.offset(b) + comp, angular[b] ? deg2rad(v) : v);
            }
        return i;
    }

    int block_by_name(const EntityFactorization& B, const YAML::Node& n) {
        std::string b = L_.str(n);
        for (int i = 0; i < B.blocks(); ++i)
            if (B.name(i) == b) return i;
        L_.fail(n, "unknown block '" + b + "'");
    }

    // ---- network agents ----

    KinematicTree tree_of(const Arm& a) {
        KinematicTree t;
        for (const auto& j : a.joints) {
            t.names.push_back(j.name);
            t.parent.push_back(j.parent);
            t.length.push_back(j.length);
        }
        return t;
    }

    int node_of(const Network& net, const YAML::Node& n) {
        std::string s = L_.str(n);
        int i = net.find(s);
        if (i < 0) L_.fail(n, "unknown node '" + s + "'");
        return i;
    }

    // Angle components of a node are written in degrees.
    static bool angle_comp(const Node& nd, int c) {
        return (nd.kind == NodeKind::Intrinsic && c == 0) || (nd.kind == NodeKind::Extrinsic && c == 2);
    }

    std::unique_ptr<Agent> build_network_agent(const World& w, const YAML::Node& n) {
        L_.allowed(n, {"name", "kind", "arm", "action_gain", "self", "proprio", "pathways", "virtual_levels", "nodes",
                       "observations", "groups", "discrete"},
                   "network agent");
        auto ag = std::make_unique<NetworkAgent>();
        Network& net = ag->net;
        const int arm = actuated_arm(w, n, *ag);
        net.action_gain = L_.opt_num(n, "action_gain", 1.0);
        std::string self_pw;

        if (n["self"]) {
            const auto& s = n["self"];
            L_.allowed(s, {"pathway", "arm", "angles", "pi_link", "pi_x"}, "self");
            std::string an = L_.opt_str(s, "arm", arm >= 0 ? w.arms[arm].name : "");
            int ai = w.arm_index(an);
            if (ai < 0) L_.fail(s, "self pathway needs a known arm");
            const Arm& A = w.arms[ai];
            self_pw = L_.opt_str(s, "pathway", "self");
            PathwayOptions o;
            o.self = true;
            o.root_pose = A.base;
            o.angles = s["angles"] ? detail::deg(L_.vec(s["angles"])) : A.angles();
            if (o.angles.size() != static_cast<int>(A.joints.size())) L_.fail(s["angles"], "one angle per joint");
            o.pi_link = L_.opt_num(s, "pi_link", 1.0);
            o.pi_x = L_.opt_num(s, "pi_x", 1.0);
            attach_entity_pathway(net, tree_of(A), self_pw, -1, o);
            if (ai == arm) net.n_joints = static_cast<int>(A.joints.size());
            if (n["proprio"]) {
                const auto& p = n["proprio"];
                L_.allowed(p, {"pi"}, "proprio");
                const double pi = L_.num(L_.req(p, "pi", "proprio"));
                for (std::size_t j = 0; j < A.joints.size(); ++j) {
                    NetChannel c;
                    c.name = "proprio/" + A.joints[j].name;
                    c.source = A.name + "." + A.joints[j].name + ".angle";
                    c.node = net.node_index(intr_name(self_pw, A.joints[j].name));
                    c.comps = {0};
                    c.pi = Precision::scalar(1, pi);
                    c.joint = ai == arm ? static_cast<int>(j) : -1;
                    net.channels.push_back(c);
                    ag->sources.push_back(w.resolve(c.source));
                }
            }
        }
        if (n["proprio"] && !n["self"]) L_.fail(n["proprio"], "proprioception needs a self pathway");

        if (n["pathways"])
            for (const auto& p : n["pathways"]) {
                L_.allowed(p, {"entity", "tree", "level", "angles", "root", "infer_lengths", "pi_link", "pi_x"}, "pathway");
                std::string entity = L_.str(L_.req(p, "entity", "pathway"));
                std::string tn = L_.opt_str(p, "tree", arm >= 0 ? w.arms[arm].name : "");
                int ti = w.arm_index(tn);
                if (ti < 0) L_.fail(p, "pathway needs a known tree (arm)");
                const Arm& A = w.arms[ti];
                KinematicTree t = tree_of(A);
                std::string lv = L_.str(L_.req(p, "level", "pathway"));
                int level = -1;
                if (lv != "root") {
                    try {
                        level = t.index(lv);
                    } catch (const ConfigError& e) {
                        L_.fail(p["level"], e.what());
                    }
                }
                PathwayOptions o;
                o.root_pose = A.base;
                if (p["root"]) {
                    Vec r = L_.vec(p["root"]);
                    if (r.size() != 3) L_.fail(p["root"], "root is [x, y, orientation]");
                    o.root_pose = (Vec(3) << r[0], r[1], deg2rad(r[2])).finished();
                }
                o.angles = p["angles"] ? detail::deg(L_.vec(p["angles"])) : A.angles();
                if (o.angles.size() != t.size()) L_.fail(p["angles"], "one angle per tree module");
                o.infer_lengths = L_.opt_bool(p, "infer_lengths", false);
                o.pi_link = L_.opt_num(p, "pi_link", 1.0);
                o.pi_x = L_.opt_num(p, "pi_x", 1.0);
                try {
                    attach_entity_pathway(net, t, entity, level, o);
                } catch (const ConfigError& e) {
                    L_.fail(p, e.what());
                }
            }

        if (n["virtual_levels"])
            for (const auto& v : n["virtual_levels"]) {
                L_.allowed(v, {"pathway", "after", "name", "angle", "length", "infer_length", "pi_link", "pi_x"}, "virtual level");
                VirtualLevelOptions o;
                o.name = L_.opt_str(v, "name", "virtual");
                o.angle = deg2rad(L_.opt_num(v, "angle", 0.0));
                o.length = L_.num(L_.req(v, "length", "virtual level"));
                o.infer_length = L_.opt_bool(v, "infer_length", true);
                o.pi_link = L_.opt_num(v, "pi_link", 1.0);
                o.pi_x = L_.opt_num(v, "pi_x", 1.0);
                try {
                    attach_virtual_level(net, L_.str(L_.req(v, "pathway", "virtual level")), L_.str(L_.req(v, "after", "virtual level")),
                                         o, self_pw);
                } catch (const ConfigError& e) {
                    L_.fail(v, e.what());
                }
            }

        if (n["nodes"])
            for (const auto& g : n["nodes"]) {
                L_.allowed(g, {"name", "dim", "init", "from", "pi_x", "eta", "pi_eta"}, "node");
                Node nd;
                nd.name = L_.str(L_.req(g, "name", "node"));
                nd.pathway = nd.name;
                Vec init;
                if (g["from"]) init = w.truth(source(w, g["from"]));
                else init = L_.vec(L_.req(g, "init", "node"));
                if (g["dim"] && L_.integer(g["dim"]) != init.size()) L_.fail(g, "node init has the wrong dimension");
                nd.b = {init, Vec::Zero(init.size())};
                nd.pi_x = Precision::scalar(static_cast<int>(init.size()), L_.opt_num(g, "pi_x", 1.0));
                if (g["eta"]) {
                    nd.eta = L_.vec(g["eta"]);
                    if (nd.eta.size() != init.size()) L_.fail(g["eta"], "prior has the wrong dimension");
                    nd.pi_eta = Precision::scalar(static_cast<int>(init.size()), L_.num(L_.req(g, "pi_eta", "node with prior")));
                }
                try {
                    net.add_node(nd);
                } catch (const ConfigError& e) {
                    L_.fail(g, e.what());
                }
            }

        if (n["observations"])
            for (const auto& o : n["observations"]) {
                L_.allowed(o, {"name", "source", "node", "comps", "order", "pi"}, "observation");
                NetChannel c;
                c.source = L_.str(L_.req(o, "source", "observation"));
                c.name = L_.opt_str(o, "name", c.source);
                Source src = source(w, o["source"]);
                c.node = node_of(net, L_.req(o, "node", "observation"));
                const int size = static_cast<int>(w.truth(src).size());
                if (o["comps"]) {
                    for (double x : L_.vec(o["comps"])) c.comps.push_back(static_cast<int>(x));
                } else {
                    for (int k = 0; k < size; ++k) c.comps.push_back(k);
                }
                if (static_cast<int>(c.comps.size()) != size)
                    L_.fail(o, "source '" + c.source + "' gives " + std::to_string(size) + " values for " +
                                   std::to_string(c.comps.size()) + " components");
                for (int k : c.comps)
                    if (k < 0 || k >= net.nodes[c.node].dim()) L_.fail(o, "component out of range");
                c.order = static_cast<int>(L_.opt_num(o, "order", 0));
                if (c.order != 0 && c.order != 1) L_.fail(o["order"], "order must be 0 or 1");
                c.pi = Precision::scalar(size, L_.num(L_.req(o, "pi", "observation")));
                net.channels.push_back(c);
                ag->sources.push_back(src);
            }

        std::vector<std::vector<std::string>> intention_names;
        if (n["groups"])
            for (const auto& g : n["groups"]) intention_names.push_back(build_group(net, g));

        if (n["discrete"]) build_discrete(w, *ag, n["discrete"], intention_names);
        if (ag->velocity.size() != net.n_joints && arm >= 0)
            L_.fail(n, "the actuated arm needs a self pathway built from it");
        return ag;
    }

    std::vector<std::string> build_group(Network& net, const YAML::Node& g) {
        L_.allowed(g, {"name", "nodes", "pi_x", "mode", "v", "intentions", "window", "prior", "pi_m", "repulsors", "switch", "planner"},
                   "group");
        Group gr;
        gr.name = L_.str(L_.req(g, "name", "group"));
        for (const auto& nn : L_.req(g, "nodes", "group")) gr.nodes.push_back(node_of(net, nn));
        int dim = 0;
        std::vector<int> offsets;
        for (int k : gr.nodes) {
            offsets.push_back(dim);
            dim += net.nodes[k].dim();
        }
        auto slot = [&](const YAML::Node& where, int node) {
            for (std::size_t k = 0; k < gr.nodes.size(); ++k)
                if (gr.nodes[k] == node) return static_cast<int>(k);
            L_.fail(where, "node '" + net.nodes[node].name + "' is not in group '" + gr.name + "'");
        };
        gr.pi_x = Precision::scalar(dim, L_.opt_num(g, "pi_x", 1.0));
        const auto& in = L_.req(g, "intentions", "group");
        if (!in.IsSequence() || in.size() == 0) L_.fail(in, "group '" + gr.name + "' needs at least one intention");
        std::vector<std::string> names;
        const double pi_m = L_.opt_num(g, "pi_m", L_.opt_num(g, "pi_x", 1.0));
        for (const auto& i : in) {
            L_.allowed(i, {"name", "copy", "set"}, "intention");
            Intention it = Intention::stay(L_.str(L_.req(i, "name", "intention")), dim);
            if (i["copy"])
                for (const auto& c : i["copy"]) {
                    L_.allowed(c, {"to", "from", "comps"}, "copy");
                    int to = node_of(net, L_.req(c, "to", "copy")), from = node_of(net, L_.req(c, "from", "copy"));
                    int st = slot(c["to"], to), sf = slot(c["from"], from);
                    std::vector<int> comps;
                    if (c["comps"]) {
                        for (double x : L_.vec(c["comps"])) comps.push_back(static_cast<int>(x));
                    } else {
                        if (net.nodes[to].dim() != net.nodes[from].dim()) L_.fail(c, "copied nodes differ in dimension");
                        for (int k = 0; k < net.nodes[to].dim(); ++k) comps.push_back(k);
                    }
                    for (int k : comps) {
                        if (k < 0 || k >= net.nodes[to].dim() || k >= net.nodes[from].dim()) L_.fail(c, "component out of range");
                        it.copy(offsets[st] + k, offsets[sf] + k);
                    }
                }
            if (i["set"])
                for (const auto& c : i["set"]) {
                    L_.allowed(c, {"node", "comp", "value"}, "set");
                    int nd = node_of(net, L_.req(c, "node", "set"));
                    int comp = static_cast<int>(L_.opt_num(c, "comp", 0));
                    if (comp < 0 || comp >= net.nodes[nd].dim()) L_.fail(c, "component out of range");
                    double v = L_.num(L_.req(c, "value", "set"));
                    it.set(offsets[slot(c["node"], nd)] + comp, angle_comp(net.nodes[nd], comp) ? deg2rad(v) : v);
                }
            names.push_back(it.name);
            gr.models.push_back({it, Precision::scalar(dim, pi_m)});
        }
        const int M = static_cast<int>(gr.models.size());
        std::string mode = L_.opt_str(g, "mode", "gains");
        if (mode == "gains") {
            gr.mode = CauseMode::Gains;
            gr.v = g["v"] ? L_.vec(g["v"]) : Vec::Ones(M);
            if (gr.v.size() != M) L_.fail(g["v"], "one gain per intention");
        } else if (mode == "hybrid") {
            gr.mode = CauseMode::Hybrid;
            Vec prior = g["prior"] ? L_.vec(g["prior"]) : Vec::Constant(M, 1.0 / M);
            if (prior.size() != M) L_.fail(g["prior"], "one prior entry per intention");
            try {
                gr.hybrid = make_hybrid_state(prior, static_cast<int>(L_.opt_num(g, "window", 30)));
            } catch (const ConfigError& e) {
                L_.fail(g, e.what());
            }
            gr.v = prior;
            gr.external_bmc = L_.opt_bool(g, "planner", false);
            gr.last_L = Vec::Zero(M);
            // P: dynamics precision plus whatever velocity observations reach the group
            Mat P = gr.pi_x.matrix();
            for (const auto& c : net.channels) {
                if (c.order != 1) continue;
                for (std::size_t k = 0; k < gr.nodes.size(); ++k)
                    if (gr.nodes[k] == c.node)
                        for (std::size_t j = 0; j < c.comps.size(); ++j) {
                            int r = offsets[k] + c.comps[j];
                            P(r, r) += c.pi.matrix()(static_cast<int>(j), static_cast<int>(j));
                        }
            }
            gr.P = P;
        } else {
            L_.fail(g["mode"], "group mode must be 'gains' or 'hybrid'");
        }
        if (g["repulsors"])
            for (const auto& r : g["repulsors"]) {
                L_.allowed(r, {"node", "source", "k", "cutoff"}, "repulsor");
                Repulsor rp;
                rp.node = node_of(net, L_.req(r, "node", "repulsor"));
                slot(r["node"], rp.node);
                if (net.nodes[rp.node].dim() < 2) L_.fail(r, "repulsion acts on a position");
                rp.source = node_of(net, L_.req(r, "source", "repulsor"));
                rp.k = L_.num(L_.req(r, "k", "repulsor"));
                rp.cutoff = L_.num(L_.req(r, "cutoff", "repulsor"));
                gr.repulsors.push_back(rp);
            }
        if (g["switch"]) {
            const auto& s = g["switch"];
            L_.allowed(s, {"node", "comp", "threshold", "before", "after"}, "switch");
            if (gr.mode != CauseMode::Gains) L_.fail(s, "a switch needs a gains group");
            CauseSwitch cs;
            cs.node = node_of(net, L_.req(s, "node", "switch"));
            cs.comp = static_cast<int>(L_.opt_num(s, "comp", 0));
            cs.threshold = L_.opt_num(s, "threshold", 0.5);
            cs.before = L_.vec(L_.req(s, "before", "switch"));
            cs.after = L_.vec(L_.req(s, "after", "switch"));
            if (cs.before.size() != M || cs.after.size() != M) L_.fail(s, "switch gains need one entry per intention");
            gr.cause_switch = cs;
            gr.v = cs.before;
        }
        try {
            net.add_group(gr);
        } catch (const ConfigError& e) {
            L_.fail(g, e.what());
        }
        return names;
    }

    void build_discrete(const World& w, NetworkAgent& ag, const YAML::Node& d,
                        const std::vector<std::vector<std::string>>& intention_names) {
        L_.allowed(d, {"states", "actions", "horizon", "D", "B", "window", "use_F", "modalities"}, "discrete");
        DiscreteModel m;
        m.states = L_.strs(L_.req(d, "states", "discrete"));
        m.actions = L_.strs(L_.req(d, "actions", "discrete"));
        m.horizon = static_cast<int>(L_.integer(L_.req(d, "horizon", "discrete")));
        m.D = L_.vec(L_.req(d, "D", "discrete"));
        m.policy_uses_vfe = L_.opt_bool(d, "use_F", false);
        const auto& bn = L_.req(d, "B", "discrete");
        for (const auto& a : m.actions) {
            if (!bn[a]) L_.fail(bn, "missing B matrix for action '" + a + "'");
            m.B.push_back(L_.mat(bn[a]));
        }
        for (const auto& kv : bn) {
            auto k = kv.first.as<std::string>();
            if (std::find(m.actions.begin(), m.actions.end(), k) == m.actions.end())
                L_.note(kv.first, "B given for unknown action '" + k + "'");
        }
        DiscreteCoupling dc;
        dc.window = static_cast<int>(L_.integer(L_.req(d, "window", "discrete")));
        if (dc.window <= 0) L_.fail(d["window"], "window must be positive");
        for (const auto& mn : L_.req(d, "modalities", "discrete")) {
            L_.allowed(mn, {"name", "group", "source", "outcomes", "A", "C"}, "modality");
            Modality mod;
            mod.name = L_.str(L_.req(mn, "name", "modality"));
            mod.A = L_.mat(L_.req(mn, "A", "modality"));
            mod.C = L_.vec(L_.req(mn, "C", "modality"));
            auto outcomes = L_.strs(L_.req(mn, "outcomes", "modality"));
            mod.outcomes = outcomes;
            if (static_cast<int>(outcomes.size()) != mod.A.rows()) L_.note(mn["outcomes"], "one outcome name per row of A");
            if (mn["group"]) {
                mod.cause = true;
                int gi = -1;
                try {
                    gi = ag.net.group_index(L_.str(mn["group"]));
                } catch (const ConfigError& e) {
                    L_.fail(mn["group"], e.what());
                }
                Group& g = ag.net.groups[gi];
                if (g.mode != CauseMode::Hybrid) L_.fail(mn["group"], "a cause modality needs a hybrid group");
                g.external_bmc = true;
                const auto& names = intention_names[gi];
                for (std::size_t k = 0; k < outcomes.size(); ++k)
                    if (k >= names.size() || names[k] != outcomes[k])
                        L_.note(mn["outcomes"], "outcome '" + outcomes[k] + "' does not name intention " + std::to_string(k) +
                                                    " of group '" + g.name + "'");
                if (outcomes.size() != names.size()) L_.note(mn["outcomes"], "outcomes must list every intention of the group");
                dc.group.push_back(gi);
                dc.source.push_back({});
            } else {
                if (mod.A.rows() != 2) L_.fail(mn["A"], "sensory modalities are binary (two outcome rows)");
                dc.group.push_back(-1);
                dc.source.push_back(source(w, L_.req(mn, "source", "sensory modality")));
            }
            m.modalities.push_back(mod);
        }
        for (const auto& e : validate_model(m)) L_.note(d, "discrete model: " + e);
        if (!L_.errors.empty()) return;
        m.policies = enumerate_policies(static_cast<int>(m.actions.size()), m.horizon);
        dc.planner = std::make_unique<Planner>(m);
        ag.disc = std::move(dc);
    }

    // ---- signals and assertions ----

    SignalRef ref(const Simulation& s, const YAML::Node& n) {
        L_.allowed(n, {"world", "belief", "velocity", "cause", "free_energy", "action", "agent", "index", "deg", "scale", "name"},
                   "signal reference");
        SignalRef r;
        if (n["agent"]) {
            try {
                r.agent = s.agent_index(L_.str(n["agent"]));
            } catch (const ConfigError& e) {
                L_.fail(n["agent"], e.what());
            }
        }
        auto need_agent = [&]() {
            if (r.agent >= static_cast<int>(s.agents.size())) L_.fail(n, "signal refers to an agent, but none is defined");
        };
        if (n["world"]) {
            r.kind = SignalRef::Kind::World;
            r.source = source(s.world, n["world"]);
            r.key = r.source.spec;
        } else if (n["belief"] || n["velocity"]) {
            need_agent();
            r.kind = n["belief"] ? SignalRef::Kind::Belief : SignalRef::Kind::Velocity;
            r.key = L_.str(n["belief"] ? n["belief"] : n["velocity"]);
            try {
                s.agents[r.agent]->belief(r.key, false);
            } catch (const ConfigError& e) {
                L_.fail(n, e.what());
            }
        } else if (n["cause"]) {
            need_agent();
            r.kind = SignalRef::Kind::Cause;
            r.key = L_.str(n["cause"]);
            try {
                s.agents[r.agent]->cause(r.key);
            } catch (const ConfigError& e) {
                L_.fail(n, e.what());
            }
        } else if (n["free_energy"]) {
            need_agent();
            r.kind = SignalRef::Kind::FreeEnergy;
        } else if (n["action"]) {
            need_agent();
            r.kind = SignalRef::Kind::Action;
        } else {
            L_.fail(n, "signal needs one of world, belief, velocity, cause, free_energy, action");
        }
        return r;
    }

    SignalSpec build_signal(const Simulation& s, const YAML::Node& n) {
        SignalSpec sg;
        sg.name = L_.str(L_.req(n, "name", "signal"));
        if (sg.name == "tick" || sg.name == "t") L_.fail(n, "signal names 'tick' and 't' are reserved");
        if (n["distance"]) {
            L_.allowed(n, {"name", "distance"}, "distance signal");
            const auto& d = n["distance"];
            if (!d.IsSequence() || d.size() != 2) L_.fail(d, "distance needs two references");
            sg.distance = true;
            sg.a = ref(s, d[0]);
            sg.b = ref(s, d[1]);
            return sg;
        }
        sg.a = ref(s, n);
        sg.index = static_cast<int>(L_.opt_num(n, "index", 0));
        if (L_.opt_bool(n, "deg", false)) sg.scale = 180.0 / kPi;
        sg.scale *= L_.opt_num(n, "scale", 1.0);
        return sg;
    }

    AssertionSpec build_assertion(const Simulation& s, const YAML::Node& n, const std::set<std::string>& signals) {
        L_.allowed(n, {"name", "kind", "signal", "a", "b", "value", "tol", "from", "after", "sequence", "agent"}, "assertion");
        AssertionSpec a;
        a.name = L_.str(L_.req(n, "name", "assertion"));
        a.kind = L_.str(L_.req(n, "kind", "assertion"));
        static const std::set<std::string> kinds{"final_below", "final_near", "ratio_final_initial", "steady_below",
                                                 "steady_near", "steady_mean_near", "ever_below", "overtakes",
                                                 "final_rel_error", "discrete_order", "min_above"};
        if (!kinds.count(a.kind)) L_.fail(n["kind"], "unknown assertion kind '" + a.kind + "'");
        a.a = n["signal"] ? L_.str(n["signal"]) : L_.opt_str(n, "a", "");
        a.b = L_.opt_str(n, "b", "");
        a.value = L_.opt_num(n, "value", a.value);
        a.tol = L_.opt_num(n, "tol", 0.0);
        a.from = L_.opt_num(n, "from", 0.75);
        a.after = L_.opt_str(n, "after", "");
        if (a.kind == "discrete_order") {
            if (n["agent"]) {
                try {
                    a.agent = s.agent_index(L_.str(n["agent"]));
                } catch (const ConfigError& e) {
                    L_.fail(n["agent"], e.what());
                }
            }
            if (a.agent >= static_cast<int>(s.agents.size()) || !dynamic_cast<NetworkAgent*>(s.agents[a.agent].get()) ||
                !dynamic_cast<NetworkAgent*>(s.agents[a.agent].get())->disc)
                L_.fail(n, "discrete_order needs an agent with a discrete planner");
            const auto& m = dynamic_cast<NetworkAgent*>(s.agents[a.agent].get())->disc->planner->model();
            for (const auto& e : L_.strs(L_.req(n, "sequence", "discrete_order"))) {
                auto eq = e.find('=');
                if (eq == std::string::npos) L_.fail(n["sequence"], "sequence entries are modality=outcome");
                std::string mod = e.substr(0, eq), out = e.substr(eq + 1);
                bool found = false;
                for (const auto& md : m.modalities)
                    if (md.name == mod) {
                        found = true;
                        if (md.outcome(out) < 0) L_.note(n["sequence"], "modality '" + mod + "' has no outcome '" + out + "'");
                    }
                if (!found) L_.note(n["sequence"], "unknown modality '" + mod + "'");
                a.sequence.emplace_back(mod, out);
            }
            return a;
        }
        if (a.a.empty()) L_.fail(n, "assertion needs a signal");
        if (!signals.count(a.a)) L_.note(n, "assertion '" + a.name + "' uses unknown signal '" + a.a + "'");
        if (!a.b.empty() && !signals.count(a.b)) L_.note(n, "assertion '" + a.name + "' uses unknown signal '" + a.b + "'");
        return a;
    }
};

inline YAML::Node parse_yaml_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError(path + ": cannot open scenario file");
    try {
        return YAML::Load(in);
    } catch (const YAML::ParserException& e) {
        throw ConfigError(path + ":" + std::to_string(e.mark.line + 1) + ": " + e.msg);
    }
}

inline Simulation load_simulation(const std::string& path, std::optional<std::uint64_t> seed = std::nullopt) {
    return ScenarioBuilder(path, parse_yaml_file(path)).build(seed);
}

} // namespace dynplan
