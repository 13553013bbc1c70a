#pragma once
// Generative process: ground-truth arms, moving objects, tools, contact and grasping, noisy sensing.
// The world never sees agent beliefs; it only receives joint velocities.

#include "kinematics.hpp"
#include "rng.hpp"

#include <optional>

namespace dynplan {

struct Joint {
    std::string name;
    int parent = -1;  // -1: the arm base
    double length = 0.0;
    double angle = 0.0;
};

struct Arm {
    std::string name;
    Vec base = Vec::Zero(3);
    std::vector<Joint> joints;
    std::optional<Vec> scripted;  // constant joint velocities overriding the agent
    std::vector<Vec> poses;       // [x, y, phi] at the end of each joint
    std::vector<Vec> prev_poses;

    int index(const std::string& j) const {
        for (std::size_t i = 0; i < joints.size(); ++i)
            if (joints[i].name == j) return static_cast<int>(i);
        throw ConfigError("arm '" + name + "' has no joint '" + j + "'");
    }
    double total_length() const {
        double s = 0.0;
        for (const auto& j : joints) s += j.length;
        return s;
    }
    Vec angles() const {
        Vec a(static_cast<int>(joints.size()));
        for (std::size_t i = 0; i < joints.size(); ++i) a[static_cast<int>(i)] = joints[i].angle;
        return a;
    }
    void update_poses() {
        poses.resize(joints.size());
        for (std::size_t i = 0; i < joints.size(); ++i) {
            const Vec& parent = joints[i].parent < 0 ? base : poses[joints[i].parent];
            poses[i] = roto_translate(parent, (Vec(2) << joints[i].angle, joints[i].length).finished());
        }
    }
};

enum class MotionKind { Static, Linear, Circular, Scripted };

struct MotionLaw {
    MotionKind kind = MotionKind::Static;
    Vec velocity;            // linear
    Vec center;              // circular
    double radius = 0.0;
    double omega = 0.0;
    double phase = 0.0;
    std::vector<Vec> waypoints;  // scripted, visited at `segment_time` intervals
    double segment_time = 1.0;

    Vec at(const Vec& initial, double t) const {
        switch (kind) {
        case MotionKind::Static: return initial;
        case MotionKind::Linear: return initial + t * velocity;
        case MotionKind::Circular: {
            double a = phase + omega * t;
            return center + radius * (Vec(2) << std::cos(a), std::sin(a)).finished();
        }
        case MotionKind::Scripted: {
            if (waypoints.empty()) return initial;
            double s = t / segment_time;
            auto k = static_cast<std::size_t>(std::floor(s));
            if (k + 1 >= waypoints.size()) return waypoints.back();
            double u = s - static_cast<double>(k);
            return (1.0 - u) * waypoints[k] + u * waypoints[k + 1];
        }
        }
        return initial;
    }
};

struct Object {
    std::string name;
    Vec initial;
    Vec state;
    Vec prev;
    MotionLaw law;
    int attached_arm = -1;
    int attached_joint = -1;
    Vec offset;  // in the hand frame
    long jump_tick = -1;  // optional displacement, for replanning checks
    Vec jump;
};

// Rigid stick: base, orientation, length.
struct Tool {
    std::string name;
    Vec base = Vec::Zero(2);
    double orientation = 0.0;
    double length = 0.0;
    int attached_arm = -1;
    int attached_joint = -1;
    Vec offset;
    double rel_angle = 0.0;
    Vec prev_tip;

    Vec tip() const { return base + length * (Vec(2) << std::cos(orientation), std::sin(orientation)).finished(); }
};

struct FingerSpec {
    int joint = -1;
    double open = 0.0;
    double closed = 0.0;
};

// Attaches `target` to the hand once in contact (and, with fingers, closed enough).
struct GraspRule {
    bool tool = false;
    int target = -1;
    int arm = -1;
    int hand = -1;
    std::vector<FingerSpec> fingers;
    double closure = 0.7;
};

struct NoiseSpec {
    double proprio = 0.01;
    double vision = 0.01;
    double touch = 0.05;
};

enum class SourceKind { Angles, JointAngle, JointPos, JointPose, JointVel, ObjectState, ObjectVel, ToolBase, ToolTip, Touch, Held };

struct Source {
    std::string spec;
    SourceKind kind = SourceKind::Angles;
    int arm = -1;
    int joint = -1;
    int object = -1;
    int tool = -1;
    bool target_is_tool = false;
    std::uint64_t stream = 0;
};

class World {
public:
    std::vector<Arm> arms;
    std::vector<Object> objects;
    std::vector<Tool> tools;
    std::vector<GraspRule> grasps;
    NoiseSpec noise;
    double contact_radius = -1.0;  // < 0: 5% of the first arm's length
    double dt = 0.01;
    long tick = 0;
    CounterRng rng{0};

    int arm_index(const std::string& n) const {
        for (std::size_t i = 0; i < arms.size(); ++i)
            if (arms[i].name == n) return static_cast<int>(i);
        return -1;
    }
    int object_index(const std::string& n) const {
        for (std::size_t i = 0; i < objects.size(); ++i)
            if (objects[i].name == n) return static_cast<int>(i);
        return -1;
    }
    int tool_index(const std::string& n) const {
        for (std::size_t i = 0; i < tools.size(); ++i)
            if (tools[i].name == n) return static_cast<int>(i);
        return -1;
    }

    double radius() const {
        if (contact_radius >= 0.0) return contact_radius;
        return arms.empty() ? 0.0 : 0.05 * arms.front().total_length();
    }

    void init() {
        for (auto& a : arms) {
            a.update_poses();
            a.prev_poses = a.poses;
        }
        for (auto& o : objects) {
            o.state = o.law.at(o.initial, 0.0);
            o.prev = o.state;
        }
        for (auto& t : tools) t.prev_tip = t.tip();
        check_grasps();
    }

    Vec hand_position(int arm, int joint) const { return arms[arm].poses[joint].head(2); }

    // Touch: hand within contact radius of an object or a tool's base.
    bool contact(int arm, int joint, int target, bool is_tool) const {
        Vec p = hand_position(arm, joint);
        Vec q = is_tool ? tools[target].base : objects[target].state.head(2);
        return (p - q).norm() < radius();
    }

    void step(const std::vector<Vec>& actions) {
        require(actions.size() == arms.size(), "one action vector per arm");
        for (std::size_t i = 0; i < arms.size(); ++i) {
            Arm& a = arms[i];
            a.prev_poses = a.poses;
            const Vec& vel = a.scripted ? *a.scripted : actions[i];
            if (vel.size() == 0) continue;
            require(vel.size() == static_cast<int>(a.joints.size()), "action size must match joints of " + a.name);
            for (std::size_t j = 0; j < a.joints.size(); ++j) a.joints[j].angle += dt * vel[static_cast<int>(j)];
            a.update_poses();
        }
        ++tick;
        const double t = static_cast<double>(tick) * dt;
        for (auto& o : objects) {
            o.prev = o.state;
            if (o.attached_arm >= 0) {
                const Vec& h = arms[o.attached_arm].poses[o.attached_joint];
                o.state.head(2) = h.head(2) + rotate(o.offset, h[2]);
            } else {
                o.state = o.law.at(o.initial, t);
                if (o.jump_tick >= 0 && tick >= o.jump_tick) o.state += o.jump;
            }
        }
        for (auto& tl : tools) {
            tl.prev_tip = tl.tip();
            if (tl.attached_arm >= 0) {
                const Vec& h = arms[tl.attached_arm].poses[tl.attached_joint];
                tl.base = h.head(2) + rotate(tl.offset, h[2]);
                tl.orientation = h[2] + tl.rel_angle;
            }
        }
        check_grasps();
    }

    Source resolve(const std::string& spec) const {
        Source s;
        s.spec = spec;
        s.stream = stream_id(spec.c_str());
        auto fail = [&](const std::string& why) { return ConfigError("source '" + spec + "': " + why); };
        auto parts = split(spec, ':');
        if (parts.size() == 3 && (parts[0] == "touch")) {
            auto hp = split(parts[1], '.');
            if (hp.size() != 2) throw fail("touch needs arm.joint");
            s.kind = SourceKind::Touch;
            s.arm = arm_index(hp[0]);
            if (s.arm < 0) throw fail("unknown arm");
            s.joint = arms[s.arm].index(hp[1]);
            s.object = object_index(parts[2]);
            if (s.object < 0) {
                s.object = tool_index(parts[2]);
                s.target_is_tool = true;
            }
            if (s.object < 0) throw fail("unknown touch target");
            return s;
        }
        if (parts.size() == 2 && parts[0] == "held") {
            s.kind = SourceKind::Held;
            s.object = object_index(parts[1]);
            if (s.object < 0) throw fail("unknown object");
            return s;
        }
        if (parts.size() != 1) throw fail("malformed");
        auto p = split(spec, '.');
        if (int a = arm_index(p[0]); a >= 0) {
            s.arm = a;
            if (p.size() == 2 && p[1] == "angles") {
                s.kind = SourceKind::Angles;
                return s;
            }
            if (p.size() != 3) throw fail("expected arm.joint.field");
            s.joint = arms[a].index(p[1]);
            if (p[2] == "angle") s.kind = SourceKind::JointAngle;
            else if (p[2] == "pos") s.kind = SourceKind::JointPos;
            else if (p[2] == "pose") s.kind = SourceKind::JointPose;
            else if (p[2] == "vel") s.kind = SourceKind::JointVel;
            else throw fail("unknown joint field");
            return s;
        }
        if (int o = object_index(p[0]); o >= 0) {
            s.object = o;
            if (p.size() == 1 || (p.size() == 2 && p[1] == "pos")) s.kind = SourceKind::ObjectState;
            else if (p.size() == 2 && p[1] == "vel") s.kind = SourceKind::ObjectVel;
            else throw fail("unknown object field");
            return s;
        }
        if (int t = tool_index(p[0]); t >= 0) {
            s.tool = t;
            if (p.size() == 2 && p[1] == "base") s.kind = SourceKind::ToolBase;
            else if (p.size() == 2 && p[1] == "tip") s.kind = SourceKind::ToolTip;
            else throw fail("unknown tool field");
            return s;
        }
        throw fail("unknown entity");
    }

    // Noiseless value of a source.
    Vec truth(const Source& s) const {
        switch (s.kind) {
        case SourceKind::Angles: return arms[s.arm].angles();
        case SourceKind::JointAngle: return Vec::Constant(1, arms[s.arm].joints[s.joint].angle);
        case SourceKind::JointPos: return arms[s.arm].poses[s.joint].head(2);
        case SourceKind::JointPose: return arms[s.arm].poses[s.joint];
        case SourceKind::JointVel:
            return (arms[s.arm].poses[s.joint].head(2) - arms[s.arm].prev_poses[s.joint].head(2)) / dt;
        case SourceKind::ObjectState: return objects[s.object].state;
        case SourceKind::ObjectVel: return (objects[s.object].state - objects[s.object].prev) / dt;
        case SourceKind::ToolBase: return tools[s.tool].base;
        case SourceKind::ToolTip: return tools[s.tool].tip();
        case SourceKind::Touch: return Vec::Constant(1, contact(s.arm, s.joint, s.object, s.target_is_tool) ? 1.0 : 0.0);
        case SourceKind::Held: return Vec::Constant(1, objects[s.object].attached_arm >= 0 ? 1.0 : 0.0);
        }
        return {};
    }

    Vec observe(const Source& s) const {
        Vec v = truth(s);
        double sigma = 0.0;
        switch (s.kind) {
        case SourceKind::Angles:
        case SourceKind::JointAngle: sigma = noise.proprio; break;
        case SourceKind::Touch:
        case SourceKind::Held: sigma = noise.touch; break;
        default: sigma = noise.vision; break;
        }
        if (sigma > 0.0)
            for (int i = 0; i < v.size(); ++i)
                v[i] += sigma * rng.normal(static_cast<std::uint64_t>(tick), s.stream, static_cast<std::uint64_t>(i));
        if (s.kind == SourceKind::Touch || s.kind == SourceKind::Held) v[0] = std::clamp(v[0], 0.0, 1.0);
        return v;
    }

    static Vec rotate(const Vec& v, double a) {
        return (Vec(2) << std::cos(a) * v[0] - std::sin(a) * v[1], std::sin(a) * v[0] + std::cos(a) * v[1]).finished();
    }

    static std::vector<std::string> split(const std::string& s, char sep) {
        std::vector<std::string> out;
        std::string cur;
        for (char c : s) {
            if (c == sep) {
                out.push_back(cur);
                cur.clear();
            } else {
                cur += c;
            }
        }
        out.push_back(cur);
        return out;
    }

private:
    void check_grasps() {
        for (const auto& g : grasps) {
            if (g.tool) {
                Tool& tl = tools[g.target];
                if (tl.attached_arm >= 0 || !contact(g.arm, g.hand, g.target, true)) continue;
                const Vec& h = arms[g.arm].poses[g.hand];
                tl.attached_arm = g.arm;
                tl.attached_joint = g.hand;
                tl.offset = rotate(tl.base - h.head(2), -h[2]);
                tl.rel_angle = tl.orientation - h[2];
                continue;
            }
            Object& o = objects[g.target];
            if (o.attached_arm >= 0 || !contact(g.arm, g.hand, g.target, false)) continue;
            double c = 0.0;
            for (const auto& f : g.fingers)
                c += (arms[g.arm].joints[f.joint].angle - f.open) / (f.closed - f.open);
            if (!g.fingers.empty()) c /= static_cast<double>(g.fingers.size());
            if (!g.fingers.empty() && c < g.closure) continue;
            const Vec& h = arms[g.arm].poses[g.hand];
            o.attached_arm = g.arm;
            o.attached_joint = g.hand;
            o.offset = rotate(o.state.head(2) - h.head(2), -h[2]);
        }
    }
};

} // namespace dynplan
