#pragma once
// Hierarchical network of IE modules with parallel pathways (self, objects, tools, other agents).
//
// Every belief lives in a node. Links carry the roto-translation between a parent extrinsic node,
// an intrinsic node and a child extrinsic node; the child's error is its forward prior and the
// backward observation of the two inputs. Groups bundle nodes into one unit for dynamics:
// intentions act on the concatenated state of the group.

#include "hybrid.hpp"
#include "kinematics.hpp"

#include <algorithm>
#include <map>
#include <optional>
#include <set>

namespace dynplan {

enum class NodeKind { Intrinsic, Extrinsic, Generic };

struct Node {
    std::string name;
    std::string pathway;
    std::string module;  // empty for root frames and generic nodes
    NodeKind kind = NodeKind::Generic;
    GeneralizedBelief b;
    std::vector<bool> frozen;
    Vec eta;
    Precision pi_eta;  // zero when the node has no prior
    Precision pi_x;    // used when the node is not in a group (eta' = 0)
    int group = -1;
    bool virtual_level = false;

    int dim() const { return b.dim(); }
};

struct Link {
    int parent = -1;
    int intr = -1;
    int child = -1;
    Precision pi;
};

struct NetChannel {
    std::string name;
    std::string source;  // world signal feeding the channel
    int node = -1;
    std::vector<int> comps;
    int order = 0;  // 0: value, 1: velocity
    Precision pi;
    int joint = -1;  // proprioceptive channels drive this joint
};

// eta' += k d / |d|^3 on the position of `node`, d measured from `source` (read as a fixed parameter).
struct Repulsor {
    int node = -1;
    int source = -1;
    double k = 0.0;
    double cutoff = 0.0;
};

// Gains switched by a thresholded belief (e.g. touch); latches once triggered.
struct CauseSwitch {
    int node = -1;
    int comp = 0;
    double threshold = 0.5;
    Vec before;
    Vec after;
    bool latched = false;
};

enum class CauseMode { Gains, Hybrid };

struct Group {
    std::string name;
    std::vector<int> nodes;
    std::vector<int> offsets;
    int dim = 0;
    Precision pi_x;
    std::vector<ReducedModel> models;
    CauseMode mode = CauseMode::Gains;
    Vec v;
    HybridState hybrid;
    Mat P;  // posterior precision used for model reduction
    bool external_bmc = false;  // a discrete planner closes the windows
    std::vector<Repulsor> repulsors;
    std::optional<CauseSwitch> cause_switch;
    Vec last_L;
    Vec last_eta;
};

struct TickReport {
    double free_energy = 0.0;
    double proprio_error = 0.0;
    std::vector<std::string> missing;
    std::vector<int> windows_closed;  // groups whose in-unit BMC fired this tick
};

class Network {
public:
    std::vector<Node> nodes;
    std::vector<Link> links;
    std::vector<NetChannel> channels;
    std::vector<Group> groups;
    int n_joints = 0;
    double action_gain = 1.0;

    int find(const std::string& name) const {
        for (std::size_t i = 0; i < nodes.size(); ++i)
            if (nodes[i].name == name) return static_cast<int>(i);
        return -1;
    }
    int node_index(const std::string& name) const {
        int i = find(name);
        if (i < 0) throw ConfigError("unknown node '" + name + "'");
        return i;
    }
    int group_index(const std::string& name) const {
        for (std::size_t g = 0; g < groups.size(); ++g)
            if (groups[g].name == name) return static_cast<int>(g);
        throw ConfigError("unknown group '" + name + "'");
    }

    int add_node(Node n) {
        if (find(n.name) >= 0) throw ConfigError("duplicate node '" + n.name + "'");
        const int d = n.dim();
        if (n.frozen.empty()) n.frozen.assign(d, false);
        if (n.eta.size() == 0) n.eta = Vec::Zero(d);
        if (n.pi_eta.dim() == 0) n.pi_eta = Precision::scalar(d, 0.0);
        if (n.pi_x.dim() == 0) n.pi_x = Precision::scalar(d, 1.0);
        nodes.push_back(std::move(n));
        return static_cast<int>(nodes.size()) - 1;
    }

    int add_group(Group g) {
        g.offsets.clear();
        g.dim = 0;
        for (int n : g.nodes) {
            if (nodes.at(n).group >= 0) throw ConfigError("node '" + nodes[n].name + "' is already in a group");
            g.offsets.push_back(g.dim);
            g.dim += nodes[n].dim();
        }
        for (int n : g.nodes) nodes[n].group = static_cast<int>(groups.size());
        if (g.pi_x.dim() == 0) g.pi_x = Precision::scalar(g.dim, 1.0);
        if (g.pi_x.dim() != g.dim) throw ConfigError("group '" + g.name + "' precision has wrong dimension");
        for (const auto& m : g.models) {
            check_intention(m.intention, g.dim);
            if (m.pi.dim() != g.dim) throw ConfigError("group '" + g.name + "' reduced precision has wrong dimension");
        }
        if (g.models.empty()) throw ConfigError("group '" + g.name + "' has no intentions");
        if (g.v.size() != static_cast<int>(g.models.size()))
            throw ConfigError("group '" + g.name + "' needs one cause per intention");
        if (g.P.size() == 0) g.P = g.pi_x.matrix();
        groups.push_back(std::move(g));
        return static_cast<int>(groups.size()) - 1;
    }

    Vec group_state(const Group& g, bool prime) const {
        Vec x(g.dim);
        for (std::size_t k = 0; k < g.nodes.size(); ++k) {
            const auto& b = nodes[g.nodes[k]].b;
            x.segment(g.offsets[k], b.dim()) = prime ? b.mu_prime : b.mu;
        }
        return x;
    }

    // Trajectory of every reduced model (intention + common repulsion) and the jacobian of the repulsion.
    struct GroupDynamics {
        std::vector<Vec> f;
        Vec eta;
        Mat jac;  // d eta' / d x
        Mat rep_jac;
    };

    GroupDynamics group_dynamics(const Group& g) const {
        GroupDynamics gd;
        Vec x = group_state(g, false);
        Vec rep = Vec::Zero(g.dim);
        gd.rep_jac = Mat::Zero(g.dim, g.dim);
        for (const auto& r : g.repulsors) {
            int slot = slot_of(g, r.node);
            const int off = g.offsets[slot];
            Vec d = x.segment(off, 2) - nodes[r.source].b.mu.segment(0, 2);
            double dist = d.norm();
            if (dist >= r.cutoff || dist <= 1e-9) continue;
            double r3 = dist * dist * dist;
            rep.segment(off, 2) += r.k * d / r3;
            gd.rep_jac.block(off, off, 2, 2) += r.k * (Mat::Identity(2, 2) / r3 - 3.0 * d * d.transpose() / (r3 * dist * dist));
        }
        gd.eta = Vec::Zero(g.dim);
        gd.jac = Mat::Zero(g.dim, g.dim);
        for (std::size_t m = 0; m < g.models.size(); ++m) {
            gd.f.push_back(g.models[m].f(x) + rep);
            gd.eta += g.v[static_cast<int>(m)] * gd.f.back();
            gd.jac += g.v[static_cast<int>(m)] * (g.models[m].intention.W - Mat::Identity(g.dim, g.dim));
        }
        gd.jac += g.v.sum() * gd.rep_jac;
        return gd;
    }

    // Prediction of a link's child from its inputs.
    Vec link_prediction(const Link& l) const { return roto_translate(nodes[l.parent].b.mu, nodes[l.intr].b.mu); }

    // One synchronous tick. obs[k] feeds channels[k]. Returns the report; action derivative in `adot`.
    // `order` permutes evaluation of links and groups (contributions are summed in a fixed order).
    TickReport tick(const std::vector<std::optional<Vec>>& obs, double dt, Vec& adot,
                    const std::vector<int>* order = nullptr) {
        require(dt > 0.0, "dt must be positive");
        require(obs.size() == channels.size(), "one observation slot per channel");
        TickReport rep;
        adot = Vec::Zero(n_joints);

        for (auto& g : groups)
            if (g.cause_switch) {
                auto& s = *g.cause_switch;
                if (!s.latched && nodes[s.node].b.mu[s.comp] > s.threshold) s.latched = true;
                g.v = s.latched ? s.after : s.before;
            }

        const std::size_t NL = links.size(), NG = groups.size();
        struct LinkTerm { Vec child, parent, intr; };
        std::vector<LinkTerm> lt(NL);
        std::vector<double> lf(NL, 0.0);
        struct GroupTerm { Vec d0, d1; double f = 0.0; };
        std::vector<GroupTerm> gt(NG);

        auto eval_link = [&](std::size_t i) {
            const Link& l = links[i];
            const Vec& p = nodes[l.parent].b.mu;
            const Vec& in = nodes[l.intr].b.mu;
            Vec eps = nodes[l.child].b.mu - roto_translate(p, in);
            Vec w = l.pi.apply(eps);
            lf[i] = 0.5 * eps.dot(w);
            lt[i].child = -w;
            lt[i].parent = roto_jacobian_parent(p, in).transpose() * w;
            lt[i].intr = roto_jacobian_intrinsic(p, in).transpose() * w;
        };
        auto eval_group = [&](std::size_t gi) {
            Group& g = groups[gi];
            GroupDynamics gd = group_dynamics(g);
            Vec xp = group_state(g, true);
            Vec eps = xp - gd.eta;
            Vec w = g.pi_x.apply(eps);
            gt[gi].f = 0.5 * eps.dot(w);
            gt[gi].d1 = -w;
            gt[gi].d0 = gd.jac.transpose() * w;
            g.last_eta = gd.eta;
            if (g.mode == CauseMode::Hybrid) {
                Vec L(static_cast<int>(g.models.size()));
                for (std::size_t m = 0; m < g.models.size(); ++m)
                    L[static_cast<int>(m)] = log_evidence(g.P, g.pi_x.matrix(), g.models[m].pi.matrix(), xp, gd.f[m], gd.eta);
                g.last_L = L;
            }
        };

        if (order) {
            require(order->size() == NL + NG, "evaluation order must cover links and groups");
            for (int k : *order) {
                if (k < static_cast<int>(NL)) eval_link(static_cast<std::size_t>(k));
                else eval_group(static_cast<std::size_t>(k) - NL);
            }
        } else {
            for (std::size_t i = 0; i < NL; ++i) eval_link(i);
            for (std::size_t i = 0; i < NG; ++i) eval_group(i);
        }

        // Accumulate in canonical order.
        std::vector<Vec> d0(nodes.size()), d1(nodes.size());
        double F = 0.0;
        for (std::size_t i = 0; i < nodes.size(); ++i) {
            const Node& n = nodes[i];
            d0[i] = n.b.mu_prime;
            d1[i] = Vec::Zero(n.dim());
            Vec ee = n.b.mu - n.eta;
            Vec we = n.pi_eta.apply(ee);
            d0[i] -= we;
            F += 0.5 * ee.dot(we);
            if (n.group < 0) {
                Vec wx = n.pi_x.apply(n.b.mu_prime);
                d1[i] -= wx;
                F += 0.5 * n.b.mu_prime.dot(wx);
            }
        }
        for (std::size_t i = 0; i < NL; ++i) {
            const Link& l = links[i];
            d0[l.child] += lt[i].child;
            d0[l.parent] += lt[i].parent;
            d0[l.intr] += lt[i].intr;
            F += lf[i];
        }
        for (std::size_t gi = 0; gi < NG; ++gi) {
            const Group& g = groups[gi];
            for (std::size_t k = 0; k < g.nodes.size(); ++k) {
                const int n = g.nodes[k], d = nodes[n].dim();
                d0[n] += gt[gi].d0.segment(g.offsets[k], d);
                d1[n] += gt[gi].d1.segment(g.offsets[k], d);
            }
            F += gt[gi].f;
        }
        for (std::size_t k = 0; k < channels.size(); ++k) {
            const auto& c = channels[k];
            if (!obs[k]) {
                rep.missing.push_back(c.name);
                continue;
            }
            const Node& n = nodes[c.node];
            const Vec& src = c.order == 0 ? n.b.mu : n.b.mu_prime;
            Vec pred(static_cast<int>(c.comps.size()));
            for (std::size_t j = 0; j < c.comps.size(); ++j) pred[static_cast<int>(j)] = src[c.comps[j]];
            require(obs[k]->size() == pred.size(), "observation dimension mismatch: " + c.name);
            Vec eps = *obs[k] - pred;
            Vec w = c.pi.apply(eps);
            F += 0.5 * eps.dot(w);
            auto& target = c.order == 0 ? d0[c.node] : d1[c.node];
            for (std::size_t j = 0; j < c.comps.size(); ++j) target[c.comps[j]] += w[static_cast<int>(j)];
            if (c.joint >= 0) {
                // velocity control: d g_p / d a = gain * dt * I
                adot[c.joint] += -action_gain * dt * w[0];
                rep.proprio_error += eps.squaredNorm();
            }
        }
        rep.free_energy = F;

        for (std::size_t i = 0; i < nodes.size(); ++i) {
            Node& n = nodes[i];
            for (int c = 0; c < n.dim(); ++c)
                if (n.frozen[c]) d0[i][c] = d1[i][c] = 0.0;
            n.b.mu += dt * d0[i];
            n.b.mu_prime += dt * d1[i];
            if (n.kind == NodeKind::Intrinsic && n.b.mu[1] < 0.0) n.b.mu[1] = 0.0;
            if (!n.b.finite()) throw NumericAbort("non-finite belief at node '" + n.name + "'");
        }
        if (!adot.allFinite()) throw NumericAbort("non-finite action derivative");

        for (std::size_t gi = 0; gi < NG; ++gi) {
            Group& g = groups[gi];
            if (g.mode != CauseMode::Hybrid) continue;
            bool full = accumulate_evidence(g.hybrid, g.last_L, dt);
            if (full && !g.external_bmc) {
                g.v = bmc_update(g.hybrid);
                rep.windows_closed.push_back(static_cast<int>(gi));
            }
        }
        return rep;
    }

private:
    int slot_of(const Group& g, int node) const {
        for (std::size_t k = 0; k < g.nodes.size(); ++k)
            if (g.nodes[k] == node) return static_cast<int>(k);
        throw ConfigError("node '" + nodes[node].name + "' is not in group '" + g.name + "'");
    }
};

// Planar kinematic tree: module k hangs from module parent[k] (-1: the root frame).
struct KinematicTree {
    std::vector<std::string> names;
    std::vector<int> parent;
    std::vector<double> length;

    int size() const { return static_cast<int>(names.size()); }
    int index(const std::string& n) const {
        for (int i = 0; i < size(); ++i)
            if (names[i] == n) return i;
        throw ConfigError("unknown module '" + n + "'");
    }
    // Modules from the root down to `m`, inclusive.
    std::vector<int> ancestors(int m) const {
        std::vector<int> path;
        for (int k = m; k >= 0; k = parent[k]) path.push_back(k);
        std::reverse(path.begin(), path.end());
        return path;
    }
    void validate() const {
        for (int i = 0; i < size(); ++i) {
            if (parent[i] >= i) throw ConfigError("module '" + names[i] + "' must come after its parent");
            if (length[i] < 0.0) throw ConfigError("module '" + names[i] + "' has negative length");
        }
    }
};

inline std::string root_name(const std::string& pathway) { return pathway + "/root"; }
inline std::string intr_name(const std::string& pathway, const std::string& m) { return pathway + "/" + m + "/intr"; }
inline std::string ext_name(const std::string& pathway, const std::string& m) { return pathway + "/" + m + "/ext"; }

struct PathwayOptions {
    bool self = false;
    Vec root_pose = Vec::Zero(3);
    bool root_fixed = true;    // body-centered frame known a priori
    Vec angles;                // initial angle belief per tree module (empty: zero)
    double pi_link = 1.0;
    double pi_x = 1.0;
    bool infer_lengths = false;
};

// Adds a pathway through the modules from the root to `level` (all modules for the self);
// `level` = -1 leaves just the root frame.
inline void attach_entity_pathway(Network& net, const KinematicTree& tree, const std::string& entity, int level,
                                  const PathwayOptions& opt) {
    if (net.find(root_name(entity)) >= 0) throw ConfigError("duplicate pathway '" + entity + "'");
    tree.validate();
    Node root;
    root.name = root_name(entity);
    root.pathway = entity;
    root.kind = NodeKind::Extrinsic;
    root.b = {opt.root_pose, Vec::Zero(3)};
    root.frozen.assign(3, opt.root_fixed);
    root.pi_x = Precision::scalar(3, opt.pi_x);
    net.add_node(root);

    std::vector<int> modules;
    if (opt.self) {
        for (int i = 0; i < tree.size(); ++i) modules.push_back(i);
    } else if (level >= 0) {
        modules = tree.ancestors(level);
    }
    std::vector<Vec> ext_of(tree.size());
    for (int m : modules) {
        const int p = tree.parent[m];
        const std::string parent_node = p < 0 ? root_name(entity) : ext_name(entity, tree.names[p]);
        const int pi = net.node_index(parent_node);
        Node in;
        in.name = intr_name(entity, tree.names[m]);
        in.pathway = entity;
        in.module = tree.names[m];
        in.kind = NodeKind::Intrinsic;
        double a0 = opt.angles.size() > m ? opt.angles[m] : 0.0;
        in.b = {(Vec(2) << a0, tree.length[m]).finished(), Vec::Zero(2)};
        in.frozen = {false, opt.self || !opt.infer_lengths};
        in.pi_x = Precision::scalar(2, opt.pi_x);
        const int ii = net.add_node(in);
        Node ex;
        ex.name = ext_name(entity, tree.names[m]);
        ex.pathway = entity;
        ex.module = tree.names[m];
        ex.kind = NodeKind::Extrinsic;
        ex.b = {roto_translate(net.nodes[pi].b.mu, net.nodes[ii].b.mu), Vec::Zero(3)};
        ex.pi_x = Precision::scalar(3, opt.pi_x);
        const int ei = net.add_node(ex);
        net.links.push_back({pi, ii, ei, Precision::scalar(3, opt.pi_link)});
    }
}

struct VirtualLevelOptions {
    std::string name = "virtual";
    double angle = 0.0;
    double length = 0.0;
    bool infer_length = true;
    double pi_link = 1.0;
    double pi_x = 1.0;
};

// Extra module beyond `after`, present only in a non-self pathway.
inline void attach_virtual_level(Network& net, const std::string& pathway, const std::string& after,
                                 const VirtualLevelOptions& opt, const std::string& self_pathway) {
    if (pathway == self_pathway) throw ConfigError("the self pathway cannot carry a virtual level");
    const int pi = net.node_index(ext_name(pathway, after));
    Node in;
    in.name = intr_name(pathway, opt.name);
    in.pathway = pathway;
    in.module = opt.name;
    in.kind = NodeKind::Intrinsic;
    in.virtual_level = true;
    in.b = {(Vec(2) << opt.angle, opt.length).finished(), Vec::Zero(2)};
    in.frozen = {false, !opt.infer_length};
    in.pi_x = Precision::scalar(2, opt.pi_x);
    const int ii = net.add_node(in);
    Node ex;
    ex.name = ext_name(pathway, opt.name);
    ex.pathway = pathway;
    ex.module = opt.name;
    ex.kind = NodeKind::Extrinsic;
    ex.virtual_level = true;
    ex.b = {roto_translate(net.nodes[pi].b.mu, net.nodes[ii].b.mu), Vec::Zero(3)};
    ex.pi_x = Precision::scalar(3, opt.pi_x);
    const int ei = net.add_node(ex);
    net.links.push_back({pi, ii, ei, Precision::scalar(3, opt.pi_link)});
}

// Every node has at most one incoming link as child and links follow creation order.
inline bool network_is_tree(const Network& net) {
    std::vector<int> in(net.nodes.size(), 0);
    for (const auto& l : net.links) {
        if (l.parent >= l.child || l.intr >= l.child) return false;
        if (++in[l.child] > 1) return false;
    }
    return true;
}

} // namespace dynplan
