#pragma once
// Agents close the loop: they read world sources, update beliefs and integrate action.
// Two shapes: a single (possibly hybrid) continuous unit, and a network of IE modules
// optionally driven by a discrete planner.

#include "discrete.hpp"
#include "network.hpp"
#include "world.hpp"

#include <memory>

namespace dynplan {

struct DiscreteLogRow {
    long tick = 0;
    PlannerStep step;
};

class Agent {
public:
    virtual ~Agent() = default;

    std::string name;
    int arm = -1;  // actuated arm, -1: perception only
    Vec velocity;  // integrated action, one entry per joint
    double last_free_energy = 0.0;
    std::vector<DiscreteLogRow> discrete_log;

    virtual void tick(const World& w, double dt) = 0;
    // 0th (or 1st) order belief of a named block or node.
    virtual Vec belief(const std::string& ref, bool prime) const = 0;
    // Current causes of a named group ("" for the unit's own causes).
    virtual Vec cause(const std::string& group) const = 0;

    const PlannerStep* last_plan() const { return discrete_log.empty() ? nullptr : &discrete_log.back().step; }

protected:
    void integrate_action(const Vec& adot, double dt) {
        if (arm < 0 || adot.size() == 0) return;
        require(adot.size() == velocity.size(), "action size does not match the actuated arm");
        velocity += dt * adot;
    }
};

// Latched switch on a belief component.
struct GainSwitch {
    int comp = 0;
    double threshold = 0.5;
    Vec before;
    Vec after;
    bool latched = false;
};

class UnitAgent : public Agent {
public:
    HybridUnit h;  // h.base is the unit; hybrid machinery is used only when `hybrid` is set
    bool hybrid = false;
    EntityFactorization blocks;
    std::vector<Source> sources;  // one per channel
    std::optional<GainSwitch> gain_switch;

    void tick(const World& w, double dt) override {
        Observations obs;
        for (const auto& s : sources) obs.push_back(w.observe(s));
        if (gain_switch) {
            auto& g = *gain_switch;
            if (!g.latched && h.base.x.mu[g.comp] > g.threshold) g.latched = true;
            h.base.v = g.latched ? g.after : g.before;
        }
        StepOutput out = hybrid ? h.tick(obs, dt) : step(h.base, obs, dt);
        last_free_energy = out.report.free_energy;
        integrate_action(out.action_derivative, dt);
    }

    Vec belief(const std::string& ref, bool prime) const override {
        const Vec& x = prime ? h.base.x.mu_prime : h.base.x.mu;
        int b = blocks.index(ref);
        return x.segment(blocks.offset(b), blocks.dim(b));
    }

    Vec cause(const std::string&) const override { return h.base.v; }
};

// Discrete planner over hybrid groups of a network. Cause modalities read a group's accumulated
// evidence; sensory modalities read a binary world source as [1 - p, p].
struct DiscreteCoupling {
    std::unique_ptr<Planner> planner;
    std::vector<int> group;       // per modality: group index or -1
    std::vector<Source> source;   // per modality: used when group < 0
    int window = 30;
    int count = 0;
};

class NetworkAgent : public Agent {
public:
    Network net;
    std::vector<Source> sources;  // one per network channel
    std::optional<DiscreteCoupling> disc;
    long ticks = 0;

    // Hands the planner's initial cause priors to the hybrid groups.
    void start() {
        if (!disc) return;
        const auto& m = disc->planner->model();
        for (std::size_t k = 0; k < m.modalities.size(); ++k) {
            if (disc->group[k] < 0) continue;
            Group& g = net.groups[disc->group[k]];
            Vec prior = top_down_causes(m.modalities[k].A, disc->planner->prior(), Vec::Zero(m.modalities[k].A.rows()));
            g.hybrid.H_v = prior;
            g.v = prior;
        }
    }

    void tick(const World& w, double dt) override {
        std::vector<std::optional<Vec>> obs;
        for (const auto& s : sources) obs.push_back(w.observe(s));
        Vec adot;
        TickReport rep = net.tick(obs, dt, adot);
        last_free_energy = rep.free_energy;
        integrate_action(adot, dt);
        ++ticks;
        if (disc && ++disc->count >= disc->window) barrier(w);
    }

    Vec belief(const std::string& ref, bool prime) const override {
        const auto& b = net.nodes[net.node_index(ref)].b;
        return prime ? b.mu_prime : b.mu;
    }

    Vec cause(const std::string& group) const override { return net.groups[net.group_index(group)].v; }

private:
    void barrier(const World& w) {
        disc->count = 0;
        const auto& m = disc->planner->model();
        std::vector<Vec> inputs;
        for (std::size_t k = 0; k < m.modalities.size(); ++k) {
            if (disc->group[k] >= 0) {
                inputs.push_back(net.groups[disc->group[k]].hybrid.l);
            } else {
                double p = std::clamp(w.observe(disc->source[k])[0], 0.0, 1.0);
                inputs.push_back((Vec(2) << 1.0 - p, p).finished());
            }
        }
        PlannerStep st = disc->planner->step(inputs);
        for (std::size_t k = 0; k < m.modalities.size(); ++k) {
            if (disc->group[k] < 0) continue;
            Group& g = net.groups[disc->group[k]];
            g.hybrid.H_v = st.emitted[k];
            g.hybrid.l.setZero();
            g.hybrid.count = 0;
            g.v = st.emitted[k];
        }
        discrete_log.push_back({ticks, std::move(st)});
    }
};

} // namespace dynplan
