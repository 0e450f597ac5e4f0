#pragma once

// Shared fixtures and independent checkers used by the unit and acceptance
// tests. Nothing here reuses solver internals: the balance assembler works
// from geometry and prescribed data only.

#include <algorithm>
#include <cmath>
#include <optional>
#include <random>
#include <set>
#include <utility>
#include <vector>

#include "cem/bench.hpp"
#include "cem/constraints.hpp"
#include "cem/equilibrium.hpp"
#include "cem/model.hpp"
#include "cem/optimize.hpp"
#include "cem/params.hpp"
#include "cem/topology.hpp"

namespace test_support {

using namespace cem;

// Three-node compression chain: unit horizontal load at the free end, two
// unit-length trail edges, support at node 3.
inline TopologyModel chain_model() {
    TopologyModel m;
    m.nodes.push_back({1, {0.0, 0.0, 0.0}, {1.0, 0.0, 0.0}});
    m.nodes.push_back({2, {}, {}});
    m.nodes.push_back({3, {}, {}});
    EdgeSpec e12;
    e12.i = 1;
    e12.j = 2;
    e12.kind = EdgeKind::Trail;
    e12.state = -1;
    e12.length = 1.0;
    m.edges.push_back(e12);
    EdgeSpec e23 = e12;
    e23.i = 2;
    e23.j = 3;
    m.edges.push_back(e23);
    m.supports = {3};
    return m;
}

struct Compiled {
    TopologyDiagram diagram;
    TrailSet trails;
    SequenceAssignment sequences;
    DesignParameters<double> x;
};

inline Compiled compile(const TopologyModel& model, bool auto_auxiliary) {
    const TopologyDiagram base = build_topology(model);
    TrailAssignment assignment = assign_trails(base, auto_auxiliary);
    Compiled c;
    c.diagram = std::move(assignment.diagram);
    c.trails = std::move(assignment.trails);
    c.sequences = compute_sequences(c.diagram, c.trails);
    c.x = default_parameters(c.diagram);
    return c;
}

// The chain as a full optimization problem: both trail lengths free, target
// position [3,0,0] on the free end of the load path.
inline Problem chain_problem() {
    Compiled c = compile(chain_model(), false);
    Problem p;
    p.diagram = std::move(c.diagram);
    p.trails = std::move(c.trails);
    p.sequences = std::move(c.sequences);
    p.x_template = std::move(c.x);
    for (auto [i, j] : {std::pair{1, 2}, std::pair{2, 3}}) {
        ParamSlot slot;
        slot.kind = ParamKind::TrailLength;
        slot.edge_i = i;
        slot.edge_j = j;
        slot.lower = 1e-3;
        p.map.slots.push_back(slot);
    }
    ConstraintSpec target;
    target.kind = ConstraintKind::NodePosition;
    target.node = 3;
    target.target_vec = {3.0, 0.0, 0.0};
    p.objective.constraints.push_back(target);
    return p;
}

struct BalanceCheck {
    double max_residual = 0.0;  // worst nodal force-balance defect
    double force_scale = 0.0;   // largest force magnitude in the state
};

// Independent nodal balance assembler. For every node it sums the incoming
// trail force, the deviation resultants, the load, and the outgoing trail
// force (or reaction at supports), all recomputed from final positions and
// prescribed forces. A correct equilibrium state closes every balance.
inline BalanceCheck check_balance(const TopologyDiagram& diagram, const TrailSet& trails,
                                  const DesignParameters<double>& x,
                                  const EquilibriumState<double>& u) {
    BalanceCheck out;
    auto unit = [&](int from, int to) {
        const Vec3d diff = u.positions[static_cast<std::size_t>(to)] -
                           u.positions[static_cast<std::size_t>(from)];
        return diff / norm(diff);
    };

    for (const Vec3d& q : x.loads) out.force_scale = std::max(out.force_scale, norm(q));
    for (int e = 0; e < diagram.edge_count(); ++e) {
        const Edge& edge = diagram.edge(e);
        const double f = edge.kind == EdgeKind::Trail
                             ? u.trail_forces[static_cast<std::size_t>(e)]
                             : x.deviation_forces[static_cast<std::size_t>(e)];
        out.force_scale = std::max(out.force_scale, std::abs(f));
    }
    for (const Vec3d& r : u.reactions) out.force_scale = std::max(out.force_scale, norm(r));

    for (const Trail& trail : trails) {
        for (std::size_t pos = 0; pos < trail.node_ids.size(); ++pos) {
            const int node = diagram.index_of(trail.node_ids[pos]);
            Vec3d residual{0.0, 0.0, 0.0};

            if (pos > 0) {
                const int prev = diagram.index_of(trail.node_ids[pos - 1]);
                const int e = diagram.find_edge(trail.node_ids[pos - 1], trail.node_ids[pos]);
                residual += unit(prev, node) * (static_cast<double>(diagram.edge(e).state) *
                                                u.trail_forces[static_cast<std::size_t>(e)]);
            }

            for (const Incident& inc : diagram.incident(node)) {
                const Edge& edge = diagram.edge(inc.edge);
                if (edge.kind != EdgeKind::Deviation) continue;
                residual -= unit(inc.other, node) *
                            (static_cast<double>(edge.state) *
                             x.deviation_forces[static_cast<std::size_t>(inc.edge)]);
            }

            residual -= x.loads[static_cast<std::size_t>(node)];

            if (pos + 1 < trail.node_ids.size()) {
                const int next = diagram.index_of(trail.node_ids[pos + 1]);
                const int e = diagram.find_edge(trail.node_ids[pos], trail.node_ids[pos + 1]);
                residual -= unit(node, next) * (static_cast<double>(diagram.edge(e).state) *
                                                u.trail_forces[static_cast<std::size_t>(e)]);
            } else {
                int slot = -1;
                for (std::size_t s = 0; s < diagram.supports().size(); ++s)
                    if (diagram.supports()[s] == node) slot = static_cast<int>(s);
                residual -= u.reactions[static_cast<std::size_t>(slot)];
            }

            out.max_residual = std::max(out.max_residual, norm(residual));
        }
    }
    return out;
}

// Random desk-scale structure: 1-3 trails of 2-4 nodes, a handful of direct
// and indirect deviation edges, random loads, 1-10 constraints and a random
// subset of the design parameters exposed for optimization. Structures whose
// equilibrium is close to degenerate are rejected by the caller.
inline std::optional<Problem> try_random_problem(std::mt19937& rng) {
    std::uniform_real_distribution<double> u01(0.0, 1.0);
    auto uniform = [&](double lo, double hi) { return lo + (hi - lo) * u01(rng); };
    auto pick = [&](int lo, int hi) {
        return lo + static_cast<int>(u01(rng) * (hi - lo + 1)) % (hi - lo + 1);
    };

    TopologyModel model;
    std::vector<std::vector<int>> trail_ids;
    const int n_trails = pick(1, 3);
    int next_id = 1;
    for (int t = 0; t < n_trails; ++t) {
        const int len = pick(2, 4);
        if (next_id - 1 + len > 12) break;
        std::vector<int> ids;
        for (int i = 0; i < len; ++i) ids.push_back(next_id++);
        trail_ids.push_back(ids);
    }
    if (trail_ids.empty()) return std::nullopt;

    for (const auto& ids : trail_ids) {
        for (int id : ids) {
            NodeSpec node;
            node.id = id;
            node.position = {uniform(-1.0, 1.0), uniform(-1.0, 1.0), uniform(-1.0, 1.0)};
            node.load = {uniform(-1.0, 1.0), uniform(-1.0, 1.0), uniform(-1.0, 1.0)};
            model.nodes.push_back(node);
        }
        for (std::size_t i = 0; i + 1 < ids.size(); ++i) {
            EdgeSpec e;
            e.i = ids[i];
            e.j = ids[i + 1];
            e.kind = EdgeKind::Trail;
            e.state = u01(rng) < 0.5 ? -1 : 1;
            e.length = uniform(0.8, 1.6);
            model.edges.push_back(e);
        }
        model.supports.push_back(ids.back());
    }

    std::set<std::pair<int, int>> taken;
    for (const EdgeSpec& e : model.edges)
        taken.insert({std::min(e.i, e.j), std::max(e.i, e.j)});
    const int n_nodes = next_id - 1;
    const int n_dev = pick(1, 4);
    std::vector<std::pair<int, int>> dev_edges;
    for (int d = 0; d < n_dev; ++d) {
        for (int attempt = 0; attempt < 20; ++attempt) {
            const int a = pick(1, n_nodes);
            const int b = pick(1, n_nodes);
            if (a == b) continue;
            const auto key = std::pair{std::min(a, b), std::max(a, b)};
            if (!taken.insert(key).second) continue;
            EdgeSpec e;
            e.i = key.first;
            e.j = key.second;
            e.kind = EdgeKind::Deviation;
            e.state = u01(rng) < 0.5 ? -1 : 1;
            e.force = uniform(0.1, 0.6);
            model.edges.push_back(e);
            dev_edges.push_back(key);
            break;
        }
    }
    if (dev_edges.empty()) return std::nullopt;

    Problem p;
    try {
        Compiled c = compile(model, false);
        p.diagram = std::move(c.diagram);
        p.trails = std::move(c.trails);
        p.sequences = std::move(c.sequences);
        p.x_template = std::move(c.x);
    } catch (const std::exception&) {
        return std::nullopt;
    }
    p.solver.t_max = 200;
    p.solver.eta_min = 1e-13;

    auto unit_vec = [&]() {
        Vec3d v{uniform(-1.0, 1.0), uniform(-1.0, 1.0), uniform(-1.0, 1.0)};
        const double n = norm(v);
        if (n < 0.2) return Vec3d{1.0, 0.0, 0.0};
        return v / n;
    };

    const int n_constraints = pick(1, 10);
    std::vector<std::pair<int, int>> trail_edges;
    for (const auto& ids : trail_ids)
        for (std::size_t i = 0; i + 1 < ids.size(); ++i) trail_edges.push_back({ids[i], ids[i + 1]});
    for (int i = 0; i < n_constraints; ++i) {
        ConstraintSpec c;
        switch (pick(0, 5)) {
            case 0:
                c.kind = ConstraintKind::NodePosition;
                c.node = pick(1, n_nodes);
                c.target_vec = {uniform(-2.0, 2.0), uniform(-2.0, 2.0), uniform(-2.0, 2.0)};
                break;
            case 1: {
                c.kind = ConstraintKind::TrailForce;
                const auto [a, b] = trail_edges[static_cast<std::size_t>(pick(
                    0, static_cast<int>(trail_edges.size()) - 1))];
                c.edge_i = a;
                c.edge_j = b;
                c.target_scalar = uniform(0.0, 2.0);
                break;
            }
            case 2: {
                c.kind = ConstraintKind::DeviationLength;
                const auto [a, b] = dev_edges[static_cast<std::size_t>(pick(
                    0, static_cast<int>(dev_edges.size()) - 1))];
                c.edge_i = a;
                c.edge_j = b;
                c.target_scalar = uniform(0.5, 2.0);
                break;
            }
            case 3:
                c.kind = ConstraintKind::NodeOnPlane;
                c.node = pick(1, n_nodes);
                c.point = {uniform(-1.0, 1.0), uniform(-1.0, 1.0), uniform(-1.0, 1.0)};
                c.direction = unit_vec();
                break;
            case 4:
                c.kind = ConstraintKind::NodeOnLine;
                c.node = pick(1, n_nodes);
                c.point = {uniform(-1.0, 1.0), uniform(-1.0, 1.0), uniform(-1.0, 1.0)};
                c.direction = unit_vec();
                break;
            default:
                c.kind = ConstraintKind::ReactionForce;
                c.node = model.supports[static_cast<std::size_t>(pick(
                    0, static_cast<int>(model.supports.size()) - 1))];
                c.target_vec = {uniform(-1.0, 1.0), uniform(-1.0, 1.0), uniform(-1.0, 1.0)};
                break;
        }
        p.objective.constraints.push_back(c);
    }

    for (const auto& [a, b] : dev_edges) {
        ParamSlot slot;
        slot.kind = ParamKind::DeviationForce;
        slot.edge_i = a;
        slot.edge_j = b;
        p.map.slots.push_back(slot);
    }
    for (const auto& [a, b] : trail_edges) {
        if (u01(rng) >= 0.5) continue;
        ParamSlot slot;
        slot.kind = ParamKind::TrailLength;
        slot.edge_i = a;
        slot.edge_j = b;
        p.map.slots.push_back(slot);
    }
    for (const auto& ids : trail_ids) {
        if (u01(rng) >= 0.3) continue;
        ParamSlot slot;
        slot.kind = ParamKind::OriginCoordinate;
        slot.node = ids.front();
        slot.axis = pick(0, 2);
        p.map.slots.push_back(slot);
    }

    // Reject structures whose equilibrium is degenerate or nearly so: they
    // sit next to the non-smooth zero-residual boundary where derivative
    // comparisons are meaningless.
    try {
        const EquilibriumState<double> state =
            form_find(p.diagram, p.trails, p.sequences, p.x_template, p.solver);
        if (state.final_eta > p.solver.eta_min && state.iterations_used >= p.solver.t_max)
            return std::nullopt;
        for (int e = 0; e < p.diagram.edge_count(); ++e) {
            const Edge& edge = p.diagram.edge(e);
            if (edge.kind == EdgeKind::Trail &&
                state.trail_forces[static_cast<std::size_t>(e)] < 0.05)
                return std::nullopt;
            if (edge.kind == EdgeKind::Deviation &&
                state.deviation_lengths[static_cast<std::size_t>(e)] < 0.05)
                return std::nullopt;
        }
    } catch (const std::exception&) {
        return std::nullopt;
    }
    return p;
}

inline Problem random_problem(std::mt19937& rng) {
    for (;;) {
        std::optional<Problem> p = try_random_problem(rng);
        if (p) return std::move(*p);
    }
}

}  // namespace test_support
