#pragma once

#include <cmath>
#include <span>
#include <vector>

#include "cem/errors.hpp"
#include "cem/geometry.hpp"
#include "cem/tape.hpp"
#include "cem/topology.hpp"

namespace cem {

// Immutable inputs of one form-finding run: deviation-edge forces, trail-edge
// lengths, origin positions and nodal loads. Entries are indexed like the
// diagram's edges/nodes; slots that do not apply to an edge kind are unused.
template <typename Real>
struct DesignParameters {
    std::vector<Real> deviation_forces;     // by edge index
    std::vector<Real> trail_lengths;        // by edge index
    std::vector<Vec3<Real>> origin_positions;  // by node index
    std::vector<Vec3<Real>> loads;             // by node index
};

inline DesignParameters<double> default_parameters(const TopologyDiagram& diagram) {
    DesignParameters<double> x;
    x.deviation_forces.resize(static_cast<std::size_t>(diagram.edge_count()), 0.0);
    x.trail_lengths.resize(static_cast<std::size_t>(diagram.edge_count()), 0.0);
    for (int e = 0; e < diagram.edge_count(); ++e) {
        const Edge& edge = diagram.edge(e);
        if (edge.kind == EdgeKind::Trail)
            x.trail_lengths[static_cast<std::size_t>(e)] = edge.length;
        else
            x.deviation_forces[static_cast<std::size_t>(e)] = edge.force;
    }
    for (int i = 0; i < diagram.node_count(); ++i) {
        x.origin_positions.push_back(diagram.position(i));
        x.loads.push_back(diagram.load(i));
    }
    return x;
}

template <typename Real>
DesignParameters<Real> lift_parameters(const DesignParameters<double>& x) {
    DesignParameters<Real> out;
    for (double v : x.deviation_forces) out.deviation_forces.push_back(Real(v));
    for (double v : x.trail_lengths) out.trail_lengths.push_back(Real(v));
    for (const Vec3d& p : x.origin_positions)
        out.origin_positions.push_back({Real(p.x), Real(p.y), Real(p.z)});
    for (const Vec3d& q : x.loads) out.loads.push_back({Real(q.x), Real(q.y), Real(q.z)});
    return out;
}

struct SolverSettings {
    int t_max = 100;
    double eta_min = 1e-6;
    bool normalize_eta = false;
    // Hook for form-dependent load cases: forces the iterative loop even when
    // no indirect deviation edges exist. No load model is attached yet.
    bool form_dependent_loads = false;
};

template <typename Real>
struct EquilibriumState {
    std::vector<Vec3<Real>> positions;          // by node index
    std::vector<Real> trail_forces;             // by edge index, trail edges only
    std::vector<Real> deviation_lengths;        // by edge index, deviation edges only
    std::vector<Vec3<Real>> reactions;          // aligned with diagram.supports()
    int iterations_used = 0;
    double final_eta = 0.0;
};

inline constexpr double kDegenerateEdgeTol = 1e-12;

// Net force at a node; the incoming trail residual is zero at the first
// sequence.
template <typename Real>
Vec3<Real> node_residual(const Vec3<Real>& t_prev, const Vec3<Real>& d, const Vec3<Real>& q, int k) {
    if (k == 1) return -d - q;
    return t_prev - d - q;
}

// Resultant of the deviation forces at a node over a single position set, for
// states where all neighbor positions are known. The mask selects the active
// deviation edges.
template <typename Real>
Vec3<Real> deviation_resultant(const TopologyDiagram& diagram, int node_index,
                               std::span<const Vec3<Real>> positions,
                               std::span<const Real> deviation_forces,
                               const std::vector<bool>* active_edges = nullptr) {
    Vec3<Real> d{Real(0), Real(0), Real(0)};
    for (const Incident& inc : diagram.incident(node_index)) {
        const Edge& edge = diagram.edge(inc.edge);
        if (edge.kind != EdgeKind::Deviation) continue;
        if (active_edges != nullptr && !(*active_edges)[static_cast<std::size_t>(inc.edge)]) continue;
        const Vec3<Real> diff = positions[static_cast<std::size_t>(node_index)] -
                                positions[static_cast<std::size_t>(inc.other)];
        const Real len = norm(diff);
        if (primal(len) < kDegenerateEdgeTol)
            throw SolverError("degenerate deviation edge (" + std::to_string(diagram.id_of(edge.a)) +
                              ", " + std::to_string(diagram.id_of(edge.b)) + ")");
        const Real scale = Real(static_cast<double>(edge.state)) *
                           deviation_forces[static_cast<std::size_t>(inc.edge)] / len;
        d += diff * scale;
    }
    return d;
}

// Place the next trail node along the residual direction.
template <typename Real>
Vec3<Real> next_position(const Vec3<Real>& p_i, int state, const Real& length, const Vec3<Real>& t) {
    const Real n = norm(t);
    if (primal(n) < kDegenerateEdgeTol)
        throw SolverError("indeterminate trail direction: zero residual");
    Vec3<Real> out;
    for (int a = 0; a < 3; ++a) {
        // Constant direction components fold with the state before touching
        // the (possibly traced) length.
        const Real coeff = (t[a] / n) * Real(static_cast<double>(state));
        out[a] = p_i[a] + coeff * length;
    }
    return out;
}

// Cumulative nodal displacement between two sweeps.
template <typename Real>
double equilibrium_distance(std::span<const Vec3<Real>> current, std::span<const Vec3<Real>> previous,
                            bool normalize) {
    double eta = 0.0;
    for (std::size_t i = 0; i < current.size(); ++i) {
        const double dx = primal(current[i].x) - primal(previous[i].x);
        const double dy = primal(current[i].y) - primal(previous[i].y);
        const double dz = primal(current[i].z) - primal(previous[i].z);
        eta += std::sqrt(dx * dx + dy * dy + dz * dz);
    }
    if (normalize && !current.empty()) eta /= static_cast<double>(current.size());
    return eta;
}

// Sequential and iterative form-finding sweep. Nodes are processed
// one sequence at a time; indirect deviation edges contribute nothing during
// the first sweep and use previous-sweep positions afterwards. Diagrams with
// only direct deviation edges and constant loads finish in one sweep.
template <typename Real>
EquilibriumState<Real> form_find(const TopologyDiagram& diagram, const TrailSet& trails,
                                 const SequenceAssignment& sequences,
                                 const DesignParameters<Real>& x, const SolverSettings& settings) {
    if (settings.t_max < 1) throw SolverError("t_max must be at least 1");
    if (!(settings.eta_min > 0.0)) throw SolverError("eta_min must be positive");

    const int n = diagram.node_count();
    const DeviationClasses classes = classify_deviation_edges(diagram, sequences);
    const bool iterative = classes.indirect_count > 0 || settings.form_dependent_loads;

    // Trail node indices (origin first) and the edge indices between them.
    std::vector<std::vector<int>> trail_nodes(trails.size());
    std::vector<std::vector<int>> trail_edges(trails.size());
    for (std::size_t t = 0; t < trails.size(); ++t) {
        for (int id : trails[t].node_ids) trail_nodes[t].push_back(diagram.index_of(id));
        for (std::size_t i = 0; i + 1 < trails[t].node_ids.size(); ++i) {
            const int e = diagram.find_edge(trails[t].node_ids[i], trails[t].node_ids[i + 1]);
            if (e < 0 || diagram.edge(e).kind != EdgeKind::Trail)
                throw SolverError("trail references a missing trail edge");
            trail_edges[t].push_back(e);
        }
    }

    EquilibriumState<Real> state;
    state.positions.assign(static_cast<std::size_t>(n), Vec3<Real>{Real(0), Real(0), Real(0)});
    state.trail_forces.assign(static_cast<std::size_t>(diagram.edge_count()), Real(0));
    state.deviation_lengths.assign(static_cast<std::size_t>(diagram.edge_count()), Real(0));
    state.reactions.assign(diagram.supports().size(), Vec3<Real>{Real(0), Real(0), Real(0)});

    std::vector<Vec3<Real>> previous = state.positions;
    std::vector<Vec3<Real>> residual(trails.size());

    const int sweep_cap = iterative ? settings.t_max : 1;
    int sweep = 0;
    double eta = 0.0;
    for (sweep = 1; sweep <= sweep_cap; ++sweep) {
        for (std::size_t t = 0; t < trails.size(); ++t) {
            const int origin = trail_nodes[t].front();
            state.positions[static_cast<std::size_t>(origin)] =
                x.origin_positions[static_cast<std::size_t>(origin)];
        }

        for (int k = 1; k <= sequences.k_max; ++k) {
            for (std::size_t t = 0; t < trails.size(); ++t) {
                const std::vector<int>& nodes = trail_nodes[t];
                if (k > static_cast<int>(nodes.size())) continue;
                const int i = nodes[static_cast<std::size_t>(k - 1)];

                Vec3<Real> dev{Real(0), Real(0), Real(0)};
                for (const Incident& inc : diagram.incident(i)) {
                    const Edge& edge = diagram.edge(inc.edge);
                    if (edge.kind != EdgeKind::Deviation) continue;
                    const bool indirect = classes.is_indirect[static_cast<std::size_t>(inc.edge)];
                    if (indirect && sweep == 1) continue;
                    const Vec3<Real>& neighbor =
                        indirect ? previous[static_cast<std::size_t>(inc.other)]
                                 : state.positions[static_cast<std::size_t>(inc.other)];
                    const Vec3<Real> diff = state.positions[static_cast<std::size_t>(i)] - neighbor;
                    const Real len = norm(diff);
                    if (primal(len) < kDegenerateEdgeTol)
                        throw SolverError("degenerate deviation edge (" +
                                          std::to_string(diagram.id_of(edge.a)) + ", " +
                                          std::to_string(diagram.id_of(edge.b)) + ")");
                    const Real scale = Real(static_cast<double>(edge.state)) *
                                       x.deviation_forces[static_cast<std::size_t>(inc.edge)] / len;
                    dev += diff * scale;
                }

                const Vec3<Real> t_i =
                    node_residual(residual[t], dev, x.loads[static_cast<std::size_t>(i)], k);

                if (k == static_cast<int>(nodes.size())) {
                    // Support node: the arriving residual closes the nodal
                    // balance as the reaction.
                    for (std::size_t s = 0; s < diagram.supports().size(); ++s)
                        if (diagram.supports()[s] == i) state.reactions[s] = t_i;
                    continue;
                }

                if (primal(squared_norm(t_i)) < kDegenerateEdgeTol * kDegenerateEdgeTol)
                    throw SolverError("indeterminate trail direction at node " +
                                      std::to_string(diagram.id_of(i)));
                const int j = nodes[static_cast<std::size_t>(k)];
                const int e = trail_edges[t][static_cast<std::size_t>(k - 1)];
                const Edge& trail_edge = diagram.edge(e);
                state.trail_forces[static_cast<std::size_t>(e)] = norm(t_i);
                state.positions[static_cast<std::size_t>(j)] = next_position(
                    state.positions[static_cast<std::size_t>(i)], trail_edge.state,
                    x.trail_lengths[static_cast<std::size_t>(e)], t_i);
                residual[t] = t_i;
            }
        }

        if (!iterative) {
            eta = 0.0;
            break;
        }
        eta = equilibrium_distance(std::span<const Vec3<Real>>(state.positions),
                                   std::span<const Vec3<Real>>(previous), settings.normalize_eta);
        previous = state.positions;
        if (sweep > 1 && eta <= settings.eta_min) break;
    }

    state.iterations_used = std::min(sweep, sweep_cap);
    state.final_eta = eta;

    for (int e = 0; e < diagram.edge_count(); ++e) {
        const Edge& edge = diagram.edge(e);
        if (edge.kind != EdgeKind::Deviation) continue;
        // Final length of the deviation edge between its own endpoints.
        state.deviation_lengths[static_cast<std::size_t>(e)] =
            norm(state.positions[static_cast<std::size_t>(edge.b)] -
                 state.positions[static_cast<std::size_t>(edge.a)]);
    }
    return state;
}

}  // namespace cem
