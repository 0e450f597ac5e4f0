#pragma once

#include <array>
#include <span>
#include <string>
#include <vector>

#include "cem/equilibrium.hpp"
#include "cem/errors.hpp"
#include "cem/params.hpp"
#include "cem/topology.hpp"

namespace cem {

enum class ConstraintKind {
    NodePosition,
    EdgeDirection,
    DeviationLength,
    TrailForce,
    LoadPath,
    ReactionForce,
    NodeOnLine,
    NodeOnPlane,
};

// Weighted residual target. Which target fields apply depends on the kind:
// vector targets for positions/directions/reactions, scalar targets for
// lengths/forces/load paths, point+direction for lines, point+normal for
// planes.
struct ConstraintSpec {
    ConstraintKind kind = ConstraintKind::NodePosition;
    int node = 0;
    int edge_i = 0;
    int edge_j = 0;
    Vec3d target_vec{};
    double target_scalar = 0.0;
    Vec3d point{};
    Vec3d direction{};  // unit line direction or unit plane normal
    double weight = 1.0;
};

struct ObjectiveSpec {
    std::vector<ConstraintSpec> constraints;
    bool auxiliary_targets = true;  // implied force->0 terms per auxiliary trail
    double epsilon = 1e-6;
};

// Expands the implied auxiliary-trail penalty terms (zero-force targets on
// every auxiliary trail edge, unit weight) into the constraint list.
inline std::vector<ConstraintSpec> expanded_constraints(const ObjectiveSpec& spec,
                                                        const TrailSet& trails) {
    std::vector<ConstraintSpec> out = spec.constraints;
    if (spec.auxiliary_targets) {
        for (const Trail& trail : trails) {
            if (!trail.is_auxiliary) continue;
            ConstraintSpec c;
            c.kind = ConstraintKind::TrailForce;
            c.edge_i = trail.node_ids.front();
            c.edge_j = trail.node_ids.back();
            c.target_scalar = 0.0;
            c.weight = 1.0;
            out.push_back(c);
        }
    }
    return out;
}

template <typename Real>
struct Residual {
    std::array<Real, 3> v{Real(0), Real(0), Real(0)};
    int n = 0;
};

namespace detail {

inline int constraint_edge(const ConstraintSpec& c, const TopologyDiagram& diagram, EdgeKind want,
                           const char* what) {
    const int e = diagram.find_edge(c.edge_i, c.edge_j);
    if (e < 0)
        throw ModelError(std::string(what) + " constraint references unknown edge (" +
                         std::to_string(c.edge_i) + ", " + std::to_string(c.edge_j) + ")");
    if (diagram.edge(e).kind != want)
        throw ModelError(std::string(what) + " constraint targets the wrong edge label on (" +
                         std::to_string(c.edge_i) + ", " + std::to_string(c.edge_j) + ")");
    return e;
}

}  // namespace detail

template <typename Real>
Residual<Real> constraint_residual(const ConstraintSpec& c, const EquilibriumState<Real>& u,
                                   const TopologyDiagram& diagram, const DesignParameters<Real>& x) {
    Residual<Real> r;
    switch (c.kind) {
        case ConstraintKind::NodePosition: {
            const Vec3<Real>& p = u.positions[static_cast<std::size_t>(diagram.index_of(c.node))];
            r.v = {p.x - Real(c.target_vec.x), p.y - Real(c.target_vec.y), p.z - Real(c.target_vec.z)};
            r.n = 3;
            break;
        }
        case ConstraintKind::EdgeDirection: {
            if (diagram.find_edge(c.edge_i, c.edge_j) < 0)
                throw ModelError("edge_direction constraint references unknown edge (" +
                                 std::to_string(c.edge_i) + ", " + std::to_string(c.edge_j) + ")");
            const Vec3<Real>& pi = u.positions[static_cast<std::size_t>(diagram.index_of(c.edge_i))];
            const Vec3<Real>& pj = u.positions[static_cast<std::size_t>(diagram.index_of(c.edge_j))];
            const Vec3<Real> diff = pj - pi;
            const Real len = norm(diff);
            if (primal(len) < kDegenerateEdgeTol)
                throw SolverError("edge_direction constraint on a degenerate edge (" +
                                  std::to_string(c.edge_i) + ", " + std::to_string(c.edge_j) + ")");
            r.v = {diff.x / len - Real(c.target_vec.x), diff.y / len - Real(c.target_vec.y),
                   diff.z / len - Real(c.target_vec.z)};
            r.n = 3;
            break;
        }
        case ConstraintKind::DeviationLength: {
            const int e = detail::constraint_edge(c, diagram, EdgeKind::Deviation, "deviation_length");
            r.v[0] = u.deviation_lengths[static_cast<std::size_t>(e)] - Real(c.target_scalar);
            r.n = 1;
            break;
        }
        case ConstraintKind::TrailForce: {
            const int e = detail::constraint_edge(c, diagram, EdgeKind::Trail, "trail_force");
            r.v[0] = u.trail_forces[static_cast<std::size_t>(e)] - Real(c.target_scalar);
            r.n = 1;
            break;
        }
        case ConstraintKind::LoadPath: {
            const int e = diagram.find_edge(c.edge_i, c.edge_j);
            if (e < 0)
                throw ModelError("load_path constraint references unknown edge (" +
                                 std::to_string(c.edge_i) + ", " + std::to_string(c.edge_j) + ")");
            // Load path: absolute force times member length.
            const Real phi =
                diagram.edge(e).kind == EdgeKind::Trail
                    ? u.trail_forces[static_cast<std::size_t>(e)] *
                          x.trail_lengths[static_cast<std::size_t>(e)]
                    : x.deviation_forces[static_cast<std::size_t>(e)] *
                          u.deviation_lengths[static_cast<std::size_t>(e)];
            r.v[0] = phi - Real(c.target_scalar);
            r.n = 1;
            break;
        }
        case ConstraintKind::ReactionForce: {
            const int idx = diagram.index_of(c.node);
            int slot = -1;
            for (std::size_t s = 0; s < diagram.supports().size(); ++s)
                if (diagram.supports()[s] == idx) slot = static_cast<int>(s);
            if (slot < 0)
                throw ModelError("reaction_force constraint on non-support node " +
                                 std::to_string(c.node));
            const Vec3<Real>& rr = u.reactions[static_cast<std::size_t>(slot)];
            r.v = {rr.x - Real(c.target_vec.x), rr.y - Real(c.target_vec.y),
                   rr.z - Real(c.target_vec.z)};
            r.n = 3;
            break;
        }
        case ConstraintKind::NodeOnLine: {
            const Vec3<Real>& p = u.positions[static_cast<std::size_t>(diagram.index_of(c.node))];
            const Vec3<Real> rel{p.x - Real(c.point.x), p.y - Real(c.point.y), p.z - Real(c.point.z)};
            const Vec3<Real> dir{Real(c.direction.x), Real(c.direction.y), Real(c.direction.z)};
            const Real along = dot(rel, dir);
            r.v = {rel.x - along * dir.x, rel.y - along * dir.y, rel.z - along * dir.z};
            r.n = 3;
            break;
        }
        case ConstraintKind::NodeOnPlane: {
            const Vec3<Real>& p = u.positions[static_cast<std::size_t>(diagram.index_of(c.node))];
            const Vec3<Real> rel{p.x - Real(c.point.x), p.y - Real(c.point.y), p.z - Real(c.point.z)};
            const Vec3<Real> n{Real(c.direction.x), Real(c.direction.y), Real(c.direction.z)};
            r.v[0] = dot(rel, n);
            r.n = 1;
            break;
        }
    }
    return r;
}

// Weighted least-squares penalty, with the auxiliary terms already expanded
// into the constraint list.
// Vector residuals contribute their squared components, which keeps the
// objective smooth at exactly-met targets.
template <typename Real>
Real penalty_value(const TopologyDiagram& diagram, const EquilibriumState<Real>& u,
                   const DesignParameters<Real>& x, std::span<const ConstraintSpec> constraints) {
    Real total(0.0);
    for (const ConstraintSpec& c : constraints) {
        const Residual<Real> r = constraint_residual(c, u, diagram, x);
        Real sumsq(0.0);
        for (int i = 0; i < r.n; ++i) sumsq = sumsq + r.v[static_cast<std::size_t>(i)] * r.v[static_cast<std::size_t>(i)];
        total = total + Real(c.weight) * sumsq;
    }
    return Real(0.5) * total;
}

// End-to-end objective: unpack s, run form-finding, accumulate the penalty.
// Traceable by the tape when Real is the AD scalar.
template <typename Real>
Real objective(const TopologyDiagram& diagram, const TrailSet& trails,
               const SequenceAssignment& sequences, const DesignParameters<double>& x_template,
               const ParameterMap& map, std::span<const Real> s,
               std::span<const ConstraintSpec> constraints, const SolverSettings& settings) {
    const DesignParameters<Real> x = unpack<Real>(s, map, x_template, diagram);
    const EquilibriumState<Real> u = form_find(diagram, trails, sequences, x, settings);
    return penalty_value(diagram, u, x, constraints);
}

}  // namespace cem
