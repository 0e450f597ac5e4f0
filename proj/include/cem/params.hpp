#pragma once

#include <optional>
#include <set>
#include <span>
#include <string>
#include <tuple>
#include <vector>

#include "cem/equilibrium.hpp"
#include "cem/errors.hpp"
#include "cem/topology.hpp"

namespace cem {

enum class ParamKind { DeviationForce, TrailLength, OriginCoordinate };

// One optimization parameter slot: which design-parameter entry it maps to
// and its optional box bounds. Design parameters without a slot stay fixed
// at their template values.
struct ParamSlot {
    ParamKind kind = ParamKind::DeviationForce;
    int edge_i = 0;  // node ids, edge slots
    int edge_j = 0;
    int node = 0;    // node id, origin-coordinate slots
    int axis = 0;    // 0=x, 1=y, 2=z
    std::optional<double> lower;
    std::optional<double> upper;
};

struct ParameterMap {
    std::vector<ParamSlot> slots;
    std::size_t size() const { return slots.size(); }
};

inline void check_parameter_map(const ParameterMap& map, const TopologyDiagram& diagram) {
    std::set<std::tuple<int, int, int, int>> keys;
    for (const ParamSlot& slot : map.slots) {
        if (slot.lower && slot.upper && *slot.lower > *slot.upper)
            throw ModelError("parameter bounds must satisfy lower <= upper");
        if (slot.kind == ParamKind::OriginCoordinate) {
            if (slot.axis < 0 || slot.axis > 2) throw ModelError("parameter axis must be 0, 1 or 2");
            if (!diagram.has_id(slot.node))
                throw ModelError("parameter references unknown node " + std::to_string(slot.node));
            if (!keys.insert({2, slot.node, slot.axis, 0}).second)
                throw ModelError("duplicate parameter slot for node " + std::to_string(slot.node));
            continue;
        }
        const int e = diagram.find_edge(slot.edge_i, slot.edge_j);
        if (e < 0)
            throw ModelError("parameter references unknown edge (" + std::to_string(slot.edge_i) +
                             ", " + std::to_string(slot.edge_j) + ")");
        const EdgeKind want =
            slot.kind == ParamKind::DeviationForce ? EdgeKind::Deviation : EdgeKind::Trail;
        if (diagram.edge(e).kind != want)
            throw ModelError("parameter kind does not match edge label on (" +
                             std::to_string(slot.edge_i) + ", " + std::to_string(slot.edge_j) + ")");
        if (!keys.insert({slot.kind == ParamKind::DeviationForce ? 0 : 1, e, 0, 0}).second)
            throw ModelError("duplicate parameter slot for edge (" + std::to_string(slot.edge_i) +
                             ", " + std::to_string(slot.edge_j) + ")");
    }
}

inline std::vector<double> pack(const DesignParameters<double>& x, const ParameterMap& map,
                                const TopologyDiagram& diagram) {
    std::vector<double> s;
    s.reserve(map.size());
    for (const ParamSlot& slot : map.slots) {
        switch (slot.kind) {
            case ParamKind::DeviationForce:
                s.push_back(x.deviation_forces[static_cast<std::size_t>(
                    diagram.find_edge(slot.edge_i, slot.edge_j))]);
                break;
            case ParamKind::TrailLength:
                s.push_back(x.trail_lengths[static_cast<std::size_t>(
                    diagram.find_edge(slot.edge_i, slot.edge_j))]);
                break;
            case ParamKind::OriginCoordinate:
                s.push_back(x.origin_positions[static_cast<std::size_t>(diagram.index_of(slot.node))]
                            [slot.axis]);
                break;
        }
    }
    return s;
}

template <typename Real>
DesignParameters<Real> unpack(std::span<const Real> s, const ParameterMap& map,
                              const DesignParameters<double>& x_template,
                              const TopologyDiagram& diagram, bool enforce_bounds = false) {
    if (s.size() != map.size())
        throw ModelError("parameter vector size does not match the parameter map");
    DesignParameters<Real> x = lift_parameters<Real>(x_template);
    for (std::size_t i = 0; i < map.size(); ++i) {
        const ParamSlot& slot = map.slots[i];
        if (enforce_bounds) {
            const double v = primal(s[i]);
            if ((slot.lower && v < *slot.lower) || (slot.upper && v > *slot.upper))
                throw ModelError("bound violation on parameter slot " + std::to_string(i));
        }
        switch (slot.kind) {
            case ParamKind::DeviationForce:
                x.deviation_forces[static_cast<std::size_t>(
                    diagram.find_edge(slot.edge_i, slot.edge_j))] = s[i];
                break;
            case ParamKind::TrailLength:
                x.trail_lengths[static_cast<std::size_t>(
                    diagram.find_edge(slot.edge_i, slot.edge_j))] = s[i];
                break;
            case ParamKind::OriginCoordinate:
                x.origin_positions[static_cast<std::size_t>(diagram.index_of(slot.node))][slot.axis] =
                    s[i];
                break;
        }
    }
    return x;
}

// Projection onto the box bounds, used by the optimizer after each step.
inline void clamp_to_bounds(const ParameterMap& map, std::vector<double>& s) {
    for (std::size_t i = 0; i < map.size(); ++i) {
        const ParamSlot& slot = map.slots[i];
        if (slot.lower && s[i] < *slot.lower) s[i] = *slot.lower;
        if (slot.upper && s[i] > *slot.upper) s[i] = *slot.upper;
    }
}

}  // namespace cem
