#include "cem/topology.hpp"

#include <algorithm>
#include <map>
#include <set>

#include "cem/errors.hpp"

namespace cem {

int TopologyDiagram::index_of(int id) const {
    auto it = id_to_index_.find(id);
    if (it == id_to_index_.end())
        throw TopologyError("unknown node id " + std::to_string(id));
    return it->second;
}

int TopologyDiagram::find_edge(int id_i, int id_j) const {
    if (!has_id(id_i) || !has_id(id_j)) return -1;
    const int a = index_of(id_i);
    const int b = index_of(id_j);
    for (const Incident& inc : incident(a))
        if (inc.other == b) return inc.edge;
    return -1;
}

int TopologyDiagram::trail_edge_count() const {
    return static_cast<int>(std::count_if(edges_.begin(), edges_.end(),
        [](const Edge& e) { return e.kind == EdgeKind::Trail; }));
}

int TopologyDiagram::deviation_edge_count() const {
    return edge_count() - trail_edge_count();
}

TopologyDiagram build_topology(const TopologyModel& model) {
    TopologyDiagram d;

    std::set<int> seen;
    for (const NodeSpec& n : model.nodes) {
        if (!seen.insert(n.id).second)
            throw ModelError("duplicate id " + std::to_string(n.id));
    }
    d.ids_.assign(seen.begin(), seen.end());
    for (int i = 0; i < d.node_count(); ++i) d.id_to_index_[d.ids_[static_cast<std::size_t>(i)]] = i;

    d.positions_.resize(seen.size());
    d.loads_.resize(seen.size());
    for (const NodeSpec& n : model.nodes) {
        const int idx = d.id_to_index_[n.id];
        d.positions_[static_cast<std::size_t>(idx)] = n.position;
        d.loads_[static_cast<std::size_t>(idx)] = n.load;
    }

    std::set<std::pair<int, int>> edge_keys;
    for (const EdgeSpec& e : model.edges) {
        if (!d.has_id(e.i) || !d.has_id(e.j))
            throw ModelError("dangling edge (" + std::to_string(e.i) + ", " + std::to_string(e.j) + ")");
        if (e.i == e.j)
            throw ModelError("self edge at node " + std::to_string(e.i));
        if (e.state != 1 && e.state != -1)
            throw ModelError("force state must be -1 or +1 on edge (" + std::to_string(e.i) + ", " +
                             std::to_string(e.j) + ")");
        int a = d.id_to_index_[e.i];
        int b = d.id_to_index_[e.j];
        if (a > b) std::swap(a, b);
        if (!edge_keys.insert({a, b}).second)
            throw ModelError("duplicate edge (" + std::to_string(e.i) + ", " + std::to_string(e.j) + ")");
        Edge edge;
        edge.a = a;
        edge.b = b;
        edge.kind = e.kind;
        edge.state = e.state;
        if (e.kind == EdgeKind::Trail) {
            if (!(e.length > 0.0))
                throw ModelError("negative trail length on edge (" + std::to_string(e.i) + ", " +
                                 std::to_string(e.j) + ")");
            edge.length = e.length;
        } else {
            if (e.force < 0.0)
                throw ModelError("negative deviation force on edge (" + std::to_string(e.i) + ", " +
                                 std::to_string(e.j) + ")");
            edge.force = e.force;
        }
        d.edges_.push_back(edge);
    }
    // Deterministic edge order: sorted by normalized endpoint indices.
    std::sort(d.edges_.begin(), d.edges_.end(), [](const Edge& x, const Edge& y) {
        return std::tie(x.a, x.b) < std::tie(y.a, y.b);
    });

    d.adjacency_.resize(seen.size());
    for (int e = 0; e < d.edge_count(); ++e) {
        const Edge& edge = d.edges_[static_cast<std::size_t>(e)];
        d.adjacency_[static_cast<std::size_t>(edge.a)].push_back({e, edge.b});
        d.adjacency_[static_cast<std::size_t>(edge.b)].push_back({e, edge.a});
    }

    d.support_mask_.assign(seen.size(), false);
    for (int id : model.supports) {
        if (!d.has_id(id)) throw ModelError("support references unknown node " + std::to_string(id));
        d.support_mask_[static_cast<std::size_t>(d.id_to_index_[id])] = true;
    }
    for (int i = 0; i < d.node_count(); ++i)
        if (d.support_mask_[static_cast<std::size_t>(i)]) d.support_indices_.push_back(i);

    return d;
}

namespace {

std::vector<int> trail_neighbors(const TopologyDiagram& d, int node, int exclude) {
    std::vector<int> out;
    for (const Incident& inc : d.incident(node))
        if (d.edge(inc.edge).kind == EdgeKind::Trail && inc.other != exclude)
            out.push_back(inc.other);
    std::sort(out.begin(), out.end());
    return out;
}

bool has_trail_edge(const TopologyDiagram& d, int node) {
    for (const Incident& inc : d.incident(node))
        if (d.edge(inc.edge).kind == EdgeKind::Trail) return true;
    return false;
}

TopologyModel to_model(const TopologyDiagram& d) {
    TopologyModel m;
    for (int i = 0; i < d.node_count(); ++i)
        m.nodes.push_back({d.id_of(i), d.position(i), d.load(i)});
    for (const Edge& e : d.edges()) {
        EdgeSpec spec;
        spec.i = d.id_of(e.a);
        spec.j = d.id_of(e.b);
        spec.kind = e.kind;
        spec.state = e.state;
        spec.length = e.length;
        spec.force = e.force;
        m.edges.push_back(spec);
    }
    for (int s : d.supports()) m.supports.push_back(d.id_of(s));
    return m;
}

}  // namespace

TrailAssignment assign_trails(const TopologyDiagram& diagram, bool auto_auxiliary) {
    const int n = diagram.node_count();
    std::vector<bool> assigned(static_cast<std::size_t>(n), false);
    TrailSet natural;

    // Supports are visited in ascending id order; node indices already follow id order.
    for (int support : diagram.supports()) {
        if (assigned[static_cast<std::size_t>(support)])
            throw TopologyError("trail overlap at node " + std::to_string(diagram.id_of(support)));
        if (!has_trail_edge(diagram, support))
            throw TopologyError("unassigned node " + std::to_string(diagram.id_of(support)) +
                                ": support has no trail edge");
        std::vector<int> path{support};
        assigned[static_cast<std::size_t>(support)] = true;
        int prev = -1;
        int cur = support;
        for (;;) {
            const std::vector<int> next = trail_neighbors(diagram, cur, prev);
            if (next.empty()) break;
            if (next.size() > 1)
                throw TopologyError("trail overlap at node " + std::to_string(diagram.id_of(cur)) +
                                    ": branching trail edges");
            if (assigned[static_cast<std::size_t>(next.front())])
                throw TopologyError("trail overlap at node " +
                                    std::to_string(diagram.id_of(next.front())));
            prev = cur;
            cur = next.front();
            assigned[static_cast<std::size_t>(cur)] = true;
            path.push_back(cur);
        }
        std::reverse(path.begin(), path.end());  // origin first, support last
        Trail trail;
        for (int idx : path) trail.node_ids.push_back(diagram.id_of(idx));
        natural.push_back(std::move(trail));
    }

    std::vector<int> trail_free;
    for (int i = 0; i < n; ++i) {
        if (assigned[static_cast<std::size_t>(i)]) continue;
        if (has_trail_edge(diagram, i))
            throw TopologyError("unassigned node " + std::to_string(diagram.id_of(i)) +
                                ": trail edges do not reach a support");
        if (!auto_auxiliary)
            throw TopologyError("unassigned node " + std::to_string(diagram.id_of(i)));
        trail_free.push_back(i);
    }

    TrailAssignment result;
    if (trail_free.empty()) {
        result.diagram = diagram;
        result.trails = std::move(natural);
        return result;
    }

    TopologyModel model = to_model(diagram);
    int next_id = diagram.node_count() > 0 ? diagram.id_of(diagram.node_count() - 1) + 1 : 1;
    TrailSet auxiliary;
    for (int origin : trail_free) {
        const int support_id = next_id++;
        NodeSpec support_node;
        support_node.id = support_id;
        support_node.position = diagram.position(origin) + Vec3d{0.0, 0.0, -1.0};
        model.nodes.push_back(support_node);
        EdgeSpec edge;
        edge.i = diagram.id_of(origin);
        edge.j = support_id;
        edge.kind = EdgeKind::Trail;
        edge.state = 1;
        edge.length = 1.0;
        model.edges.push_back(edge);
        model.supports.push_back(support_id);
        Trail trail;
        trail.node_ids = {diagram.id_of(origin), support_id};
        trail.is_auxiliary = true;
        auxiliary.push_back(std::move(trail));
    }

    result.diagram = build_topology(model);
    result.trails = std::move(natural);
    for (Trail& t : auxiliary) result.trails.push_back(std::move(t));
    return result;
}

ValidityReport validate_topology(const TopologyDiagram& diagram, const TrailSet& trails) {
    ValidityReport report;
    auto violate = [&report](int rule, std::string subject, std::string message) {
        report.violations.push_back({rule, std::move(subject), std::move(message)});
    };

    if (diagram.node_count() > 0 && trails.empty())
        violate(2, "diagram", "diagram defines neither trails nor usable support nodes");

    std::map<int, int> membership;
    for (std::size_t t = 0; t < trails.size(); ++t) {
        const Trail& trail = trails[t];
        const std::string label = "trail " + std::to_string(t);
        if (trail.node_ids.size() < 2) {
            violate(2, label, "trail must contain at least two nodes");
            continue;
        }
        for (int id : trail.node_ids) membership[id] += 1;
        for (std::size_t i = 0; i + 1 < trail.node_ids.size(); ++i) {
            const int e = diagram.find_edge(trail.node_ids[i], trail.node_ids[i + 1]);
            if (e < 0 || diagram.edge(e).kind != EdgeKind::Trail)
                violate(1, label,
                        "nodes " + std::to_string(trail.node_ids[i]) + " and " +
                            std::to_string(trail.node_ids[i + 1]) + " are not linked by a trail edge");
        }
        const int last = trail.node_ids.back();
        if (!diagram.has_id(last) || !diagram.is_support(diagram.index_of(last)))
            violate(2, label, "last node " + std::to_string(last) + " is not a support");
        for (std::size_t i = 0; i + 1 < trail.node_ids.size(); ++i) {
            const int id = trail.node_ids[i];
            if (diagram.has_id(id) && diagram.is_support(diagram.index_of(id)))
                violate(2, label, "support " + std::to_string(id) + " is not a trail terminal");
        }
    }

    for (int i = 0; i < diagram.node_count(); ++i) {
        const int id = diagram.id_of(i);
        const int count = membership.count(id) ? membership.at(id) : 0;
        if (count == 0 && diagram.node_count() > 0 && !trails.empty())
            violate(1, "node " + std::to_string(id), "node is not part of any trail");
        if (count > 1)
            violate(1, "node " + std::to_string(id), "node is part of " + std::to_string(count) + " trails");
    }

    if (static_cast<int>(trails.size()) != static_cast<int>(diagram.supports().size()))
        violate(2, "diagram",
                "expected as many trails as support nodes (" +
                    std::to_string(diagram.supports().size()) + "), found " +
                    std::to_string(trails.size()));

    report.is_valid = report.violations.empty();
    return report;
}

SequenceAssignment compute_sequences(const TopologyDiagram& diagram, const TrailSet& trails) {
    SequenceAssignment seq;
    seq.k.assign(static_cast<std::size_t>(diagram.node_count()), 0);
    seq.trail_of.assign(static_cast<std::size_t>(diagram.node_count()), -1);
    for (std::size_t t = 0; t < trails.size(); ++t) {
        const Trail& trail = trails[t];
        for (std::size_t i = 0; i < trail.node_ids.size(); ++i) {
            const int idx = diagram.index_of(trail.node_ids[i]);
            seq.k[static_cast<std::size_t>(idx)] = static_cast<int>(i) + 1;
            seq.trail_of[static_cast<std::size_t>(idx)] = static_cast<int>(t);
        }
        seq.k_max = std::max(seq.k_max, static_cast<int>(trail.node_ids.size()));
    }
    return seq;
}

DeviationClasses classify_deviation_edges(const TopologyDiagram& diagram,
                                          const SequenceAssignment& sequences) {
    DeviationClasses classes;
    classes.is_indirect.assign(static_cast<std::size_t>(diagram.edge_count()), false);
    for (int e = 0; e < diagram.edge_count(); ++e) {
        const Edge& edge = diagram.edge(e);
        if (edge.kind != EdgeKind::Deviation) continue;
        const bool indirect = sequences.k_of(edge.a) != sequences.k_of(edge.b);
        classes.is_indirect[static_cast<std::size_t>(e)] = indirect;
        if (indirect)
            classes.indirect_count += 1;
        else
            classes.direct_count += 1;
    }
    return classes;
}

}  // namespace cem
