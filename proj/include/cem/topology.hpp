#pragma once

#include <string>
#include <unordered_map>
#include <vector>

#include "cem/geometry.hpp"

namespace cem {

enum class EdgeKind { Trail, Deviation };

// Declarative description consumed by build_topology. Ids are arbitrary
// integers; positions are only meaningful for origin nodes but may be given
// everywhere as an initial guess.
struct NodeSpec {
    int id = 0;
    Vec3d position{};
    Vec3d load{};
};

struct EdgeSpec {
    int i = 0;
    int j = 0;
    EdgeKind kind = EdgeKind::Trail;
    int state = 1;         // -1 compression, +1 tension
    double length = 1.0;   // trail edges
    double force = 0.0;    // deviation edges
};

struct TopologyModel {
    std::vector<NodeSpec> nodes;
    std::vector<EdgeSpec> edges;
    std::vector<int> supports;
};

struct Edge {
    int a = 0;  // node index, a < b
    int b = 0;
    EdgeKind kind = EdgeKind::Trail;
    int state = 1;
    double length = 1.0;
    double force = 0.0;
};

struct Incident {
    int edge = 0;
    int other = 0;  // neighbor node index
};

// Immutable graph of a pin-jointed bar structure: nodes, labeled edges with
// force states, supports, loads and the default design parameter values.
class TopologyDiagram {
public:
    TopologyDiagram() = default;

    int node_count() const { return static_cast<int>(ids_.size()); }
    int edge_count() const { return static_cast<int>(edges_.size()); }

    int index_of(int id) const;
    int id_of(int index) const { return ids_[static_cast<std::size_t>(index)]; }
    bool has_id(int id) const { return id_to_index_.count(id) > 0; }

    const Edge& edge(int e) const { return edges_[static_cast<std::size_t>(e)]; }
    const std::vector<Edge>& edges() const { return edges_; }
    int find_edge(int id_i, int id_j) const;  // -1 when absent

    const std::vector<Incident>& incident(int node_index) const {
        return adjacency_[static_cast<std::size_t>(node_index)];
    }

    bool is_support(int node_index) const { return support_mask_[static_cast<std::size_t>(node_index)]; }
    const std::vector<int>& supports() const { return support_indices_; }

    const Vec3d& position(int node_index) const { return positions_[static_cast<std::size_t>(node_index)]; }
    const Vec3d& load(int node_index) const { return loads_[static_cast<std::size_t>(node_index)]; }

    int trail_edge_count() const;
    int deviation_edge_count() const;

    friend TopologyDiagram build_topology(const TopologyModel& model);
    friend struct TrailSearch;

private:
    std::vector<int> ids_;  // ascending
    std::unordered_map<int, int> id_to_index_;
    std::vector<Edge> edges_;
    std::vector<std::vector<Incident>> adjacency_;
    std::vector<bool> support_mask_;
    std::vector<int> support_indices_;
    std::vector<Vec3d> positions_;
    std::vector<Vec3d> loads_;
};

TopologyDiagram build_topology(const TopologyModel& model);

// Ordered load path from an origin node to a support node, stored as node ids.
struct Trail {
    std::vector<int> node_ids;
    bool is_auxiliary = false;
};

using TrailSet = std::vector<Trail>;

struct TrailAssignment {
    TopologyDiagram diagram;  // input diagram plus any auxiliary nodes/edges
    TrailSet trails;
};

// Discovers trails by recursive traversal from every support over connected
// trail edges. With auto_auxiliary, trail-free nodes with no incident trail
// edges receive a unit-length auxiliary trail each.
TrailAssignment assign_trails(const TopologyDiagram& diagram, bool auto_auxiliary);

struct Violation {
    int rule = 0;  // 1: node in exactly one trail, 2: one support per trail
    std::string subject;
    std::string message;
};

struct ValidityReport {
    bool is_valid = true;
    std::vector<Violation> violations;
};

ValidityReport validate_topology(const TopologyDiagram& diagram, const TrailSet& trails);

// Per-node sequence index: origin nodes have k=1 and k grows by one per
// trail edge toward the support.
struct SequenceAssignment {
    std::vector<int> k;         // by node index, 0 when unassigned
    std::vector<int> trail_of;  // by node index, -1 when unassigned
    int k_max = 0;

    int k_of(int node_index) const { return k[static_cast<std::size_t>(node_index)]; }
};

SequenceAssignment compute_sequences(const TopologyDiagram& diagram, const TrailSet& trails);

struct DeviationClasses {
    std::vector<bool> is_indirect;  // by edge index, false for trail edges
    int direct_count = 0;
    int indirect_count = 0;
};

// A deviation edge is direct iff its endpoints share the same sequence.
DeviationClasses classify_deviation_edges(const TopologyDiagram& diagram,
                                          const SequenceAssignment& sequences);

}  // namespace cem
