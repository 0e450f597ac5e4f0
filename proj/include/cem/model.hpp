#pragma once

#include <string>
#include <vector>

#include "cem/constraints.hpp"
#include "cem/optimize.hpp"
#include "cem/topology.hpp"

namespace cem {

// In-memory mirror of the JSON model format: declarative topology plus
// constraints, parameter slots and solver settings.
struct ModelDocument {
    std::string version = "1.0";
    TopologyModel topology;
    std::vector<ConstraintSpec> constraints;
    ParameterMap parameters;
    SolverSettings solver;
    OptimizeSettings opt;
    bool auto_auxiliary = true;
    double constraint_epsilon = 1e-6;
};

ModelDocument parse_document(const std::string& text);
std::string serialize_document(const ModelDocument& doc);

// Builds the solvable problem: topology construction, trail search (with
// auxiliary trails when enabled) and sequence assignment.
Problem compile_model(const ModelDocument& doc);

inline Problem parse_model(const std::string& text) { return compile_model(parse_document(text)); }

// Self-contained solved state: geometry, forces and reactions for every
// edge/node, loadable without the original model.
struct SolvedModel {
    struct Node {
        int id = 0;
        Vec3d position{};
        Vec3d load{};
    };
    struct SolvedEdge {
        int i = 0;
        int j = 0;
        EdgeKind kind = EdgeKind::Trail;
        int state = 1;
        double force = 0.0;   // trail: computed, deviation: prescribed
        double length = 0.0;  // trail: prescribed, deviation: computed
    };
    struct Reaction {
        int node = 0;
        Vec3d force{};
    };

    std::vector<Node> nodes;
    std::vector<SolvedEdge> edges;
    std::vector<int> supports;
    std::vector<Reaction> reactions;
    int iterations = 0;
    double eta = 0.0;
};

SolvedModel make_solved_model(const TopologyDiagram& diagram, const EquilibriumState<double>& state,
                              const DesignParameters<double>& x);

enum class ExportFormat { Json, Svg, Obj };

struct ExportOptions {
    std::string plane = "xz";  // svg projection plane: xy, xz or yz
    double svg_size = 800.0;
    const SolveReport* report = nullptr;  // appended to json exports when set
};

std::string export_form(const SolvedModel& solved, ExportFormat format,
                        const ExportOptions& options = {});

SolvedModel parse_state(const std::string& text);

}  // namespace cem
