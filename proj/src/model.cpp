#include "cem/model.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <sstream>

#include <json.hpp>

#include "cem/errors.hpp"

namespace cem {

using nlohmann::json;

namespace {

std::string edge_kind_name(EdgeKind kind) {
    return kind == EdgeKind::Trail ? "trail" : "deviation";
}

EdgeKind edge_kind_from(const std::string& s, const std::string& where) {
    if (s == "trail") return EdgeKind::Trail;
    if (s == "deviation") return EdgeKind::Deviation;
    throw ModelError(where + ": unknown edge kind '" + s + "' (expected trail or deviation)");
}

const char* constraint_kind_name(ConstraintKind kind) {
    switch (kind) {
        case ConstraintKind::NodePosition: return "node_position";
        case ConstraintKind::EdgeDirection: return "edge_direction";
        case ConstraintKind::DeviationLength: return "deviation_length";
        case ConstraintKind::TrailForce: return "trail_force";
        case ConstraintKind::LoadPath: return "load_path";
        case ConstraintKind::ReactionForce: return "reaction_force";
        case ConstraintKind::NodeOnLine: return "node_on_line";
        case ConstraintKind::NodeOnPlane: return "node_on_plane";
    }
    return "node_position";
}

ConstraintKind constraint_kind_from(const std::string& s, const std::string& where) {
    if (s == "node_position") return ConstraintKind::NodePosition;
    if (s == "edge_direction") return ConstraintKind::EdgeDirection;
    if (s == "deviation_length") return ConstraintKind::DeviationLength;
    if (s == "trail_force") return ConstraintKind::TrailForce;
    if (s == "load_path") return ConstraintKind::LoadPath;
    if (s == "reaction_force") return ConstraintKind::ReactionForce;
    if (s == "node_on_line") return ConstraintKind::NodeOnLine;
    if (s == "node_on_plane") return ConstraintKind::NodeOnPlane;
    throw ModelError(where + ": unknown constraint kind '" + s + "'");
}

const char* param_kind_name(ParamKind kind) {
    switch (kind) {
        case ParamKind::DeviationForce: return "deviation_force";
        case ParamKind::TrailLength: return "trail_length";
        case ParamKind::OriginCoordinate: return "origin_coordinate";
    }
    return "deviation_force";
}

ParamKind param_kind_from(const std::string& s, const std::string& where) {
    if (s == "deviation_force") return ParamKind::DeviationForce;
    if (s == "trail_length") return ParamKind::TrailLength;
    if (s == "origin_coordinate") return ParamKind::OriginCoordinate;
    throw ModelError(where + ": unknown parameter kind '" + s + "'");
}

Vec3d vec3_from(const json& j, const std::string& where) {
    if (!j.is_array() || j.size() != 3)
        throw ModelError(where + ": expected an array of 3 numbers");
    for (const auto& v : j)
        if (!v.is_number()) throw ModelError(where + ": expected an array of 3 numbers");
    return {j[0].get<double>(), j[1].get<double>(), j[2].get<double>()};
}

json vec3_to(const Vec3d& v) { return json::array({v.x, v.y, v.z}); }

double number_field(const json& j, const char* key, const std::string& where) {
    if (!j.contains(key) || !j.at(key).is_number())
        throw ModelError(where + ": missing numeric field '" + key + "'");
    return j.at(key).get<double>();
}

int int_field(const json& j, const char* key, const std::string& where) {
    if (!j.contains(key) || !j.at(key).is_number_integer())
        throw ModelError(where + ": missing integer field '" + key + "'");
    return j.at(key).get<int>();
}

std::pair<int, int> edge_ref(const json& j, const std::string& where) {
    if (!j.contains("edge")) throw ModelError(where + ": missing field 'edge'");
    const json& e = j.at("edge");
    if (!e.is_array() || e.size() != 2 || !e[0].is_number_integer() || !e[1].is_number_integer())
        throw ModelError(where + ": 'edge' must be an array of two node ids");
    return {e[0].get<int>(), e[1].get<int>()};
}

json parse_text(const std::string& text) {
    json j = json::parse(text, nullptr, false);
    if (j.is_discarded()) throw ModelError("document is not valid JSON");
    return j;
}

NodeSpec parse_node(const json& j, std::size_t i) {
    const std::string where = "nodes[" + std::to_string(i) + "]";
    if (!j.is_object()) throw ModelError(where + ": expected an object");
    NodeSpec node;
    node.id = int_field(j, "id", where);
    if (j.contains("position")) node.position = vec3_from(j.at("position"), where + ".position");
    if (j.contains("load")) node.load = vec3_from(j.at("load"), where + ".load");
    return node;
}

EdgeSpec parse_edge(const json& j, std::size_t i) {
    const std::string where = "edges[" + std::to_string(i) + "]";
    if (!j.is_object()) throw ModelError(where + ": expected an object");
    EdgeSpec edge;
    edge.i = int_field(j, "i", where);
    edge.j = int_field(j, "j", where);
    if (!j.contains("kind") || !j.at("kind").is_string())
        throw ModelError(where + ": missing string field 'kind'");
    edge.kind = edge_kind_from(j.at("kind").get<std::string>(), where);
    if (j.contains("state")) {
        edge.state = int_field(j, "state", where);
        if (edge.state != 1 && edge.state != -1)
            throw ModelError(where + ": 'state' must be +1 or -1");
    }
    if (edge.kind == EdgeKind::Trail) {
        edge.length = number_field(j, "length", where);
    } else {
        edge.force = number_field(j, "force", where);
    }
    return edge;
}

ConstraintSpec parse_constraint(const json& j, std::size_t i) {
    const std::string where = "constraints[" + std::to_string(i) + "]";
    if (!j.is_object()) throw ModelError(where + ": expected an object");
    if (!j.contains("kind") || !j.at("kind").is_string())
        throw ModelError(where + ": missing string field 'kind'");
    ConstraintSpec c;
    c.kind = constraint_kind_from(j.at("kind").get<std::string>(), where);
    if (j.contains("weight")) {
        c.weight = number_field(j, "weight", where);
        if (!(c.weight > 0.0)) throw ModelError(where + ": 'weight' must be positive");
    }
    switch (c.kind) {
        case ConstraintKind::NodePosition:
        case ConstraintKind::ReactionForce:
            c.node = int_field(j, "node", where);
            if (!j.contains("target")) throw ModelError(where + ": missing field 'target'");
            c.target_vec = vec3_from(j.at("target"), where + ".target");
            break;
        case ConstraintKind::EdgeDirection: {
            const auto [a, b] = edge_ref(j, where);
            c.edge_i = a;
            c.edge_j = b;
            if (!j.contains("target")) throw ModelError(where + ": missing field 'target'");
            c.target_vec = vec3_from(j.at("target"), where + ".target");
            break;
        }
        case ConstraintKind::DeviationLength:
        case ConstraintKind::TrailForce:
        case ConstraintKind::LoadPath: {
            const auto [a, b] = edge_ref(j, where);
            c.edge_i = a;
            c.edge_j = b;
            c.target_scalar = number_field(j, "target", where);
            break;
        }
        case ConstraintKind::NodeOnLine: {
            c.node = int_field(j, "node", where);
            if (!j.contains("point")) throw ModelError(where + ": missing field 'point'");
            c.point = vec3_from(j.at("point"), where + ".point");
            if (!j.contains("direction")) throw ModelError(where + ": missing field 'direction'");
            c.direction = vec3_from(j.at("direction"), where + ".direction");
            if (norm(c.direction) < kDegenerateEdgeTol)
                throw ModelError(where + ": 'direction' must be nonzero");
            c.direction = c.direction / norm(c.direction);
            break;
        }
        case ConstraintKind::NodeOnPlane: {
            c.node = int_field(j, "node", where);
            if (!j.contains("point")) throw ModelError(where + ": missing field 'point'");
            c.point = vec3_from(j.at("point"), where + ".point");
            if (!j.contains("normal")) throw ModelError(where + ": missing field 'normal'");
            c.direction = vec3_from(j.at("normal"), where + ".normal");
            if (norm(c.direction) < kDegenerateEdgeTol)
                throw ModelError(where + ": 'normal' must be nonzero");
            c.direction = c.direction / norm(c.direction);
            break;
        }
    }
    return c;
}

ParamSlot parse_param(const json& j, std::size_t i) {
    const std::string where = "parameters[" + std::to_string(i) + "]";
    if (!j.is_object()) throw ModelError(where + ": expected an object");
    if (!j.contains("kind") || !j.at("kind").is_string())
        throw ModelError(where + ": missing string field 'kind'");
    ParamSlot slot;
    slot.kind = param_kind_from(j.at("kind").get<std::string>(), where);
    if (slot.kind == ParamKind::OriginCoordinate) {
        slot.node = int_field(j, "node", where);
        if (!j.contains("axis")) throw ModelError(where + ": missing field 'axis'");
        const json& axis = j.at("axis");
        if (axis.is_string()) {
            const std::string a = axis.get<std::string>();
            if (a == "x") slot.axis = 0;
            else if (a == "y") slot.axis = 1;
            else if (a == "z") slot.axis = 2;
            else throw ModelError(where + ": 'axis' must be x, y or z");
        } else if (axis.is_number_integer()) {
            slot.axis = axis.get<int>();
            if (slot.axis < 0 || slot.axis > 2)
                throw ModelError(where + ": 'axis' must be 0, 1 or 2");
        } else {
            throw ModelError(where + ": 'axis' must be x, y or z");
        }
    } else {
        const auto [a, b] = edge_ref(j, where);
        slot.edge_i = a;
        slot.edge_j = b;
    }
    if (j.contains("bounds")) {
        const json& bounds = j.at("bounds");
        if (!bounds.is_array() || bounds.size() != 2)
            throw ModelError(where + ": 'bounds' must be [lower, upper] (null for unbounded)");
        if (!bounds[0].is_null()) slot.lower = bounds[0].get<double>();
        if (!bounds[1].is_null()) slot.upper = bounds[1].get<double>();
    }
    return slot;
}

void parse_solver_block(const json& j, ModelDocument& doc) {
    const std::string where = "solver";
    if (!j.is_object()) throw ModelError(where + ": expected an object");
    if (j.contains("t_max")) doc.solver.t_max = int_field(j, "t_max", where);
    if (j.contains("eta_min")) doc.solver.eta_min = number_field(j, "eta_min", where);
    if (j.contains("normalize_eta")) doc.solver.normalize_eta = j.at("normalize_eta").get<bool>();
    if (j.contains("epsilon")) {
        doc.opt.epsilon = number_field(j, "epsilon", where);
        doc.constraint_epsilon = doc.opt.epsilon;
    }
    if (j.contains("max_iter")) doc.opt.max_iter = int_field(j, "max_iter", where);
    if (j.contains("algorithm")) {
        const std::string a = j.at("algorithm").get<std::string>();
        if (a == "gd") doc.opt.algorithm = Algorithm::GradientDescent;
        else if (a == "lbfgs") doc.opt.algorithm = Algorithm::Lbfgs;
        else throw ModelError(where + ": 'algorithm' must be gd or lbfgs");
    }
    if (j.contains("grad")) {
        const std::string g = j.at("grad").get<std::string>();
        if (g == "ad") doc.opt.grad = GradMode::Ad;
        else if (g == "fd") doc.opt.grad = GradMode::Fd;
        else throw ModelError(where + ": 'grad' must be ad or fd");
    }
    if (j.contains("fd_step")) doc.opt.fd_step = number_field(j, "fd_step", where);
    if (j.contains("fd_scheme")) {
        const std::string s = j.at("fd_scheme").get<std::string>();
        if (s == "forward") doc.opt.fd_scheme = FdScheme::Forward;
        else if (s == "central") doc.opt.fd_scheme = FdScheme::Central;
        else throw ModelError(where + ": 'fd_scheme' must be forward or central");
    }
    if (j.contains("auto_auxiliary")) doc.auto_auxiliary = j.at("auto_auxiliary").get<bool>();
}

}  // namespace

ModelDocument parse_document(const std::string& text) {
    const json j = parse_text(text);
    if (!j.is_object()) throw ModelError("document root must be an object");

    ModelDocument doc;
    if (j.contains("version")) {
        if (!j.at("version").is_string()) throw ModelError("'version' must be a string");
        doc.version = j.at("version").get<std::string>();
    }

    if (!j.contains("nodes") || !j.at("nodes").is_array())
        throw ModelError("document must contain a 'nodes' array");
    for (std::size_t i = 0; i < j.at("nodes").size(); ++i)
        doc.topology.nodes.push_back(parse_node(j.at("nodes")[i], i));

    if (!j.contains("edges") || !j.at("edges").is_array())
        throw ModelError("document must contain an 'edges' array");
    for (std::size_t i = 0; i < j.at("edges").size(); ++i)
        doc.topology.edges.push_back(parse_edge(j.at("edges")[i], i));

    if (!j.contains("supports") || !j.at("supports").is_array())
        throw ModelError("document must contain a 'supports' array");
    for (const auto& s : j.at("supports")) {
        if (!s.is_number_integer()) throw ModelError("'supports' must list node ids");
        doc.topology.supports.push_back(s.get<int>());
    }

    if (j.contains("constraints")) {
        if (!j.at("constraints").is_array()) throw ModelError("'constraints' must be an array");
        for (std::size_t i = 0; i < j.at("constraints").size(); ++i)
            doc.constraints.push_back(parse_constraint(j.at("constraints")[i], i));
    }

    if (j.contains("parameters")) {
        if (!j.at("parameters").is_array()) throw ModelError("'parameters' must be an array");
        for (std::size_t i = 0; i < j.at("parameters").size(); ++i)
            doc.parameters.slots.push_back(parse_param(j.at("parameters")[i], i));
    }

    if (j.contains("solver")) parse_solver_block(j.at("solver"), doc);
    return doc;
}

std::string serialize_document(const ModelDocument& doc) {
    json j;
    j["version"] = doc.version;

    j["nodes"] = json::array();
    for (const NodeSpec& node : doc.topology.nodes) {
        json n;
        n["id"] = node.id;
        n["position"] = vec3_to(node.position);
        n["load"] = vec3_to(node.load);
        j["nodes"].push_back(std::move(n));
    }

    j["edges"] = json::array();
    for (const EdgeSpec& edge : doc.topology.edges) {
        json e;
        e["i"] = edge.i;
        e["j"] = edge.j;
        e["kind"] = edge_kind_name(edge.kind);
        e["state"] = edge.state;
        if (edge.kind == EdgeKind::Trail)
            e["length"] = edge.length;
        else
            e["force"] = edge.force;
        j["edges"].push_back(std::move(e));
    }

    j["supports"] = doc.topology.supports;

    j["constraints"] = json::array();
    for (const ConstraintSpec& c : doc.constraints) {
        json cj;
        cj["kind"] = constraint_kind_name(c.kind);
        cj["weight"] = c.weight;
        switch (c.kind) {
            case ConstraintKind::NodePosition:
            case ConstraintKind::ReactionForce:
                cj["node"] = c.node;
                cj["target"] = vec3_to(c.target_vec);
                break;
            case ConstraintKind::EdgeDirection:
                cj["edge"] = json::array({c.edge_i, c.edge_j});
                cj["target"] = vec3_to(c.target_vec);
                break;
            case ConstraintKind::DeviationLength:
            case ConstraintKind::TrailForce:
            case ConstraintKind::LoadPath:
                cj["edge"] = json::array({c.edge_i, c.edge_j});
                cj["target"] = c.target_scalar;
                break;
            case ConstraintKind::NodeOnLine:
                cj["node"] = c.node;
                cj["point"] = vec3_to(c.point);
                cj["direction"] = vec3_to(c.direction);
                break;
            case ConstraintKind::NodeOnPlane:
                cj["node"] = c.node;
                cj["point"] = vec3_to(c.point);
                cj["normal"] = vec3_to(c.direction);
                break;
        }
        j["constraints"].push_back(std::move(cj));
    }

    j["parameters"] = json::array();
    for (const ParamSlot& slot : doc.parameters.slots) {
        json pj;
        pj["kind"] = param_kind_name(slot.kind);
        if (slot.kind == ParamKind::OriginCoordinate) {
            pj["node"] = slot.node;
            pj["axis"] = slot.axis == 0 ? "x" : (slot.axis == 1 ? "y" : "z");
        } else {
            pj["edge"] = json::array({slot.edge_i, slot.edge_j});
        }
        if (slot.lower || slot.upper) {
            json bounds = json::array();
            bounds.push_back(slot.lower ? json(*slot.lower) : json(nullptr));
            bounds.push_back(slot.upper ? json(*slot.upper) : json(nullptr));
            pj["bounds"] = std::move(bounds);
        }
        j["parameters"].push_back(std::move(pj));
    }

    json solver;
    solver["t_max"] = doc.solver.t_max;
    solver["eta_min"] = doc.solver.eta_min;
    solver["normalize_eta"] = doc.solver.normalize_eta;
    solver["epsilon"] = doc.opt.epsilon;
    solver["max_iter"] = doc.opt.max_iter;
    solver["algorithm"] = doc.opt.algorithm == Algorithm::Lbfgs ? "lbfgs" : "gd";
    solver["grad"] = doc.opt.grad == GradMode::Ad ? "ad" : "fd";
    solver["fd_step"] = doc.opt.fd_step;
    solver["fd_scheme"] = doc.opt.fd_scheme == FdScheme::Forward ? "forward" : "central";
    solver["auto_auxiliary"] = doc.auto_auxiliary;
    j["solver"] = std::move(solver);

    return j.dump(2) + "\n";
}

Problem compile_model(const ModelDocument& doc) {
    Problem problem;
    const TopologyDiagram base = build_topology(doc.topology);
    TrailAssignment assignment = assign_trails(base, doc.auto_auxiliary);
    problem.diagram = std::move(assignment.diagram);
    problem.trails = std::move(assignment.trails);
    problem.sequences = compute_sequences(problem.diagram, problem.trails);
    problem.x_template = default_parameters(problem.diagram);
    problem.map = doc.parameters;
    problem.objective.constraints = doc.constraints;
    problem.objective.epsilon = doc.constraint_epsilon;
    problem.solver = doc.solver;
    problem.opt = doc.opt;
    check_parameter_map(problem.map, problem.diagram);
    return problem;
}

SolvedModel make_solved_model(const TopologyDiagram& diagram, const EquilibriumState<double>& state,
                              const DesignParameters<double>& x) {
    SolvedModel out;
    for (int i = 0; i < diagram.node_count(); ++i) {
        SolvedModel::Node node;
        node.id = diagram.id_of(i);
        node.position = state.positions[static_cast<std::size_t>(i)];
        node.load = x.loads[static_cast<std::size_t>(i)];
        out.nodes.push_back(node);
    }
    for (int e = 0; e < diagram.edge_count(); ++e) {
        const Edge& edge = diagram.edge(e);
        SolvedModel::SolvedEdge se;
        se.i = diagram.id_of(edge.a);
        se.j = diagram.id_of(edge.b);
        se.kind = edge.kind;
        se.state = edge.state;
        if (edge.kind == EdgeKind::Trail) {
            se.force = state.trail_forces[static_cast<std::size_t>(e)];
            se.length = x.trail_lengths[static_cast<std::size_t>(e)];
        } else {
            se.force = x.deviation_forces[static_cast<std::size_t>(e)];
            se.length = state.deviation_lengths[static_cast<std::size_t>(e)];
        }
        out.edges.push_back(se);
    }
    for (std::size_t s = 0; s < diagram.supports().size(); ++s) {
        const int idx = diagram.supports()[s];
        out.supports.push_back(diagram.id_of(idx));
        out.reactions.push_back({diagram.id_of(idx), state.reactions[s]});
    }
    out.iterations = state.iterations_used;
    out.eta = state.final_eta;
    return out;
}

namespace {

json solved_to_json(const SolvedModel& solved, const SolveReport* report) {
    json j;
    j["version"] = "1.0";
    j["nodes"] = json::array();
    for (const auto& node : solved.nodes) {
        json n;
        n["id"] = node.id;
        n["position"] = vec3_to(node.position);
        n["load"] = vec3_to(node.load);
        j["nodes"].push_back(std::move(n));
    }
    j["edges"] = json::array();
    for (const auto& edge : solved.edges) {
        json e;
        e["i"] = edge.i;
        e["j"] = edge.j;
        e["kind"] = edge_kind_name(edge.kind);
        e["state"] = edge.state;
        e["force"] = edge.force;
        e["length"] = edge.length;
        j["edges"].push_back(std::move(e));
    }
    j["supports"] = solved.supports;
    j["reactions"] = json::array();
    for (const auto& r : solved.reactions) {
        json rj;
        rj["node"] = r.node;
        rj["force"] = vec3_to(r.force);
        j["reactions"].push_back(std::move(rj));
    }
    j["iterations"] = solved.iterations;
    j["eta"] = solved.eta;
    if (report != nullptr) {
        json rep;
        rep["L_final"] = report->L_final;
        rep["grad_norm_final"] = report->grad_norm_final;
        rep["iterations"] = report->iterations;
        rep["objective_evaluations"] = report->objective_evaluations;
        rep["gradient_evaluations"] = report->gradient_evaluations;
        rep["wall_time_seconds"] = report->wall_time_seconds;
        rep["converged"] = report->converged;
        rep["s_final"] = report->s_final;
        j["report"] = std::move(rep);
    }
    return j;
}

void append_num(std::string& out, double v) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.6f", v);
    out += buf;
}

std::string svg_export(const SolvedModel& solved, const ExportOptions& options) {
    int u_axis = 0, v_axis = 2;
    if (options.plane == "xy") {
        u_axis = 0;
        v_axis = 1;
    } else if (options.plane == "xz") {
        u_axis = 0;
        v_axis = 2;
    } else if (options.plane == "yz") {
        u_axis = 1;
        v_axis = 2;
    } else {
        throw ModelError("svg projection plane must be xy, xz or yz");
    }

    double u_min = std::numeric_limits<double>::infinity(), u_max = -u_min;
    double v_min = u_min, v_max = -u_min;
    for (const auto& node : solved.nodes) {
        u_min = std::min(u_min, node.position[u_axis]);
        u_max = std::max(u_max, node.position[u_axis]);
        v_min = std::min(v_min, node.position[v_axis]);
        v_max = std::max(v_max, node.position[v_axis]);
    }
    if (solved.nodes.empty()) u_min = u_max = v_min = v_max = 0.0;
    const double span = std::max({u_max - u_min, v_max - v_min, 1e-9});
    const double size = options.svg_size;
    const double margin = 0.05 * size;
    const double scale = (size - 2.0 * margin) / span;
    auto to_u = [&](const Vec3d& p) { return margin + (p[u_axis] - u_min) * scale; };
    auto to_v = [&](const Vec3d& p) { return size - margin - (p[v_axis] - v_min) * scale; };

    double f_max = 0.0;
    for (const auto& edge : solved.edges) f_max = std::max(f_max, std::abs(edge.force));

    std::vector<const SolvedModel::Node*> by_id(0);
    auto node_of = [&](int id) -> const SolvedModel::Node& {
        for (const auto& node : solved.nodes)
            if (node.id == id) return node;
        throw ModelError("svg export references unknown node " + std::to_string(id));
    };

    std::string out;
    out += "<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n";
    out += "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"";
    append_num(out, size);
    out += "\" height=\"";
    append_num(out, size);
    out += "\" viewBox=\"0 0 ";
    append_num(out, size);
    out += " ";
    append_num(out, size);
    out += "\">\n";
    out += "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";

    for (const auto& edge : solved.edges) {
        const auto& a = node_of(edge.i);
        const auto& b = node_of(edge.j);
        const double width =
            f_max > 0.0 ? 0.75 + 3.25 * std::abs(edge.force) / f_max : 1.0;
        const char* color = edge.state > 0 ? "#d62728" : "#1f77b4";
        out += "<line x1=\"";
        append_num(out, to_u(a.position));
        out += "\" y1=\"";
        append_num(out, to_v(a.position));
        out += "\" x2=\"";
        append_num(out, to_u(b.position));
        out += "\" y2=\"";
        append_num(out, to_v(b.position));
        out += "\" stroke=\"";
        out += color;
        out += "\" stroke-width=\"";
        append_num(out, width);
        out += "\"";
        if (edge.kind == EdgeKind::Deviation) out += " stroke-dasharray=\"6,3\"";
        out += "/>\n";
    }

    for (const auto& node : solved.nodes) {
        const bool support =
            std::find(solved.supports.begin(), solved.supports.end(), node.id) !=
            solved.supports.end();
        out += "<circle cx=\"";
        append_num(out, to_u(node.position));
        out += "\" cy=\"";
        append_num(out, to_v(node.position));
        out += "\" r=\"";
        append_num(out, support ? 5.0 : 3.0);
        out += "\" fill=\"";
        out += support ? "black" : "#666666";
        out += "\"/>\n";
    }

    out += "</svg>\n";
    return out;
}

std::string obj_export(const SolvedModel& solved) {
    std::string out;
    std::vector<int> order;
    for (const auto& node : solved.nodes) order.push_back(node.id);
    auto obj_index = [&](int id) {
        for (std::size_t i = 0; i < order.size(); ++i)
            if (order[i] == id) return static_cast<int>(i) + 1;
        throw ModelError("obj export references unknown node " + std::to_string(id));
    };
    char buf[160];
    for (const auto& node : solved.nodes) {
        std::snprintf(buf, sizeof(buf), "v %.17g %.17g %.17g\n", node.position.x, node.position.y,
                      node.position.z);
        out += buf;
    }
    for (const auto& edge : solved.edges) {
        std::snprintf(buf, sizeof(buf), "l %d %d\n", obj_index(edge.i), obj_index(edge.j));
        out += buf;
    }
    return out;
}

}  // namespace

std::string export_form(const SolvedModel& solved, ExportFormat format,
                        const ExportOptions& options) {
    switch (format) {
        case ExportFormat::Json: return solved_to_json(solved, options.report).dump(2) + "\n";
        case ExportFormat::Svg: return svg_export(solved, options);
        case ExportFormat::Obj: return obj_export(solved);
    }
    throw ModelError("unknown export format");
}

SolvedModel parse_state(const std::string& text) {
    const json j = parse_text(text);
    if (!j.is_object()) throw ModelError("state root must be an object");
    SolvedModel out;
    if (!j.contains("nodes") || !j.at("nodes").is_array())
        throw ModelError("state must contain a 'nodes' array");
    for (std::size_t i = 0; i < j.at("nodes").size(); ++i) {
        const json& nj = j.at("nodes")[i];
        const std::string where = "nodes[" + std::to_string(i) + "]";
        SolvedModel::Node node;
        node.id = int_field(nj, "id", where);
        if (!nj.contains("position")) throw ModelError(where + ": missing field 'position'");
        node.position = vec3_from(nj.at("position"), where + ".position");
        if (nj.contains("load")) node.load = vec3_from(nj.at("load"), where + ".load");
        out.nodes.push_back(node);
    }
    if (!j.contains("edges") || !j.at("edges").is_array())
        throw ModelError("state must contain an 'edges' array");
    for (std::size_t i = 0; i < j.at("edges").size(); ++i) {
        const json& ej = j.at("edges")[i];
        const std::string where = "edges[" + std::to_string(i) + "]";
        SolvedModel::SolvedEdge edge;
        edge.i = int_field(ej, "i", where);
        edge.j = int_field(ej, "j", where);
        if (!ej.contains("kind") || !ej.at("kind").is_string())
            throw ModelError(where + ": missing string field 'kind'");
        edge.kind = edge_kind_from(ej.at("kind").get<std::string>(), where);
        if (ej.contains("state")) edge.state = int_field(ej, "state", where);
        if (ej.contains("force")) edge.force = number_field(ej, "force", where);
        if (ej.contains("length")) edge.length = number_field(ej, "length", where);
        out.edges.push_back(edge);
    }
    if (j.contains("supports"))
        for (const auto& s : j.at("supports")) out.supports.push_back(s.get<int>());
    if (j.contains("reactions")) {
        for (std::size_t i = 0; i < j.at("reactions").size(); ++i) {
            const json& rj = j.at("reactions")[i];
            const std::string where = "reactions[" + std::to_string(i) + "]";
            SolvedModel::Reaction r;
            r.node = int_field(rj, "node", where);
            if (rj.contains("force")) r.force = vec3_from(rj.at("force"), where + ".force");
            out.reactions.push_back(r);
        }
    }
    if (j.contains("iterations")) out.iterations = j.at("iterations").get<int>();
    if (j.contains("eta")) out.eta = j.at("eta").get<double>();
    return out;
}

}  // namespace cem
