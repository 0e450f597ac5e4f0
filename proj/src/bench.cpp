#include "cem/bench.hpp"

#include <cmath>
#include <cstdio>
#include <numbers>

#include "cem/errors.hpp"

namespace cem {

namespace {

ParamSlot force_slot(int i, int j) {
    ParamSlot slot;
    slot.kind = ParamKind::DeviationForce;
    slot.edge_i = i;
    slot.edge_j = j;
    slot.lower = 0.0;
    return slot;
}

ParamSlot length_slot(int i, int j) {
    ParamSlot slot;
    slot.kind = ParamKind::TrailLength;
    slot.edge_i = i;
    slot.edge_j = j;
    slot.lower = 1e-3;
    return slot;
}

EdgeSpec deviation(int i, int j, int state, double force) {
    EdgeSpec e;
    e.i = i;
    e.j = j;
    e.kind = EdgeKind::Deviation;
    e.state = state;
    e.force = force;
    return e;
}

EdgeSpec trail(int i, int j, int state, double length) {
    EdgeSpec e;
    e.i = i;
    e.j = j;
    e.kind = EdgeKind::Trail;
    e.state = state;
    e.length = length;
    return e;
}

}  // namespace

ModelDocument gen_wheel(int n_exp, double radius) {
    if (n_exp < 2 || n_exp > 8)
        throw ModelError("wheel exponent must be between 2 and 8");
    if (!(radius > 0.0)) throw ModelError("wheel radius must be positive");

    const int m = 1 << n_exp;
    ModelDocument doc;
    for (int i = 0; i < m; ++i) {
        const double theta = 2.0 * std::numbers::pi * static_cast<double>(i) / m;
        NodeSpec node;
        node.id = i + 1;
        node.position = {radius * std::cos(theta), radius * std::sin(theta), 0.0};
        doc.topology.nodes.push_back(node);
    }
    // Perimeter in tension, diameter spokes in compression.
    for (int i = 0; i < m; ++i) {
        const int a = i + 1;
        const int b = (i + 1) % m + 1;
        doc.topology.edges.push_back(deviation(a, b, +1, 1.0));
        doc.parameters.slots.push_back(force_slot(a, b));
    }
    for (int i = 0; i < m / 2; ++i) {
        const int a = i + 1;
        const int b = i + 1 + m / 2;
        doc.topology.edges.push_back(deviation(a, b, -1, 1.0));
        doc.parameters.slots.push_back(force_slot(a, b));
    }

    doc.auto_auxiliary = true;
    doc.opt.epsilon = 1e-10;  // keeps the residual auxiliary forces small
    doc.constraint_epsilon = doc.opt.epsilon;
    doc.opt.max_iter = 500;
    return doc;
}

ModelDocument gen_bridge(int n_hangers, const BridgeDims& dims) {
    if (n_hangers < 4 || n_hangers % 2 != 0)
        throw ModelError("hanger count must be an even number of at least 4");

    const int h = n_hangers;
    // Node ids: left chord 1..h+2 (support, h interior, support), right chord
    // h+3..2h+4, deck tips 2h+5..3h+4.
    const int left0 = 1;
    const int right0 = h + 3;
    const int tip0 = 2 * h + 5;
    const double span = (h + 1) * dims.chord_spacing;
    auto center_y = [&](double x) {
        return dims.plan_camber * std::sin(std::numbers::pi * x / span);
    };
    auto chord_pos = [&](int base, int k) -> Vec3d {
        const double x = k * dims.chord_spacing;
        const double side = base == left0 ? -1.0 : 1.0;
        return {x, center_y(x) + side * dims.half_width, dims.chord_height};
    };

    ModelDocument doc;
    for (int base : {left0, right0}) {
        for (int k = 0; k <= h + 1; ++k) {
            NodeSpec node;
            node.id = base + k;
            node.position = chord_pos(base, k);
            doc.topology.nodes.push_back(node);
        }
    }
    for (int i = 1; i <= h; ++i) {
        const double x = i * dims.chord_spacing;
        NodeSpec tip;
        tip.id = tip0 + (i - 1);
        tip.position = {x, center_y(x), 0.0};
        tip.load = {0.0, 0.0, -1.0};
        doc.topology.nodes.push_back(tip);
    }

    // Chord trail edges, split at midspan so each chord is two trails meeting
    // at a deviation edge.
    for (int base : {left0, right0}) {
        for (int k = 0; k <= h; ++k) {
            if (k == h / 2) continue;  // midspan gap carries a deviation edge
            const Vec3d a = chord_pos(base, k);
            const Vec3d b = chord_pos(base, k + 1);
            // Slightly longer than the plan distance so the sagging chord can
            // still land its supports on the line rays.
            doc.topology.edges.push_back(trail(base + k, base + k + 1, +1, 1.08 * norm(b - a)));
        }
    }

    auto add_dev = [&](int i, int j, int state, double force) {
        doc.topology.edges.push_back(deviation(i, j, state, force));
        doc.parameters.slots.push_back(force_slot(i, j));
    };

    const int mid_l = left0 + h / 2;
    const int mid_r = right0 + h / 2;
    // Midspan splices carry the opposite state of the chord trails so the two
    // half-trails propagate away from each other.
    add_dev(mid_l, mid_l + 1, -1, 1.0);
    add_dev(mid_r, mid_r + 1, -1, 1.0);
    for (int i = 1; i <= h; ++i) add_dev(left0 + i, right0 + i, +1, 0.1);  // transversals
    add_dev(left0, right0, +1, 0.1);  // end transversals between support pairs
    add_dev(left0 + h + 1, right0 + h + 1, +1, 0.1);
    add_dev(mid_l, mid_r + 1, +1, 0.1);  // midspan cross braces
    add_dev(mid_l + 1, mid_r, +1, 0.1);
    for (int i = 1; i <= h; ++i) {  // hangers down to the deck tips
        add_dev(left0 + i, tip0 + (i - 1), -1, 0.7);
        add_dev(right0 + i, tip0 + (i - 1), -1, 0.7);
    }

    doc.topology.supports = {left0, left0 + h + 1, right0, right0 + h + 1};

    // Vertical line rays through the nominal support plan positions.
    for (int base : {left0, right0}) {
        for (int k : {0, h + 1}) {
            ConstraintSpec c;
            c.kind = ConstraintKind::NodeOnLine;
            c.node = base + k;
            const Vec3d nominal = chord_pos(base, k);
            c.point = {nominal.x, nominal.y, 0.0};
            c.direction = {0.0, 0.0, 1.0};
            doc.constraints.push_back(c);
        }
    }

    doc.auto_auxiliary = true;  // the deck tips get the auxiliary trails
    doc.solver.eta_min = 1e-12;
    doc.opt.max_iter = 100;
    return doc;
}

ModelDocument staircase_document() {
    const int ribs = 18;
    const double rise = 3.0;
    const double r_outer = 4.0;  // tension chord, anchored at [0, 4, 3]
    const double r_inner = 2.0;  // compression chord
    auto angle = [&](int i) {
        return -0.5 * std::numbers::pi +
               std::numbers::pi * static_cast<double>(i) / (ribs - 1);
    };
    auto chord_pos = [&](double r, int i) -> Vec3d {
        const double th = angle(i);
        return {r * std::cos(th), r * std::sin(th),
                rise * static_cast<double>(i) / (ribs - 1)};
    };
    auto outer_id = [&](int i) { return 1 + i; };
    auto inner_id = [&](int i) { return 1 + ribs + i; };

    ModelDocument doc;
    for (int i = 0; i < ribs; ++i) {
        NodeSpec node;
        node.id = outer_id(i);
        node.position = chord_pos(r_outer, i);
        doc.topology.nodes.push_back(node);
    }
    for (int i = 0; i < ribs; ++i) {
        NodeSpec node;
        node.id = inner_id(i);
        node.position = chord_pos(r_inner, i);
        doc.topology.nodes.push_back(node);
    }

    const int mid = ribs / 2 - 1;  // chord splice between rib mid and mid+1
    for (int i = 0; i + 1 < ribs; ++i) {
        if (i == mid) continue;
        doc.topology.edges.push_back(trail(outer_id(i), outer_id(i + 1), +1,
                                           norm(chord_pos(r_outer, i + 1) - chord_pos(r_outer, i))));
        doc.parameters.slots.push_back(length_slot(outer_id(i), outer_id(i + 1)));
    }
    for (int i = 0; i + 1 < ribs; ++i) {
        if (i == mid) continue;
        doc.topology.edges.push_back(trail(inner_id(i), inner_id(i + 1), -1,
                                           norm(chord_pos(r_inner, i + 1) - chord_pos(r_inner, i))));
        doc.parameters.slots.push_back(length_slot(inner_id(i), inner_id(i + 1)));
    }

    auto add_dev = [&](int i, int j, int state, double force) {
        doc.topology.edges.push_back(deviation(i, j, state, force));
        doc.parameters.slots.push_back(force_slot(i, j));
    };
    // Splices carry the opposite state of their chord so both half-trails
    // propagate away from the middle.
    add_dev(outer_id(mid), outer_id(mid + 1), -1, 30.0);
    add_dev(inner_id(mid), inner_id(mid + 1), +1, 30.0);
    // Radial ribs curve both chords around the staircase axis.
    for (int i = 0; i < ribs; ++i) add_dev(outer_id(i), inner_id(i), +1, 6.0);

    for (int node : {outer_id(mid), outer_id(mid + 1), inner_id(mid), inner_id(mid + 1)}) {
        ParamSlot slot;
        slot.kind = ParamKind::OriginCoordinate;
        slot.node = node;
        slot.axis = 2;
        doc.parameters.slots.push_back(slot);
    }

    doc.topology.supports = {outer_id(0), outer_id(ribs - 1), inner_id(0), inner_id(ribs - 1)};

    {
        ConstraintSpec anchor;
        anchor.kind = ConstraintKind::NodePosition;
        anchor.node = outer_id(ribs - 1);
        anchor.target_vec = {0.0, r_outer, rise};
        doc.constraints.push_back(anchor);
    }
    {
        ConstraintSpec capacity;  // member capacity on the last chord segment
        capacity.kind = ConstraintKind::TrailForce;
        capacity.edge_i = outer_id(ribs - 2);
        capacity.edge_j = outer_id(ribs - 1);
        capacity.target_scalar = 35.0;
        doc.constraints.push_back(capacity);
    }
    {
        ConstraintSpec ray;  // compression-chord support slides on a vertical ray
        ray.kind = ConstraintKind::NodeOnLine;
        ray.node = inner_id(ribs - 1);
        ray.point = {0.0, r_inner, 0.0};
        ray.direction = {0.0, 0.0, 1.0};
        doc.constraints.push_back(ray);
    }
    for (int i = 0; i < ribs; ++i) {
        const double th = angle(i);
        for (int node : {outer_id(i), inner_id(i)}) {
            ConstraintSpec plane;  // both chord nodes stay in the rib's vertical plane
            plane.kind = ConstraintKind::NodeOnPlane;
            plane.node = node;
            plane.point = {0.0, 0.0, 0.0};
            plane.direction = {-std::sin(th), std::cos(th), 0.0};
            doc.constraints.push_back(plane);
        }
    }

    doc.auto_auxiliary = false;
    doc.opt.epsilon = 1e-12;
    doc.constraint_epsilon = doc.opt.epsilon;
    doc.opt.max_iter = 3000;
    return doc;
}

std::vector<BenchRun> run_benchmark_detailed(const BenchConfig& config) {
    std::vector<BenchRun> runs;
    for (int size : config.sizes) {
        ModelDocument doc =
            config.family == "wheel"
                ? gen_wheel(size)
                : (config.family == "bridge"
                       ? gen_bridge(size)
                       : throw ModelError("unknown benchmark family '" + config.family + "'"));
        for (GradMode grad : config.grads) {
            Problem problem = compile_model(doc);
            problem.opt.algorithm = config.algorithm;
            problem.opt.grad = grad;
            problem.opt.fd_scheme = config.fd_scheme;
            problem.opt.fd_step = config.fd_step;
            problem.opt.max_iter = config.max_iter;
            problem.opt.epsilon = config.epsilon;

            BenchRun run;
            run.problem = problem;
            double best_seconds = 0.0;
            for (int rep = 0; rep < std::max(1, config.repeats); ++rep) {
                auto [state, report] = solve(problem);
                if (rep == 0 || report.wall_time_seconds < best_seconds)
                    best_seconds = report.wall_time_seconds;
                run.state = std::move(state);
                run.report = std::move(report);
            }

            run.row.family = config.family;
            run.row.size = size;
            run.row.params = static_cast<int>(problem.map.size());
            run.row.grad = grad == GradMode::Ad ? "ad" : "fd";
            run.row.algo = config.algorithm == Algorithm::Lbfgs ? "lbfgs" : "gd";
            run.row.iters = run.report.iterations;
            run.row.evals = run.report.objective_evaluations;
            run.row.seconds = best_seconds;
            run.row.L_final = run.report.L_final;
            run.row.converged = run.report.converged;
            runs.push_back(std::move(run));
        }
    }
    return runs;
}

BenchmarkReport run_benchmark(const BenchConfig& config) {
    BenchmarkReport report;
    for (BenchRun& run : run_benchmark_detailed(config)) report.rows.push_back(run.row);
    return report;
}

std::string to_csv(const BenchmarkReport& report) {
    std::string out = "family,size,params,grad,algo,iters,evals,seconds,L_final,converged\n";
    char buf[256];
    for (const BenchRow& row : report.rows) {
        std::snprintf(buf, sizeof(buf), "%s,%d,%d,%s,%s,%d,%ld,%.9g,%.17g,%s\n",
                      row.family.c_str(), row.size, row.params, row.grad.c_str(),
                      row.algo.c_str(), row.iters, row.evals, row.seconds, row.L_final,
                      row.converged ? "true" : "false");
        out += buf;
    }
    return out;
}

}  // namespace cem
