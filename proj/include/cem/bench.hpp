#pragma once

#include <string>
#include <vector>

#include "cem/model.hpp"

namespace cem {

// Self-stressed spoke wheel with 2^n_exp sides: perimeter deviation edges in
// tension, diameter spokes in compression, auxiliary trails on every node,
// every deviation force an optimization parameter.
ModelDocument gen_wheel(int n_exp, double radius = 1.0);

struct BridgeDims {
    double chord_spacing = 1.0;   // longitudinal node spacing
    double half_width = 1.0;      // chord offset from the deck centerline
    double chord_height = 1.0;    // chord origin height above the deck
    double plan_camber = 0.3;     // in-plan bow of the deck centerline
};

// Curved-in-plan deck hung between two longitudinal chords. Auxiliary trails
// only at the deck (hanger tip) nodes; vertical line-ray targets on the four
// chord supports; every deviation force an optimization parameter.
ModelDocument gen_bridge(int n_hangers, const BridgeDims& dims = {});

// Worked spiral staircase: 18 ribs between a tension chord and a compression
// chord, anchor position target, member force capacity target, per-rib plane
// constraints and a line-ray target on the compression-chord support.
ModelDocument staircase_document();

struct BenchRow {
    std::string family;
    int size = 0;
    int params = 0;
    std::string grad;
    std::string algo;
    int iters = 0;
    long evals = 0;
    double seconds = 0.0;
    double L_final = 0.0;
    bool converged = false;
};

struct BenchmarkReport {
    std::vector<BenchRow> rows;
};

struct BenchConfig {
    std::string family = "wheel";  // wheel or bridge
    std::vector<int> sizes;        // wheel: n_exp, bridge: hanger count
    std::vector<GradMode> grads{GradMode::Ad};
    Algorithm algorithm = Algorithm::Lbfgs;
    FdScheme fd_scheme = FdScheme::Forward;
    double fd_step = 1e-6;
    int max_iter = 100;
    double epsilon = 1e-6;
    int repeats = 1;  // wall time keeps the fastest repeat
};

BenchmarkReport run_benchmark(const BenchConfig& config);

// Optional per-row access to the solved states, for invariant checks.
struct BenchRun {
    BenchRow row;
    Problem problem;
    EquilibriumState<double> state;
    SolveReport report;
};

std::vector<BenchRun> run_benchmark_detailed(const BenchConfig& config);

std::string to_csv(const BenchmarkReport& report);

}  // namespace cem
