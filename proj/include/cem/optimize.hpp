#pragma once

#include <span>
#include <utility>
#include <vector>

#include "cem/autodiff.hpp"
#include "cem/constraints.hpp"
#include "cem/equilibrium.hpp"
#include "cem/params.hpp"
#include "cem/topology.hpp"

namespace cem {

enum class Algorithm { GradientDescent, Lbfgs };
enum class GradMode { Ad, Fd };

struct OptimizeSettings {
    Algorithm algorithm = Algorithm::Lbfgs;
    GradMode grad = GradMode::Ad;
    FdScheme fd_scheme = FdScheme::Forward;
    double fd_step = 1e-6;
    double epsilon = 1e-6;
    int max_iter = 500;
    int lbfgs_history = 10;
};

struct IterationRecord {
    double objective = 0.0;
    double grad_norm = 0.0;
};

struct SolveReport {
    std::vector<double> s_initial;
    std::vector<double> s_final;
    double L_final = 0.0;
    double grad_norm_final = 0.0;
    int iterations = 0;
    long objective_evaluations = 0;          // all evaluations, line search included
    long gradient_evaluations = 0;           // gradient calls
    long objective_evals_in_gradients = 0;   // evaluations spent inside gradient calls
    double wall_time_seconds = 0.0;
    double gradient_time_seconds = 0.0;  // wall time spent inside gradient calls
    bool converged = false;
    bool line_search_failed = false;
    std::vector<IterationRecord> trace;
};

// A complete constrained form-finding problem.
struct Problem {
    TopologyDiagram diagram;
    TrailSet trails;
    SequenceAssignment sequences;
    DesignParameters<double> x_template;
    ParameterMap map;
    ObjectiveSpec objective;
    SolverSettings solver;
    OptimizeSettings opt;
};

// L-BFGS two-loop recursion. History pairs are (delta_s, delta_grad) from
// oldest to newest; pairs violating the curvature condition must have been
// dropped by the caller. Empty history falls back to steepest descent.
std::vector<double> lbfgs_direction(
    std::span<const std::pair<std::vector<double>, std::vector<double>>> history,
    std::span<const double> grad);

// Minimizes the penalty objective with backtracking line search, starting
// from the template parameter values. The returned state is re-solved at the
// final parameters.
std::pair<EquilibriumState<double>, SolveReport> solve(const Problem& problem);

}  // namespace cem
