#include "cem/optimize.hpp"

#include <chrono>
#include <cmath>
#include <deque>

namespace cem {

namespace {

double dot(std::span<const double> a, std::span<const double> b) {
    double out = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) out += a[i] * b[i];
    return out;
}

double norm2(std::span<const double> a) { return std::sqrt(dot(a, a)); }

}  // namespace

std::vector<double> lbfgs_direction(
    std::span<const std::pair<std::vector<double>, std::vector<double>>> history,
    std::span<const double> grad) {
    std::vector<double> q(grad.begin(), grad.end());
    if (history.empty()) {
        for (double& v : q) v = -v;
        return q;
    }

    const std::size_t m = history.size();
    std::vector<double> rho(m), alpha(m);
    for (std::size_t i = 0; i < m; ++i)
        rho[i] = 1.0 / dot(history[i].first, history[i].second);

    for (std::size_t ii = m; ii-- > 0;) {
        alpha[ii] = rho[ii] * dot(history[ii].first, q);
        for (std::size_t k = 0; k < q.size(); ++k) q[k] -= alpha[ii] * history[ii].second[k];
    }

    const auto& [s_new, y_new] = history.back();
    const double gamma = dot(s_new, y_new) / dot(y_new, y_new);
    for (double& v : q) v *= gamma;

    for (std::size_t i = 0; i < m; ++i) {
        const double beta = rho[i] * dot(history[i].second, q);
        for (std::size_t k = 0; k < q.size(); ++k) q[k] += history[i].first[k] * (alpha[i] - beta);
    }

    for (double& v : q) v = -v;
    return q;
}

std::pair<EquilibriumState<double>, SolveReport> solve(const Problem& problem) {
    const auto t_start = std::chrono::steady_clock::now();
    check_parameter_map(problem.map, problem.diagram);

    const std::vector<ConstraintSpec> constraints =
        expanded_constraints(problem.objective, problem.trails);
    if (constraints.empty()) throw ModelError("objective has no constraints");

    SolveReport report;

    auto value = [&](std::span<const double> s) -> double {
        report.objective_evaluations += 1;
        return objective<double>(problem.diagram, problem.trails, problem.sequences,
                                 problem.x_template, problem.map, s, constraints, problem.solver);
    };

    // Gradient of L at s; also yields L(s). AD costs one traced evaluation,
    // FD one evaluation per probe.
    auto gradient = [&](std::span<const double> s, double& L_out) -> std::vector<double> {
        report.gradient_evaluations += 1;
        const auto g_start = std::chrono::steady_clock::now();
        struct Timer {
            decltype(g_start) start;
            double& sink;
            ~Timer() {
                sink += std::chrono::duration<double>(std::chrono::steady_clock::now() - start)
                            .count();
            }
        } timer{g_start, report.gradient_time_seconds};
        if (problem.opt.grad == GradMode::Ad) {
            const TracedEvaluation traced = evaluate_traced(
                [&](std::span<const Var> sv) {
                    return objective<Var>(problem.diagram, problem.trails, problem.sequences,
                                          problem.x_template, problem.map, sv, constraints,
                                          problem.solver);
                },
                s);
            report.objective_evaluations += 1;
            report.objective_evals_in_gradients += 1;
            L_out = traced.value;
            return backprop(traced);
        }
        long before = 0;
        auto probe = [&](std::span<const double> p) -> double {
            before += 1;
            return objective<double>(problem.diagram, problem.trails, problem.sequences,
                                     problem.x_template, problem.map, p, constraints,
                                     problem.solver);
        };
        const FdGradient fd = fd_gradient(probe, s, problem.opt.fd_step, problem.opt.fd_scheme);
        report.objective_evaluations += fd.evaluations;
        report.objective_evals_in_gradients += fd.evaluations;
        if (fd.has_base_value) {
            L_out = fd.base_value;
        } else {
            L_out = value(s);
        }
        return fd.gradient;
    };

    std::vector<double> s = pack(problem.x_template, problem.map, problem.diagram);
    clamp_to_bounds(problem.map, s);
    report.s_initial = s;

    const double eps = problem.opt.epsilon;
    std::deque<std::pair<std::vector<double>, std::vector<double>>> history;
    const std::size_t history_cap = static_cast<std::size_t>(std::max(1, problem.opt.lbfgs_history));

    double L = 0.0;
    std::vector<double> grad = gradient(s, L);
    double gnorm = norm2(grad);
    report.trace.push_back({L, gnorm});

    int iter = 0;
    for (; iter < problem.opt.max_iter; ++iter) {
        if (L < eps || gnorm < eps) break;

        std::vector<double> direction;
        if (problem.opt.algorithm == Algorithm::Lbfgs && !history.empty()) {
            std::vector<std::pair<std::vector<double>, std::vector<double>>> hist(history.begin(),
                                                                                  history.end());
            direction = lbfgs_direction(hist, grad);
        } else {
            direction.assign(grad.size(), 0.0);
            for (std::size_t i = 0; i < grad.size(); ++i) direction[i] = -grad[i];
        }
        if (dot(direction, grad) >= 0.0) {
            // Not a descent direction; drop the history and restart steepest.
            history.clear();
            for (std::size_t i = 0; i < grad.size(); ++i) direction[i] = -grad[i];
        }

        // Backtracking Armijo line search with projection onto the bounds.
        const double c1 = 1e-4;
        double step = 1.0;
        bool accepted = false;
        std::vector<double> s_next(s.size());
        double L_next = 0.0;
        for (int halving = 0; halving <= 40; ++halving) {
            for (std::size_t i = 0; i < s.size(); ++i) s_next[i] = s[i] + step * direction[i];
            clamp_to_bounds(problem.map, s_next);
            std::vector<double> actual(s.size());
            for (std::size_t i = 0; i < s.size(); ++i) actual[i] = s_next[i] - s[i];
            const double predicted = dot(grad, actual);
            if (norm2(actual) == 0.0) break;  // projection pinned the step
            double candidate;
            try {
                candidate = value(s_next);
            } catch (const SolverError&) {
                step *= 0.5;  // stepped into a degenerate configuration
                continue;
            }
            if (candidate <= L + c1 * predicted) {
                accepted = true;
                L_next = candidate;
                break;
            }
            step *= 0.5;
        }
        if (!accepted) {
            report.line_search_failed = true;
            break;
        }

        double L_check = 0.0;
        std::vector<double> grad_next = gradient(s_next, L_check);

        std::vector<double> delta_s(s.size()), delta_g(s.size());
        for (std::size_t i = 0; i < s.size(); ++i) {
            delta_s[i] = s_next[i] - s[i];
            delta_g[i] = grad_next[i] - grad[i];
        }
        if (dot(delta_s, delta_g) > 0.0) {
            history.emplace_back(std::move(delta_s), std::move(delta_g));
            if (history.size() > history_cap) history.pop_front();
        }

        s = std::move(s_next);
        L = L_next;
        grad = std::move(grad_next);
        gnorm = norm2(grad);
        report.trace.push_back({L, gnorm});
    }

    report.iterations = iter;
    report.s_final = s;
    report.L_final = L;
    report.grad_norm_final = gnorm;
    report.converged = (L < eps) || (gnorm < eps);

    const DesignParameters<double> x_final =
        unpack<double>(std::span<const double>(s), problem.map, problem.x_template, problem.diagram);
    EquilibriumState<double> state =
        form_find(problem.diagram, problem.trails, problem.sequences, x_final, problem.solver);

    report.wall_time_seconds =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t_start).count();
    return {std::move(state), std::move(report)};
}

}  // namespace cem
