#include <doctest.h>

#include <cmath>
#include <vector>

#include "cem/optimize.hpp"
#include "support.hpp"

using namespace cem;

TEST_CASE("parameter packing round-trips through the design parameters") {
    const Problem p = test_support::chain_problem();
    const std::vector<double> s{1.25, 0.75};
    const DesignParameters<double> x =
        unpack<double>(std::span<const double>(s), p.map, p.x_template, p.diagram);
    CHECK(x.trail_lengths[static_cast<std::size_t>(p.diagram.find_edge(1, 2))] == 1.25);
    CHECK(x.trail_lengths[static_cast<std::size_t>(p.diagram.find_edge(2, 3))] == 0.75);
    // Unlisted entries stay at the template values.
    CHECK(x.loads[static_cast<std::size_t>(p.diagram.index_of(1))].x ==
          p.x_template.loads[static_cast<std::size_t>(p.diagram.index_of(1))].x);
    const std::vector<double> packed = pack(x, p.map, p.diagram);
    CHECK(packed == s);
}

TEST_CASE("an empty map is the identity on the template") {
    const Problem p = test_support::chain_problem();
    const ParameterMap empty;
    const DesignParameters<double> x =
        unpack<double>(std::span<const double>{}, empty, p.x_template, p.diagram);
    CHECK(x.trail_lengths == p.x_template.trail_lengths);
    CHECK(pack(x, empty, p.diagram).empty());
}

TEST_CASE("origin coordinates can be restricted to chosen axes") {
    const Problem base = test_support::chain_problem();
    ParameterMap map;
    for (int axis : {1, 2}) {  // origin may move in Y and Z only
        ParamSlot slot;
        slot.kind = ParamKind::OriginCoordinate;
        slot.node = 1;
        slot.axis = axis;
        map.slots.push_back(slot);
    }
    check_parameter_map(map, base.diagram);
    const std::vector<double> s{0.4, -0.2};
    const DesignParameters<double> x =
        unpack<double>(std::span<const double>(s), map, base.x_template, base.diagram);
    const std::size_t origin = static_cast<std::size_t>(base.diagram.index_of(1));
    CHECK(x.origin_positions[origin].x == base.x_template.origin_positions[origin].x);
    CHECK(x.origin_positions[origin].y == 0.4);
    CHECK(x.origin_positions[origin].z == -0.2);
}

TEST_CASE("bounds are validated, enforced and projected") {
    const Problem p = test_support::chain_problem();
    SUBCASE("inverted bounds are rejected") {
        ParameterMap bad = p.map;
        bad.slots[0].lower = 2.0;
        bad.slots[0].upper = 1.0;
        CHECK_THROWS_AS(check_parameter_map(bad, p.diagram), ModelError);
    }
    SUBCASE("unpack with enforcement rejects out-of-bound values") {
        const std::vector<double> s{1e-6, 1.0};  // below the 1e-3 length floor
        CHECK_THROWS_AS(
            unpack<double>(std::span<const double>(s), p.map, p.x_template, p.diagram, true),
            ModelError);
    }
    SUBCASE("projection clamps onto the box") {
        std::vector<double> s{-5.0, 7.0};
        ParameterMap map = p.map;
        map.slots[1].upper = 2.0;
        clamp_to_bounds(map, s);
        CHECK(s[0] == 1e-3);
        CHECK(s[1] == 2.0);
    }
    SUBCASE("duplicate slots are rejected") {
        ParameterMap dup = p.map;
        dup.slots.push_back(dup.slots[0]);
        CHECK_THROWS_AS(check_parameter_map(dup, p.diagram), ModelError);
    }
}

TEST_CASE("the two-loop recursion produces descent directions") {
    SUBCASE("empty history falls back to steepest descent") {
        const std::vector<double> grad{2.0, 0.0};
        const std::vector<double> d = lbfgs_direction({}, grad);
        CHECK(d[0] == -2.0);
        CHECK(d[1] == 0.0);
    }
    SUBCASE("identity curvature reproduces the Newton step") {
        const std::vector<std::pair<std::vector<double>, std::vector<double>>> history{
            {{1.0, 0.0}, {1.0, 0.0}}};
        const std::vector<double> grad{0.3, 0.7};
        const std::vector<double> d = lbfgs_direction(history, grad);
        CHECK(d[0] == doctest::Approx(-0.3));
        CHECK(d[1] == doctest::Approx(-0.7));
    }
    SUBCASE("directions oppose the gradient") {
        const std::vector<std::pair<std::vector<double>, std::vector<double>>> history{
            {{0.5, 0.1}, {0.4, 0.3}}, {{-0.2, 0.4}, {-0.1, 0.5}}};
        const std::vector<double> grad{1.0, -2.0};
        const std::vector<double> d = lbfgs_direction(history, grad);
        CHECK(d[0] * grad[0] + d[1] * grad[1] < 0.0);
    }
}

TEST_CASE("the chain optimizes onto its target position") {
    const Problem p = test_support::chain_problem();
    auto [state, report] = solve(p);
    CHECK(report.converged);
    CHECK(report.L_final < 1e-6);
    CHECK(report.iterations <= 25);
    const Vec3d p3 = state.positions[static_cast<std::size_t>(p.diagram.index_of(3))];
    CHECK(std::abs(p3.x - 3.0) <= 1e-6);
    CHECK(std::abs(p3.y) <= 1e-6);
    CHECK(report.s_final[0] + report.s_final[1] == doctest::Approx(3.0).epsilon(1e-6));

    SUBCASE("the line search never increases the objective") {
        for (std::size_t i = 1; i < report.trace.size(); ++i)
            CHECK(report.trace[i].objective <= report.trace[i - 1].objective + 1e-15);
    }
    SUBCASE("objective evaluations inside gradients follow the mode") {
        CHECK(report.gradient_evaluations > 0);
        CHECK(report.objective_evals_in_gradients == report.gradient_evaluations);
    }
}

TEST_CASE("an already optimal start converges at iteration zero") {
    Problem p = test_support::chain_problem();
    p.objective.constraints[0].target_vec = {2.0, 0.0, 0.0};
    auto [state, report] = solve(p);
    CHECK(report.converged);
    CHECK(report.iterations == 0);
    CHECK(report.L_final == 0.0);
}

TEST_CASE("contradictory targets stop at a vanishing gradient with positive loss") {
    Problem p = test_support::chain_problem();
    ConstraintSpec other = p.objective.constraints[0];
    other.target_vec = {1.0, 0.0, 0.0};
    p.objective.constraints.push_back(other);
    auto [state, report] = solve(p);
    CHECK(report.grad_norm_final < p.opt.epsilon);
    CHECK(report.L_final > 0.1);
    CHECK(report.converged);
}

TEST_CASE("finite-difference mode books one probe per parameter and step") {
    Problem p = test_support::chain_problem();
    p.opt.grad = GradMode::Fd;
    p.opt.fd_scheme = FdScheme::Forward;
    auto [state, report] = solve(p);
    CHECK(report.converged);
    const long per_gradient = static_cast<long>(p.map.size()) + 1;
    CHECK(report.objective_evals_in_gradients == report.gradient_evaluations * per_gradient);
}

TEST_CASE("tape and difference gradients reach the same solution") {
    Problem ad = test_support::chain_problem();
    Problem fd = test_support::chain_problem();
    fd.opt.grad = GradMode::Fd;
    fd.opt.fd_scheme = FdScheme::Central;
    auto [state_ad, report_ad] = solve(ad);
    auto [state_fd, report_fd] = solve(fd);
    CHECK(report_ad.converged);
    CHECK(report_fd.converged);
    REQUIRE(report_ad.s_final.size() == report_fd.s_final.size());
    for (std::size_t i = 0; i < report_ad.s_final.size(); ++i)
        CHECK(std::abs(report_ad.s_final[i] - report_fd.s_final[i]) < 1e-4);
}

TEST_CASE("gradient descent also solves the chain") {
    Problem p = test_support::chain_problem();
    p.opt.algorithm = Algorithm::GradientDescent;
    p.opt.max_iter = 2000;
    auto [state, report] = solve(p);
    CHECK(report.converged);
    CHECK(report.L_final < 1e-6);
}

TEST_CASE("a problem without constraints is rejected") {
    Problem p = test_support::chain_problem();
    p.objective.constraints.clear();
    CHECK_THROWS_AS(solve(p), ModelError);
}
