#include <doctest.h>

#include <cmath>
#include <numeric>
#include <vector>

#include "cem/autodiff.hpp"
#include "cem/constraints.hpp"
#include "support.hpp"

using namespace cem;

namespace {

// Chain objective closure over a compiled problem, callable with doubles or
// traced scalars.
template <typename Real>
Real chain_objective(const Problem& p, const std::vector<ConstraintSpec>& constraints,
                     std::span<const Real> s) {
    return objective<Real>(p.diagram, p.trails, p.sequences, p.x_template, p.map, s, constraints,
                           p.solver);
}

}  // namespace

TEST_CASE("a single product records one multiply node") {
    const std::vector<double> s{2.0, 3.0};
    const TracedEvaluation traced = evaluate_traced(
        [](std::span<const Var> v) { return v[0] * v[1]; }, s);
    CHECK(traced.value == 6.0);
    REQUIRE(traced.tape.size() == 3);  // two inputs plus the multiply
    const ad::TapeNode& mul = traced.tape.node(2);
    CHECK(mul.op == ad::Op::Mul);
    CHECK(mul.da == 3.0);
    CHECK(mul.db == 2.0);
    const std::vector<double> grad = backprop(traced);
    CHECK(grad[0] == 3.0);
    CHECK(grad[1] == 2.0);
}

TEST_CASE("chain objective trace matches the worked example") {
    const Problem p = test_support::chain_problem();
    const std::vector<ConstraintSpec> constraints = expanded_constraints(p.objective, p.trails);
    const std::vector<double> s{1.0, 1.0};

    const TracedEvaluation traced = evaluate_traced(
        [&](std::span<const Var> sv) { return chain_objective<Var>(p, constraints, sv); }, s);
    CHECK(traced.value == doctest::Approx(0.5).epsilon(1e-14));

    const std::vector<double> grad = backprop(traced);
    REQUIRE(grad.size() == 2);
    CHECK(std::abs(grad[0] + 1.0) <= 1e-12);
    CHECK(std::abs(grad[1] + 1.0) <= 1e-12);

    SUBCASE("each parameter feeds exactly one recorded solver operation") {
        for (int slot : traced.tape.inputs()) {
            const std::vector<int> children = traced.tape.children_of(slot);
            REQUIRE(children.size() == 1);
            CHECK(traced.tape.node(children[0]).op == ad::Op::Mul);
        }
    }
    SUBCASE("tape dump names the recorded operations") {
        const std::string dump = traced.tape.dump_json(traced.output_index);
        CHECK(dump.find("\"op\":\"mul\"") != std::string::npos);
        CHECK(dump.find("\"op\":\"input\"") != std::string::npos);
    }
}

TEST_CASE("constant functions leave no parameter-dependent nodes") {
    const std::vector<double> s{4.0, 5.0};
    const TracedEvaluation traced = evaluate_traced(
        [](std::span<const Var>) { return Var(7.0); }, s);
    CHECK(traced.value == 7.0);
    CHECK(traced.output_index < 0);
    const std::vector<double> grad = backprop(traced);
    CHECK(grad[0] == 0.0);
    CHECK(grad[1] == 0.0);
    CHECK(traced.tape.size() == 2);  // only the untouched input slots
}

TEST_CASE("forward differences approximate the chain gradient") {
    const Problem p = test_support::chain_problem();
    const std::vector<ConstraintSpec> constraints = expanded_constraints(p.objective, p.trails);
    const std::vector<double> s{1.0, 1.0};
    const FdGradient fd = fd_gradient(
        [&](std::span<const double> probe) { return chain_objective<double>(p, constraints, probe); },
        s, 1e-6, FdScheme::Forward);
    REQUIRE(fd.gradient.size() == 2);
    CHECK(std::abs(fd.gradient[0] + 1.0) <= 1e-5);
    CHECK(std::abs(fd.gradient[1] + 1.0) <= 1e-5);
    CHECK(fd.evaluations == 3);  // base value plus one probe per parameter
    CHECK(fd.has_base_value);
    CHECK(fd.base_value == doctest::Approx(0.5));
}

TEST_CASE("central differences are exact on quadratics up to rounding") {
    const std::vector<double> s{1.0};
    const FdGradient fd = fd_gradient(
        [](std::span<const double> v) { return v[0] * v[0]; }, s, 1e-4, FdScheme::Central);
    CHECK(std::abs(fd.gradient[0] - 2.0) <= 1e-8);
    CHECK(fd.evaluations == 2);
    CHECK_FALSE(fd.has_base_value);
}

TEST_CASE("evaluation counts follow the scheme") {
    std::vector<double> s(96, 1.0);
    long calls = 0;
    auto f = [&](std::span<const double> v) {
        calls += 1;
        return std::accumulate(v.begin(), v.end(), 0.0);
    };
    const FdGradient forward = fd_gradient(f, s, 1e-6, FdScheme::Forward);
    CHECK(forward.evaluations == 97);
    CHECK(calls == 97);
    calls = 0;
    const FdGradient central = fd_gradient(f, s, 1e-6, FdScheme::Central);
    CHECK(central.evaluations == 192);
    CHECK(calls == 192);
}

TEST_CASE("gradients re-trace at every parameter value") {
    const Problem p = test_support::chain_problem();
    const std::vector<ConstraintSpec> constraints = expanded_constraints(p.objective, p.trails);

    for (const std::vector<double> s : {std::vector<double>{1.0, 1.0}, {1.3, 0.9}}) {
        const TracedEvaluation traced = evaluate_traced(
            [&](std::span<const Var> sv) { return chain_objective<Var>(p, constraints, sv); }, s);
        const std::vector<double> ad = backprop(traced);
        const FdGradient fd = fd_gradient(
            [&](std::span<const double> probe) {
                return chain_objective<double>(p, constraints, probe);
            },
            s, 1e-6, FdScheme::Central);
        for (std::size_t i = 0; i < s.size(); ++i)
            CHECK(std::abs(ad[i] - fd.gradient[i]) <= 1e-6 * (1.0 + std::abs(ad[i])));
    }
}

TEST_CASE("random structures agree between tape and central differences") {
    std::mt19937 rng(314159);
    int direct_seen = 0, indirect_seen = 0;
    for (int trial = 0; trial < 12; ++trial) {
        const Problem p = test_support::random_problem(rng);
        const std::vector<ConstraintSpec> constraints = expanded_constraints(p.objective, p.trails);
        const DeviationClasses classes = classify_deviation_edges(p.diagram, p.sequences);
        direct_seen += classes.direct_count;
        indirect_seen += classes.indirect_count;

        const std::vector<double> s = pack(p.x_template, p.map, p.diagram);
        const TracedEvaluation traced = evaluate_traced(
            [&](std::span<const Var> sv) { return chain_objective<Var>(p, constraints, sv); }, s);
        const std::vector<double> ad = backprop(traced);
        const FdGradient fd = fd_gradient(
            [&](std::span<const double> probe) {
                return chain_objective<double>(p, constraints, probe);
            },
            s, 1e-6, FdScheme::Central);
        for (std::size_t i = 0; i < s.size(); ++i)
            CHECK(std::abs(ad[i] - fd.gradient[i]) <= 1e-6 * (1.0 + std::abs(fd.gradient[i])));
    }
    CHECK(direct_seen > 0);
    CHECK(indirect_seen > 0);
}

TEST_CASE("invalid scalar operations fail during the primal pass") {
    const std::vector<double> s{0.0};
    CHECK_THROWS_AS(evaluate_traced([](std::span<const Var> v) { return Var(1.0) / v[0]; }, s),
                    std::domain_error);
    CHECK_THROWS_AS(
        evaluate_traced([](std::span<const Var> v) { return cem::ad::sqrt(v[0] - Var(1.0)); }, s),
        std::domain_error);
    CHECK_THROWS_AS(evaluate_traced([](std::span<const Var> v) { return cem::ad::sqrt(v[0]); }, s),
                    std::domain_error);
}

TEST_CASE("tapes are confined to one evaluation context") {
    ad::Tape outer;
    ad::TapeScope scope(outer);
    ad::Tape inner;
    CHECK_THROWS_AS(ad::TapeScope{inner}, std::logic_error);
}

TEST_CASE("negative step sizes are rejected") {
    const std::vector<double> s{1.0};
    CHECK_THROWS_AS(fd_gradient([](std::span<const double> v) { return v[0]; }, s, 0.0,
                                FdScheme::Forward),
                    std::invalid_argument);
}
