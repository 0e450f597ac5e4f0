#pragma once

#include <span>
#include <utility>
#include <vector>

#include "cem/tape.hpp"

namespace cem {

// Forward evaluation trace of a scalar function of the parameter vector.
struct TracedEvaluation {
    double value = 0.0;
    int output_index = -1;  // negative when the output never touched s
    ad::Tape tape;
};

// Evaluates f at s while recording every elementary operation that touches
// the parameters. Control flow is traced through: the branches taken at the
// primal values are what ends up on the tape.
template <typename F>
TracedEvaluation evaluate_traced(F&& f, std::span<const double> s) {
    TracedEvaluation result;
    {
        ad::TapeScope scope(result.tape);
        std::vector<Var> vars;
        vars.reserve(s.size());
        for (double v : s) vars.push_back(Var::input(v));
        const Var out = std::forward<F>(f)(std::span<const Var>(vars));
        result.value = out.v;
        result.output_index = out.idx;
    }
    return result;
}

// Single reverse pass over the tape; returns the adjoints of the input slots.
inline std::vector<double> backprop(const TracedEvaluation& traced) {
    return traced.tape.gradient(traced.output_index);
}

enum class FdScheme { Forward, Central };

struct FdGradient {
    std::vector<double> gradient;
    long evaluations = 0;      // objective evaluations spent on this gradient
    double base_value = 0.0;   // f(s); only evaluated by the forward scheme
    bool has_base_value = false;
};

// Finite-difference gradient baseline: |s|+1 evaluations forward, 2|s|
// central.
template <typename F>
FdGradient fd_gradient(F&& f, std::span<const double> s, double h, FdScheme scheme) {
    if (!(h > 0.0)) throw std::invalid_argument("fd step size must be positive");
    FdGradient result;
    result.gradient.resize(s.size());
    std::vector<double> probe(s.begin(), s.end());
    if (scheme == FdScheme::Forward) {
        const double f0 = f(std::span<const double>(probe));
        result.evaluations += 1;
        result.base_value = f0;
        result.has_base_value = true;
        for (std::size_t i = 0; i < s.size(); ++i) {
            probe[i] = s[i] + h;
            const double fp = f(std::span<const double>(probe));
            result.evaluations += 1;
            probe[i] = s[i];
            result.gradient[i] = (fp - f0) / h;
        }
    } else {
        for (std::size_t i = 0; i < s.size(); ++i) {
            probe[i] = s[i] + h;
            const double fp = f(std::span<const double>(probe));
            probe[i] = s[i] - h;
            const double fm = f(std::span<const double>(probe));
            probe[i] = s[i];
            result.evaluations += 2;
            result.gradient[i] = (fp - fm) / (2.0 * h);
        }
    }
    return result;
}

}  // namespace cem
