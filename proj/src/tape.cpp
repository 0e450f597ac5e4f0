#include "cem/tape.hpp"

#include <cmath>
#include <sstream>

namespace cem::ad {

namespace {
thread_local Tape* g_active_tape = nullptr;
}

const char* op_name(Op op) {
    switch (op) {
        case Op::Input: return "input";
        case Op::Add: return "add";
        case Op::Sub: return "sub";
        case Op::Mul: return "mul";
        case Op::Div: return "div";
        case Op::Sqrt: return "sqrt";
    }
    return "?";
}

int Tape::add_input(double value) {
    const int idx = static_cast<int>(nodes_.size());
    nodes_.push_back(TapeNode{Op::Input, -1, -1, 0.0, 0.0, value});
    inputs_.push_back(idx);
    return idx;
}

int Tape::record(Op op, int a, int b, double da, double db, double value) {
    const int idx = static_cast<int>(nodes_.size());
    nodes_.push_back(TapeNode{op, a, b, da, db, value});
    return idx;
}

std::vector<int> Tape::children_of(int index) const {
    std::vector<int> children;
    for (std::size_t i = 0; i < nodes_.size(); ++i) {
        if (nodes_[i].a == index || nodes_[i].b == index)
            children.push_back(static_cast<int>(i));
    }
    return children;
}

std::vector<double> Tape::adjoints(int output_index) const {
    std::vector<double> adj(nodes_.size(), 0.0);
    if (output_index < 0) return adj;
    adj[static_cast<std::size_t>(output_index)] = 1.0;
    for (int i = output_index; i >= 0; --i) {
        const TapeNode& n = nodes_[static_cast<std::size_t>(i)];
        const double bar = adj[static_cast<std::size_t>(i)];
        if (bar == 0.0) continue;
        if (n.a >= 0) adj[static_cast<std::size_t>(n.a)] += bar * n.da;
        if (n.b >= 0) adj[static_cast<std::size_t>(n.b)] += bar * n.db;
    }
    return adj;
}

std::vector<double> Tape::gradient(int output_index) const {
    const std::vector<double> adj = adjoints(output_index);
    std::vector<double> grad(inputs_.size(), 0.0);
    for (std::size_t i = 0; i < inputs_.size(); ++i)
        grad[i] = adj[static_cast<std::size_t>(inputs_[i])];
    return grad;
}

std::string Tape::dump_json(int output_index) const {
    std::ostringstream out;
    out.precision(17);
    out << "{\"output\":" << output_index << ",\"nodes\":[";
    for (std::size_t i = 0; i < nodes_.size(); ++i) {
        const TapeNode& n = nodes_[i];
        if (i > 0) out << ",";
        out << "{\"index\":" << i << ",\"op\":\"" << op_name(n.op) << "\""
            << ",\"parents\":[" << n.a << "," << n.b << "]"
            << ",\"partials\":[" << n.da << "," << n.db << "]"
            << ",\"value\":" << n.value << "}";
    }
    out << "]}";
    return out.str();
}

void Tape::clear() {
    nodes_.clear();
    inputs_.clear();
}

Tape* active_tape() { return g_active_tape; }

TapeScope::TapeScope(Tape& tape) : previous_(g_active_tape) {
    if (previous_ != nullptr)
        throw std::logic_error("nested tape scopes are not supported");
    g_active_tape = &tape;
}

TapeScope::~TapeScope() { g_active_tape = previous_; }

Var Var::input(double value) {
    Tape* tape = g_active_tape;
    if (tape == nullptr)
        throw std::logic_error("Var::input requires an active tape");
    Var var;
    var.v = value;
    var.idx = tape->add_input(value);
    return var;
}

namespace {

Var make_node(Op op, const Var& a, const Var& b, double da, double db, double value) {
    if (g_active_tape == nullptr)
        throw std::logic_error("taped Var used outside of its tape scope");
    Var out;
    out.v = value;
    out.idx = g_active_tape->record(op, a.idx, b.idx, da, db, value);
    return out;
}

}  // namespace

Var operator+(const Var& a, const Var& b) {
    if (!a.taped() && !b.taped()) return Var(a.v + b.v);
    if (!a.taped() && a.v == 0.0) return b;
    if (!b.taped() && b.v == 0.0) return a;
    return make_node(Op::Add, a, b, 1.0, 1.0, a.v + b.v);
}

Var operator-(const Var& a, const Var& b) {
    if (!a.taped() && !b.taped()) return Var(a.v - b.v);
    if (!b.taped() && b.v == 0.0) return a;
    return make_node(Op::Sub, a, b, 1.0, -1.0, a.v - b.v);
}

Var operator*(const Var& a, const Var& b) {
    if (!a.taped() && !b.taped()) return Var(a.v * b.v);
    // Exact-zero constants cannot propagate sensitivity; fold them so the
    // tape keeps only the operations that truly modify the parameters.
    if (!a.taped() && a.v == 0.0) return Var(0.0);
    if (!b.taped() && b.v == 0.0) return Var(0.0);
    return make_node(Op::Mul, a, b, b.v, a.v, a.v * b.v);
}

Var operator/(const Var& a, const Var& b) {
    if (b.v == 0.0) throw std::domain_error("division by zero in traced evaluation");
    if (!a.taped() && !b.taped()) return Var(a.v / b.v);
    if (!a.taped() && a.v == 0.0) return Var(0.0);
    const double value = a.v / b.v;
    return make_node(Op::Div, a, b, 1.0 / b.v, -value / b.v, value);
}

Var operator-(const Var& a) { return Var(0.0) - a; }

Var sqrt(const Var& a) {
    if (a.v < 0.0) throw std::domain_error("sqrt of negative value in traced evaluation");
    if (!a.taped()) return Var(std::sqrt(a.v));
    if (a.v == 0.0) throw std::domain_error("sqrt derivative undefined at zero");
    const double value = std::sqrt(a.v);
    return make_node(Op::Sqrt, a, Var(), 0.5 / value, 0.0, value);
}

}  // namespace cem::ad
