#pragma once

#include <cstdint>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace cem::ad {

enum class Op : std::uint8_t { Input, Add, Sub, Mul, Div, Sqrt };

const char* op_name(Op op);

// One recorded elementary operation. Parent indices of -1 mean the operand
// was a constant that never touched an optimization parameter.
struct TapeNode {
    Op op;
    std::int32_t a = -1;
    std::int32_t b = -1;
    double da = 0.0;  // d(value)/d(node a)
    double db = 0.0;  // d(value)/d(node b)
    double value = 0.0;
};

// Append-only record of every elementary operation that touches the input
// slots. Nodes are stored in topological order by construction; a single
// reverse pass accumulates the adjoints.
class Tape {
public:
    int add_input(double value);
    int record(Op op, int a, int b, double da, double db, double value);

    std::size_t size() const { return nodes_.size(); }
    const TapeNode& node(int i) const { return nodes_[static_cast<std::size_t>(i)]; }
    const std::vector<int>& inputs() const { return inputs_; }

    // Children of each input slot; used to inspect the parameter-touching
    // spine of a recorded evaluation.
    std::vector<int> children_of(int index) const;

    // Adjoints of every node after seeding the output with 1.
    std::vector<double> adjoints(int output_index) const;

    // Adjoints of the input slots only (the gradient over the parameters).
    // A negative output index denotes a constant output: the gradient is zero.
    std::vector<double> gradient(int output_index) const;

    // Debug dump: node index, op name, parents, partials, value.
    std::string dump_json(int output_index) const;

    void clear();

private:
    std::vector<TapeNode> nodes_;
    std::vector<int> inputs_;
};

Tape* active_tape();

// Activates a tape for the current thread for the lifetime of the scope.
// Tapes are confined to one evaluation context; nested scopes are rejected.
class TapeScope {
public:
    explicit TapeScope(Tape& tape);
    ~TapeScope();
    TapeScope(const TapeScope&) = delete;
    TapeScope& operator=(const TapeScope&) = delete;

private:
    Tape* previous_;
};

// Scalar tracked by the active tape. A Var with a negative index is a
// constant; operations between constants fold without recording, so the
// tape holds exactly the operations that interact with the input slots.
struct Var {
    double v = 0.0;
    std::int32_t idx = -1;

    Var() = default;
    Var(double value) : v(value) {}  // NOLINT: implicit constants are intended
    double value() const { return v; }
    bool taped() const { return idx >= 0; }

    static Var input(double value);
};

Var operator+(const Var& a, const Var& b);
Var operator-(const Var& a, const Var& b);
Var operator*(const Var& a, const Var& b);
Var operator/(const Var& a, const Var& b);
Var operator-(const Var& a);
Var sqrt(const Var& a);

inline bool operator<(const Var& a, const Var& b) { return a.v < b.v; }
inline bool operator>(const Var& a, const Var& b) { return a.v > b.v; }
inline bool operator<=(const Var& a, const Var& b) { return a.v <= b.v; }
inline bool operator>=(const Var& a, const Var& b) { return a.v >= b.v; }

// Primal value access usable from code templated on the scalar type.
inline double primal(double x) { return x; }
inline double primal(const Var& x) { return x.v; }

}  // namespace cem::ad

namespace cem {
using ad::primal;
using ad::Var;
}  // namespace cem
