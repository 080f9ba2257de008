#pragma once

#include <functional>
#include <unordered_map>
#include <vector>

#include "lyricnet/rng.hpp"
#include "lyricnet/tensor.hpp"

namespace lyricnet {

// learnable tensor; Tape::backward accumulates into grad, the optimizer consumes it
struct Parameter {
    std::string name;
    Tensor value;
    Tensor grad;

    Parameter() = default;
    Parameter(std::string n, Tensor v) : name(std::move(n)), value(std::move(v)), grad(value.shape()) {}

    void zero_grad() { grad.fill(0); }
    std::size_t size() const { return value.size(); }
};

class Tape;

// handle to a node on a tape; cheap to copy
struct Var {
    Tape* tape = nullptr;
    int id = -1;

    bool valid() const { return tape != nullptr && id >= 0; }
    const Tensor& value() const;
    const Tensor& grad() const;
};

// Reverse-mode autodiff over a closed op set. Nodes are appended in evaluation
// order, which is a topological order, so backward() is a single reverse sweep.
// One tape per forward/backward episode; backward may run only once per tape.
class Tape {
  public:
    // abort with a NumericError naming the op as soon as a NaN/Inf appears
    bool check_finite = true;

    // leaves
    Var constant(Tensor v);
    Var param(Parameter& p);  // same Parameter gives the same node within one tape

    // matrix products; matmul also accepts a rank-1 rhs ({m,k} x {k} -> {m})
    Var matmul(Var a, Var b);
    Var matmul_nt(Var a, Var b);  // a * b^T, a {n,m} x b {k,m} -> {n,k}

    // elementwise, equal shapes
    Var add(Var a, Var b);
    Var sub(Var a, Var b);
    Var hadamard(Var a, Var b);
    Var emax(Var a, Var b);  // ties route gradient to a

    Var add_rowvec(Var m, Var v);  // add v to every row of m

    // elementwise unary
    Var sigmoid(Var x);
    Var tanh(Var x);
    Var exp(Var x);
    Var log(Var x);  // domain error on x <= 0
    Var neg(Var x);
    Var one_minus(Var x);  // 1 - x
    Var scale(Var x, Real c);

    // rank-1, max-subtracted for stability
    Var softmax(Var x);
    Var log_softmax(Var x);

    Var concat(Var a, Var b);                                  // rank-1
    Var row(Var m, std::size_t r);                             // {n,d} -> {d}
    Var stack_rows(const std::vector<Var>& rows);              // n rank-1 {d} -> {n,d}
    Var mean_rows(Var m, const std::vector<std::size_t>& keep);
    Var max_rows(Var m, const std::vector<std::size_t>& keep);  // columnwise max over kept rows
    Var weighted_sum_rows(Var m, Var w);                        // {n,d},{n} -> {d}
    Var pick(Var x, std::size_t i);                             // {n} -> {1}
    Var sum(Var x);                                             // all elements -> {1}

    // gather rows of an embedding table; backward scatters into the gathered rows only
    Var embed_rows(Var table, const std::vector<int>& ids);

    // inverted dropout (train mode); eval mode is the identity, so simply don't call it
    Var dropout(Var x, Real p, Rng& rng);

    // root must be scalar; a second call on the same tape is an error
    void backward(Var root);
    bool backward_done() const { return backward_done_; }

    std::size_t node_count() const { return nodes_.size(); }
    const Tensor& value_of(int id) const { return nodes_[static_cast<std::size_t>(id)].value; }
    const Tensor& grad_of_const(int id) const;
    Tensor& grad_of(int id);  // lazily allocates zeros of the value shape

  private:
    struct Node {
        Tensor value;
        Tensor grad;  // empty until touched by backward
        const char* op = "leaf";
        std::function<void(Tape&, const Tensor&)> backward_fn;  // propagates this node's grad
        Parameter* parameter = nullptr;
    };

    Var push(Tensor value, const char* op, std::function<void(Tape&, const Tensor&)> backward_fn);
    void ensure_finite(const Tensor& t, const char* op, const char* phase) const;

    std::vector<Node> nodes_;
    std::unordered_map<const Parameter*, int> param_nodes_;
    bool backward_done_ = false;
};

inline const Tensor& Var::value() const { return tape->value_of(id); }
inline const Tensor& Var::grad() const { return tape->grad_of_const(id); }

inline Var operator+(Var a, Var b) { return a.tape->add(a, b); }
inline Var operator-(Var a, Var b) { return a.tape->sub(a, b); }
inline Var matvec(Var m, Var v) { return m.tape->matmul(m, v); }
inline Var hadamard(Var a, Var b) { return a.tape->hadamard(a, b); }

}  // namespace lyricnet
