#pragma once

#include <span>
#include <string>
#include <vector>

#include "semalign/matrix.hpp"

namespace semalign {

/// A named learnable tensor: value plus accumulated gradient of equal shape.
struct Param {
    std::string name;
    Matrix value;
    Matrix grad;

    Param() = default;
    Param(std::string n, Matrix v)
        : name(std::move(n)), value(std::move(v)), grad(value.rows(), value.cols()) {}

    void zero_grad() { grad.fill(0.0); }
};

/// Handle to a node on a Tape.
struct Var {
    int id = -1;
    bool valid() const { return id >= 0; }
};

/// Reverse-mode tape over the matrix operation set used by the losses and the
/// MLP model. Forward values are computed eagerly as the graph is built, so
/// data-dependent constants (bandwidths, medians) can be read mid-build.
/// One backward pass per tape; adjoints of leaves bound to Params are
/// accumulated into Param::grad.
class Tape {
public:
    Tape();
    ~Tape();
    Tape(const Tape&) = delete;
    Tape& operator=(const Tape&) = delete;

    /// Tracked leaf bound to a parameter. Repeated calls with the same Param
    /// return the same node, so shared weights accumulate correctly.
    Var leaf(Param& p);

    /// Untracked constant.
    Var constant(Matrix value);
    Var constant_scalar(double value);

    // --- elementwise and linear algebra ---
    Var add(Var a, Var b);
    Var sub(Var a, Var b);
    Var mul(Var a, Var b); // hadamard
    Var matmul(Var a, Var b);
    Var transpose(Var a);
    Var add_rowvec(Var a, Var b); // b is 1 x cols, broadcast over rows
    Var scale(Var a, double c);
    Var add_const(Var a, double c);
    Var tanh(Var a);
    Var relu(Var a);
    Var exp(Var a);
    Var log(Var a); // entries must be > 0; clamp first where underflow is possible
    Var pow_int(Var a, int degree);
    Var clamp_min(Var a, double lo);
    Var clamp(Var a, double lo, double hi);

    // --- scalar broadcast (s is a 1x1 node) ---
    Var mul_scalar(Var a, Var s);
    Var div_scalar(Var a, Var s);

    // --- reductions and structure ---
    Var sum_all(Var a);       // 1x1
    Var mean_all(Var a);      // 1x1
    Var row_sums(Var a);      // rows x 1
    Var sum_diag(Var a);      // 1x1, square input
    Var logsumexp_rows(Var a); // rows x 1
    Var row_softmax(Var a);
    Var slice_rows(Var a, int begin, int count);
    Var concat_cols(Var a, Var b); // same row count
    Var diag_col(Var a);           // n x 1 diagonal of a square matrix
    Var entry(Var a, int i, int j); // 1x1 pick

    // --- domain-specific primitives ---
    Var pairwise_sq_dists(Var a, Var b);
    Var cosine_similarity(Var a, Var b);
    Var batch_variance(Var a); // 1x1

    const Matrix& value(Var v) const;
    double scalar_value(Var v) const;

    /// Adjoint of a node; valid after backward().
    const Matrix& adjoint(Var v) const;

    /// Propagate from a 1x1 loss node. Callable once per tape.
    void backward(Var loss);

    std::size_t node_count() const;

private:
    struct Node;
    Var push(Node node);
    const Node& at(Var v) const;

    std::vector<Node> nodes_;
    std::vector<std::pair<const Param*, int>> param_leaves_;
    bool backward_done_ = false;
};

/// Forward value of `loss` plus exact reverse-mode gradients accumulated into
/// each listed Param's grad (zeroed first).
double value_and_grad(Tape& tape, Var loss, std::span<Param* const> params);
double value_and_grad(Tape& tape, Var loss, std::initializer_list<Param*> params);

} // namespace semalign
