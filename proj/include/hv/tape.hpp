#pragma once

#include <functional>
#include <vector>

#include "hv/matrix.hpp"

namespace hv::ad {

class Tape;

/// Lightweight handle to a tape node. Values live on the tape until clear().
struct Var {
    Tape* tape = nullptr;
    int id = -1;

    bool valid() const { return tape != nullptr && id >= 0; }
    const Matrix& value() const;
    /// Gradient after Tape::backward; zeros if the node was never reached.
    Matrix grad() const;
    int rows() const { return value().rows; }
    int cols() const { return value().cols; }
};

/// Reverse-mode autodiff tape over dense matrices. Nodes are created in
/// topological order by construction; backward() is a single reverse sweep.
/// One tape per forward pass; not thread-safe (concurrent passes use
/// separate tapes).
class Tape {
public:
    using BackFn = std::function<void(Tape&)>;

    struct Node {
        Matrix value;
        Matrix grad; // lazily allocated
        bool requires_grad = false;
        BackFn back;
    };

    /// Leaf that does not need a gradient (data, targets, frozen tensors).
    Var input(Matrix v);
    /// Leaf that accumulates a gradient (trainable parameter).
    Var param(Matrix v);

    /// Raw node constructor for custom ops.
    Var emplace(Matrix value, bool requires_grad, BackFn back);

    /// Seeds d(loss)/d(loss) = 1 and sweeps the tape in reverse. loss must
    /// be a 1x1 node on this tape.
    void backward(Var loss);

    void clear() { nodes_.clear(); }
    size_t num_nodes() const { return nodes_.size(); }

    const Matrix& value(int id) const { return nodes_[id].value; }
    bool wants_grad(int id) const { return nodes_[id].requires_grad; }
    /// Gradient buffer, allocated as zeros on first touch.
    Matrix& grad_buf(int id);
    bool grad_allocated(int id) const { return !nodes_[id].grad.empty(); }

private:
    std::vector<Node> nodes_;
};

// --- generic ops -----------------------------------------------------------

Var add(Var a, Var b);
Var sub(Var a, Var b);
/// wa*a + wb*b with fixed scalar weights.
Var add_scaled(Var a, double wa, Var b, double wb);
Var scale(Var a, double s);
Var hadamard(Var a, Var b);
Var matmul(Var a, Var b);
/// a * b^T
Var matmul_nt(Var a, Var b);
/// a + bias, bias broadcast over rows (1 x cols).
Var add_row(Var a, Var bias);
Var relu(Var a);
Var tanh_op(Var a);
Var sigmoid_op(Var a);
Var row_softmax_op(Var a);
/// Per-row standardization with learnable gain/shift (1 x cols each).
Var layer_norm(Var x, Var gain, Var shift, double eps = 1e-6);
/// out rows = a rows at idx (duplicates allowed; backward scatter-adds).
Var gather_rows(Var a, std::vector<int> idx);
Var concat_cols(Var a, Var b);
Var vconcat(const std::vector<Var>& parts);
Var slice_rows(Var a, int r0, int r1);
/// Block-diagonal adjacency application; see kernels::adj_mix.
Var adj_mix(Var adj, Var z, int n);
/// u*a + (1-u)*b elementwise (GRU state update).
Var gru_blend(Var u, Var a, Var b);
/// 1 - a elementwise.
Var one_minus(Var a);
/// s * m where s is a 1x1 node (learnable scalar).
Var scale_by(Var m, Var s);
/// mean(|a|) as a 1x1 node.
Var abs_mean(Var a);
/// mean of all entries as a 1x1 node.
Var mean_all(Var a);

} // namespace hv::ad
