// Reverse-mode automatic differentiation over DenseMatrix values.
//
// A Tape records operations in insertion order; backward() walks the records
// in reverse and accumulates gradients in that fixed order, so repeated runs
// over the same graph are bitwise identical. Nodes are append-only and live
// until clear().
#pragma once

#include <cstdint>
#include <vector>

#include "dgcf/tensor.hpp"

namespace dgcf {

// Handle into a Tape. Only valid for the tape that produced it, and only
// until that tape is cleared.
struct Var {
    int id = -1;
    bool valid() const { return id >= 0; }
};

class Tape {
public:
    // Leaves: parameters want gradients, data constants do not.
    Var leaf(DenseMatrix value, bool requires_grad = false);

    Var matmul(Var a, Var b);
    Var add(Var a, Var b);
    Var sub(Var a, Var b);
    Var scale(Var x, double s);
    Var affine(Var x, double a, double b); // a*x + b elementwise
    Var hadamard(Var a, Var b);
    Var activation(Activation f, Var x, double leaky_slope = 0.01);
    Var softmax(Var scores); // column vector
    Var concat_rows(Var a, Var b);
    Var stack_scalars(const std::vector<Var>& scalars); // n x 1 from n 1x1 nodes
    // weights is n x 1, items are n same-shape matrices; result is
    // sum_i weights[i] * items[i].
    Var weighted_sum(Var weights, const std::vector<Var>& items);
    Var sum(Var x);          // 1x1
    Var squared_norm(Var x); // 1x1
    Var sqrt_scalar(Var x);  // 1x1, input must be non-negative

    const DenseMatrix& value(Var v) const;
    double scalar(Var v) const; // value of a 1x1 node

    // Seeds d(root)/d(root) = 1 and propagates to every recorded node that
    // needs_grad a gradient. root must be 1x1. Gradient buffers are reset on
    // each call, so calling twice yields identical results.
    void backward(Var root);

    // Gradient of the last backward() root w.r.t. v. Zero matrix when the
    // root does not depend on v. Only tracked nodes carry gradients.
    const DenseMatrix& grad(Var v) const;

    bool requires_grad(Var v) const;
    size_t node_count() const { return nodes_.size(); }

    // Drops every node. Outstanding Var handles become invalid.
    void clear();

private:
    enum class Op : uint8_t {
        leaf,
        matmul,
        add,
        sub,
        scale,
        affine,
        hadamard,
        activation,
        softmax,
        concat_rows,
        stack_scalars,
        weighted_sum,
        sum,
        squared_norm,
        sqrt_scalar,
    };

    struct Node {
        Op op = Op::leaf;
        Activation act = Activation::identity;
        double c0 = 0.0; // scale factor / affine a / leaky slope
        double c1 = 0.0; // affine b
        int a = -1;
        int b = -1;
        std::vector<int> extra; // stack_scalars / weighted_sum operands
        DenseMatrix value;
        bool needs_grad = false;
    };

    int check(Var v, const char* who) const;
    Var push(Node n);

    std::vector<Node> nodes_;
    std::vector<DenseMatrix> grads_; // parallel to nodes_ after backward()
    bool has_grads_ = false;
};

} // namespace dgcf
