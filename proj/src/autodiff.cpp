#include "dgcf/autodiff.hpp"

#include <cmath>

#include "dgcf/error.hpp"

namespace dgcf {

int Tape::check(Var v, const char* who) const {
    if (!v.valid() || v.id >= static_cast<int>(nodes_.size()))
        throw ContractError(std::string(who) + ": Var does not belong to this tape");
    return v.id;
}

Var Tape::push(Node n) {
    nodes_.push_back(std::move(n));
    has_grads_ = false;
    return Var{static_cast<int>(nodes_.size()) - 1};
}

Var Tape::leaf(DenseMatrix value, bool requires_grad) {
    if (!value.is_finite()) throw NumericError("leaf value contains a non-finite entry");
    Node n;
    n.op = Op::leaf;
    n.value = std::move(value);
    n.needs_grad = requires_grad;
    return push(std::move(n));
}

Var Tape::matmul(Var a, Var b) {
    Node n;
    n.op = Op::matmul;
    n.a = check(a, "matmul");
    n.b = check(b, "matmul");
    n.value = dgcf::matmul(nodes_[n.a].value, nodes_[n.b].value);
    n.needs_grad = nodes_[n.a].needs_grad || nodes_[n.b].needs_grad;
    return push(std::move(n));
}

Var Tape::add(Var a, Var b) {
    Node n;
    n.op = Op::add;
    n.a = check(a, "add");
    n.b = check(b, "add");
    n.value = dgcf::add(nodes_[n.a].value, nodes_[n.b].value);
    n.needs_grad = nodes_[n.a].needs_grad || nodes_[n.b].needs_grad;
    return push(std::move(n));
}

Var Tape::sub(Var a, Var b) {
    Node n;
    n.op = Op::sub;
    n.a = check(a, "sub");
    n.b = check(b, "sub");
    n.value = dgcf::sub(nodes_[n.a].value, nodes_[n.b].value);
    n.needs_grad = nodes_[n.a].needs_grad || nodes_[n.b].needs_grad;
    return push(std::move(n));
}

Var Tape::scale(Var x, double s) {
    Node n;
    n.op = Op::scale;
    n.a = check(x, "scale");
    n.c0 = s;
    n.value = dgcf::scale(nodes_[n.a].value, s);
    n.needs_grad = nodes_[n.a].needs_grad;
    return push(std::move(n));
}

Var Tape::affine(Var x, double a, double b) {
    Node n;
    n.op = Op::affine;
    n.a = check(x, "affine");
    n.c0 = a;
    n.c1 = b;
    n.value = dgcf::affine(nodes_[n.a].value, a, b);
    n.needs_grad = nodes_[n.a].needs_grad;
    return push(std::move(n));
}

Var Tape::hadamard(Var a, Var b) {
    Node n;
    n.op = Op::hadamard;
    n.a = check(a, "hadamard");
    n.b = check(b, "hadamard");
    n.value = dgcf::hadamard(nodes_[n.a].value, nodes_[n.b].value);
    n.needs_grad = nodes_[n.a].needs_grad || nodes_[n.b].needs_grad;
    return push(std::move(n));
}

Var Tape::activation(Activation f, Var x, double leaky_slope) {
    Node n;
    n.op = Op::activation;
    n.act = f;
    n.c0 = leaky_slope;
    n.a = check(x, "activation");
    n.value = dgcf::apply_activation(f, nodes_[n.a].value, leaky_slope);
    n.needs_grad = nodes_[n.a].needs_grad;
    return push(std::move(n));
}

Var Tape::softmax(Var scores) {
    Node n;
    n.op = Op::softmax;
    n.a = check(scores, "softmax");
    n.value = dgcf::softmax(nodes_[n.a].value);
    n.needs_grad = nodes_[n.a].needs_grad;
    return push(std::move(n));
}

Var Tape::concat_rows(Var a, Var b) {
    Node n;
    n.op = Op::concat_rows;
    n.a = check(a, "concat_rows");
    n.b = check(b, "concat_rows");
    n.value = dgcf::concat_rows(nodes_[n.a].value, nodes_[n.b].value);
    n.needs_grad = nodes_[n.a].needs_grad || nodes_[n.b].needs_grad;
    return push(std::move(n));
}

Var Tape::stack_scalars(const std::vector<Var>& scalars) {
    if (scalars.empty()) throw DomainError("stack_scalars of an empty list");
    Node n;
    n.op = Op::stack_scalars;
    n.value = DenseMatrix(static_cast<int>(scalars.size()), 1);
    n.extra.reserve(scalars.size());
    for (size_t i = 0; i < scalars.size(); ++i) {
        const int id = check(scalars[i], "stack_scalars");
        if (nodes_[id].value.size() != 1)
            throw DimensionError("stack_scalars operand " + std::to_string(i) + " is " +
                                 nodes_[id].value.shape_str() + ", want 1x1");
        n.extra.push_back(id);
        n.value.data[i] = nodes_[id].value.data[0];
        n.needs_grad = n.needs_grad || nodes_[id].needs_grad;
    }
    return push(std::move(n));
}

Var Tape::weighted_sum(Var weights, const std::vector<Var>& items) {
    if (items.empty()) throw DomainError("weighted_sum of an empty list");
    Node n;
    n.op = Op::weighted_sum;
    n.a = check(weights, "weighted_sum");
    const DenseMatrix& w = nodes_[n.a].value;
    if (w.cols != 1 || w.rows != static_cast<int>(items.size()))
        throw DimensionError("weighted_sum weights " + w.shape_str() + " vs " +
                             std::to_string(items.size()) + " items");
    n.needs_grad = nodes_[n.a].needs_grad;
    n.extra.reserve(items.size());
    for (size_t i = 0; i < items.size(); ++i) {
        const int id = check(items[i], "weighted_sum");
        if (i == 0) {
            n.value = DenseMatrix(nodes_[id].value.rows, nodes_[id].value.cols);
        } else if (!nodes_[id].value.same_shape(n.value)) {
            throw DimensionError("weighted_sum item " + std::to_string(i) + " is " +
                                 nodes_[id].value.shape_str() + ", want " + n.value.shape_str());
        }
        n.extra.push_back(id);
        add_scaled_inplace(n.value, nodes_[id].value, w.data[i]);
        n.needs_grad = n.needs_grad || nodes_[id].needs_grad;
    }
    return push(std::move(n));
}

Var Tape::sum(Var x) {
    Node n;
    n.op = Op::sum;
    n.a = check(x, "sum");
    n.value = DenseMatrix(1, 1, {sum_all(nodes_[n.a].value)});
    n.needs_grad = nodes_[n.a].needs_grad;
    return push(std::move(n));
}

Var Tape::squared_norm(Var x) {
    Node n;
    n.op = Op::squared_norm;
    n.a = check(x, "squared_norm");
    n.value = DenseMatrix(1, 1, {dgcf::squared_norm(nodes_[n.a].value)});
    n.needs_grad = nodes_[n.a].needs_grad;
    return push(std::move(n));
}

Var Tape::sqrt_scalar(Var x) {
    Node n;
    n.op = Op::sqrt_scalar;
    n.a = check(x, "sqrt_scalar");
    const DenseMatrix& v = nodes_[n.a].value;
    if (v.size() != 1) throw DimensionError("sqrt_scalar expects 1x1, got " + v.shape_str());
    if (v.data[0] < 0.0) throw DomainError("sqrt_scalar of a negative value");
    n.value = DenseMatrix(1, 1, {std::sqrt(v.data[0])});
    n.needs_grad = nodes_[n.a].needs_grad;
    return push(std::move(n));
}

const DenseMatrix& Tape::value(Var v) const {
    return nodes_[check(v, "value")].value;
}

double Tape::scalar(Var v) const {
    const DenseMatrix& m = value(v);
    if (m.size() != 1) throw ContractError("scalar() on a " + m.shape_str() + " node");
    return m.data[0];
}

bool Tape::requires_grad(Var v) const {
    return nodes_[check(v, "requires_grad")].needs_grad;
}

void Tape::backward(Var root) {
    const int r = check(root, "backward");
    if (nodes_[r].value.size() != 1)
        throw ContractError("backward root must be 1x1, got " + nodes_[r].value.shape_str());

    grads_.assign(nodes_.size(), DenseMatrix());
    std::vector<char> touched(nodes_.size(), 0);
    for (int i = 0; i <= r; ++i)
        if (nodes_[i].needs_grad) grads_[i] = DenseMatrix(nodes_[i].value.rows, nodes_[i].value.cols);
    has_grads_ = true;
    if (!nodes_[r].needs_grad) return; // constant graph: every gradient stays zero

    grads_[r].data[0] = 1.0;
    touched[r] = 1;

    // Reverse sweep. Inputs are visited in recorded operand order so the
    // floating-point accumulation order never varies between runs.
    for (int i = r; i >= 0; --i) {
        const Node& n = nodes_[i];
        if (!n.needs_grad || !touched[i]) continue;
        const DenseMatrix& g = grads_[i];
        auto want = [&](int id) { return id >= 0 && nodes_[id].needs_grad; };
        auto touch = [&](int id) { touched[id] = 1; };

        switch (n.op) {
            case Op::leaf:
                break;
            case Op::matmul:
                if (want(n.a)) { add_inplace(grads_[n.a], matmul_nt(g, nodes_[n.b].value)); touch(n.a); }
                if (want(n.b)) { add_inplace(grads_[n.b], matmul_tn(nodes_[n.a].value, g)); touch(n.b); }
                break;
            case Op::add:
                if (want(n.a)) { add_inplace(grads_[n.a], g); touch(n.a); }
                if (want(n.b)) { add_inplace(grads_[n.b], g); touch(n.b); }
                break;
            case Op::sub:
                if (want(n.a)) { add_inplace(grads_[n.a], g); touch(n.a); }
                if (want(n.b)) { add_scaled_inplace(grads_[n.b], g, -1.0); touch(n.b); }
                break;
            case Op::scale:
                if (want(n.a)) { add_scaled_inplace(grads_[n.a], g, n.c0); touch(n.a); }
                break;
            case Op::affine:
                if (want(n.a)) { add_scaled_inplace(grads_[n.a], g, n.c0); touch(n.a); }
                break;
            case Op::hadamard:
                if (want(n.a)) { add_inplace(grads_[n.a], dgcf::hadamard(g, nodes_[n.b].value)); touch(n.a); }
                if (want(n.b)) { add_inplace(grads_[n.b], dgcf::hadamard(g, nodes_[n.a].value)); touch(n.b); }
                break;
            case Op::activation:
                if (want(n.a)) {
                    const DenseMatrix& x = nodes_[n.a].value;
                    DenseMatrix& ga = grads_[n.a];
                    for (size_t k = 0; k < g.data.size(); ++k)
                        ga.data[k] += g.data[k] * activation_grad(n.act, x.data[k], n.value.data[k], n.c0);
                    touch(n.a);
                }
                break;
            case Op::softmax:
                if (want(n.a)) {
                    const DenseMatrix& y = n.value;
                    double gy = 0.0;
                    for (size_t k = 0; k < g.data.size(); ++k) gy += g.data[k] * y.data[k];
                    DenseMatrix& ga = grads_[n.a];
                    for (size_t k = 0; k < g.data.size(); ++k)
                        ga.data[k] += y.data[k] * (g.data[k] - gy);
                    touch(n.a);
                }
                break;
            case Op::concat_rows: {
                const int ra = nodes_[n.a].value.rows;
                const int c = n.value.cols;
                if (want(n.a)) {
                    DenseMatrix& ga = grads_[n.a];
                    for (size_t k = 0; k < ga.data.size(); ++k) ga.data[k] += g.data[k];
                    touch(n.a);
                }
                if (want(n.b)) {
                    DenseMatrix& gb = grads_[n.b];
                    const size_t off = static_cast<size_t>(ra) * c;
                    for (size_t k = 0; k < gb.data.size(); ++k) gb.data[k] += g.data[off + k];
                    touch(n.b);
                }
                break;
            }
            case Op::stack_scalars:
                for (size_t k = 0; k < n.extra.size(); ++k) {
                    const int id = n.extra[k];
                    if (want(id)) { grads_[id].data[0] += g.data[k]; touch(id); }
                }
                break;
            case Op::weighted_sum: {
                const DenseMatrix& w = nodes_[n.a].value;
                for (size_t k = 0; k < n.extra.size(); ++k) {
                    const int id = n.extra[k];
                    if (want(n.a)) grads_[n.a].data[k] += dot(g, nodes_[id].value);
                    if (want(id)) { add_scaled_inplace(grads_[id], g, w.data[k]); touch(id); }
                }
                if (want(n.a)) touch(n.a);
                break;
            }
            case Op::sum:
                if (want(n.a)) {
                    DenseMatrix& ga = grads_[n.a];
                    for (double& v : ga.data) v += g.data[0];
                    touch(n.a);
                }
                break;
            case Op::squared_norm:
                if (want(n.a)) {
                    add_scaled_inplace(grads_[n.a], nodes_[n.a].value, 2.0 * g.data[0]);
                    touch(n.a);
                }
                break;
            case Op::sqrt_scalar:
                if (want(n.a)) {
                    // Guarded at zero so a finite upstream gradient stays finite.
                    const double root_val = std::max(n.value.data[0], 1e-12);
                    grads_[n.a].data[0] += g.data[0] * 0.5 / root_val;
                    touch(n.a);
                }
                break;
        }
    }
}

const DenseMatrix& Tape::grad(Var v) const {
    const int id = check(v, "grad");
    if (!has_grads_) throw ContractError("grad() before backward()");
    if (!nodes_[id].needs_grad) throw ContractError("grad() on a node that does not track gradients");
    return grads_[id];
}

void Tape::clear() {
    nodes_.clear();
    grads_.clear();
    has_grads_ = false;
}

} // namespace dgcf
