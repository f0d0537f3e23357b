#include <cmath>
#include <random>
#include <vector>

#include "doctest.h"
#include "dgcf/adam.hpp"
#include "dgcf/autodiff.hpp"
#include "dgcf/error.hpp"
#include "testutil.hpp"

using dgcf::DenseMatrix;
using dgcf::Tape;
using dgcf::Var;

TEST_CASE("gradient of sum is all ones") {
    Tape t;
    Var x = t.leaf(DenseMatrix(3, 1, {1.0, 2.0, 3.0}), true);
    Var s = t.sum(x);
    t.backward(s);
    const DenseMatrix& g = t.grad(x);
    REQUIRE(g.rows == 3);
    for (double v : g.data) CHECK(v == doctest::Approx(1.0));
}

TEST_CASE("gradient of sigmoid at its midpoint is a quarter of the input") {
    // d/dw sum(sigmoid(w .* x)) = sigmoid'(w.x) * x = 0.25 * x when w.x = 0.
    Tape t;
    DenseMatrix xval(2, 1, {3.0, -1.5});
    Var w = t.leaf(DenseMatrix(2, 1, {0.0, 0.0}), true);
    Var x = t.leaf(xval);
    Var y = t.sum(t.activation(dgcf::Activation::sigmoid, t.hadamard(w, x)));
    t.backward(y);
    const DenseMatrix& g = t.grad(w);
    CHECK(g.at(0, 0) == doctest::Approx(0.25 * 3.0));
    CHECK(g.at(1, 0) == doctest::Approx(0.25 * -1.5));
}

TEST_CASE("analytic gradients match central differences across all operations") {
    std::mt19937_64 rng(101);
    // Scalar-valued composite touching every recorded operation type.
    Var w_var;
    auto build = [&](Tape& t, const DenseMatrix& wv, const DenseMatrix& av, const DenseMatrix& bv) {
        Var w = t.leaf(wv, true);
        w_var = w;
        Var a = t.leaf(av);
        Var b = t.leaf(bv);
        Var m = t.matmul(w, a);                                   // 4x1
        Var s1 = t.add(m, b);
        Var s2 = t.sub(s1, t.scale(b, 0.3));
        Var s3 = t.affine(s2, 1.7, -0.2);
        Var h = t.hadamard(s3, s1);
        Var act = t.activation(dgcf::Activation::tanh, h);
        Var sm = t.softmax(act);
        Var cat = t.concat_rows(sm, act);                         // 8x1
        Var lr = t.activation(dgcf::Activation::leaky_relu, cat, 0.01);
        Var sq = t.squared_norm(lr);
        Var sg = t.activation(dgcf::Activation::sigmoid, t.sum(cat));
        std::vector<Var> pieces{sq, sg, t.sqrt_scalar(t.squared_norm(sm))};
        Var stacked = t.stack_scalars(pieces);                    // 3x1
        Var weights = t.softmax(stacked);
        std::vector<Var> items{m, s3, h};
        Var mix = t.weighted_sum(weights, items);
        return t.sum(mix);
    };
    for (int trial = 0; trial < 3; ++trial) {
        DenseMatrix wv = testutil::random_matrix(4, 4, rng, -0.7, 0.7);
        DenseMatrix av = testutil::random_matrix(4, 1, rng, -0.7, 0.7);
        DenseMatrix bv = testutil::random_matrix(4, 1, rng, -0.7, 0.7);
        Tape t;
        Var root = build(t, wv, av, bv);
        Var w_tracked = w_var;
        t.backward(root);
        DenseMatrix analytic = t.grad(w_tracked);
        DenseMatrix numeric = testutil::numeric_grad(wv, [&] {
            Tape local;
            return local.scalar(build(local, wv, av, bv));
        });
        std::string detail;
        CHECK_MESSAGE(testutil::grad_close(analytic, numeric, 1e-4, 1e-7, &detail), detail);
    }
}

TEST_CASE("backward twice produces identical gradients") {
    std::mt19937_64 rng(55);
    Tape t;
    Var w = t.leaf(testutil::random_matrix(5, 1, rng), true);
    Var y = t.squared_norm(t.activation(dgcf::Activation::tanh, w));
    t.backward(y);
    DenseMatrix first = t.grad(w);
    t.backward(y);
    CHECK(dgcf::max_abs_diff(first, t.grad(w)) == 0.0);
}

TEST_CASE("backward rejects a non-scalar root") {
    Tape t;
    Var x = t.leaf(DenseMatrix(2, 1, {1.0, 2.0}), true);
    CHECK_THROWS_AS(t.backward(x), dgcf::ContractError);
}

TEST_CASE("untracked leaves refuse grad() but still feed tracked ones") {
    Tape t;
    Var w = t.leaf(DenseMatrix(2, 1, {1.0, 1.0}), true);
    Var c = t.leaf(DenseMatrix(2, 1, {2.0, 2.0}));
    Var y = t.sum(t.hadamard(w, c));
    t.backward(y);
    CHECK_FALSE(t.requires_grad(c));
    CHECK_THROWS_AS(t.grad(c), dgcf::ContractError);
    // d(sum(w*c))/dw = c, the constant flows through untouched.
    const DenseMatrix& gw = t.grad(w);
    CHECK(gw.at(0, 0) == doctest::Approx(2.0));
    CHECK(gw.at(1, 0) == doctest::Approx(2.0));
}

TEST_CASE("sqrt_scalar differentiates as half over the root") {
    Tape t;
    Var x = t.leaf(DenseMatrix(1, 1, {9.0}), true);
    Var y = t.sqrt_scalar(x);
    CHECK(t.scalar(y) == doctest::Approx(3.0));
    t.backward(y);
    CHECK(t.grad(x).at(0, 0) == doctest::Approx(0.5 / 3.0));
}

TEST_CASE("adam with zero gradients and no decay is a fixed point") {
    DenseMatrix w(2, 2, {1.0, -2.0, 3.0, -4.0});
    DenseMatrix w_orig = w;
    DenseMatrix g(2, 2);
    dgcf::AdamState st;
    st.weight_decay = 0.0;
    std::vector<DenseMatrix*> params{&w};
    std::vector<const DenseMatrix*> grads{&g};
    for (int i = 0; i < 5; ++i) dgcf::adam_step(params, grads, st);
    CHECK(w == w_orig);
}

TEST_CASE("adam walks a quadratic downhill") {
    // f(w) = w^2, grad = 2w, start at 1. The normalized step is about one
    // learning rate per iteration, so lr 0.01 over 20 steps stays far from
    // the minimum and every step must strictly decrease f.
    DenseMatrix w(1, 1, {1.0});
    dgcf::AdamState st;
    st.learning_rate = 0.01;
    double prev = 1.0;
    for (int i = 0; i < 20; ++i) {
        DenseMatrix g(1, 1, {2.0 * w.at(0, 0)});
        std::vector<DenseMatrix*> params{&w};
        std::vector<const DenseMatrix*> grads{&g};
        dgcf::adam_step(params, grads, st);
        const double f = w.at(0, 0) * w.at(0, 0);
        CHECK(f < prev);
        prev = f;
    }
    CHECK(prev < 0.7);
}

TEST_CASE("adam updates are deterministic for identical inputs") {
    std::mt19937_64 rng(77);
    DenseMatrix g = testutil::random_matrix(3, 3, rng);
    auto run = [&] {
        DenseMatrix w(3, 3, {1, 2, 3, 4, 5, 6, 7, 8, 9});
        dgcf::AdamState st;
        st.weight_decay = 1e-3;
        std::vector<DenseMatrix*> params{&w};
        std::vector<const DenseMatrix*> grads{&g};
        for (int i = 0; i < 7; ++i) dgcf::adam_step(params, grads, st);
        return w;
    };
    CHECK(run() == run());
}

TEST_CASE("adam rejects mismatched parameter and gradient shapes") {
    DenseMatrix w(2, 2);
    DenseMatrix g(3, 1);
    dgcf::AdamState st;
    std::vector<DenseMatrix*> params{&w};
    std::vector<const DenseMatrix*> grads{&g};
    CHECK_THROWS_AS(dgcf::adam_step(params, grads, st), dgcf::DimensionError);
}

TEST_CASE("decoupled weight decay shrinks parameters even at zero gradient") {
    DenseMatrix w(1, 1, {10.0});
    DenseMatrix g(1, 1);
    dgcf::AdamState st;
    st.weight_decay = 0.1;
    st.learning_rate = 0.5;
    std::vector<DenseMatrix*> params{&w};
    std::vector<const DenseMatrix*> grads{&g};
    dgcf::adam_step(params, grads, st);
    // w <- w - lr * wd * w = 10 * (1 - 0.05)
    CHECK(w.at(0, 0) == doctest::Approx(9.5));
}
