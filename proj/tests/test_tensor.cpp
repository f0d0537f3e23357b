#include <cmath>
#include <limits>
#include <random>
#include <string>

#include "doctest.h"
#include "dgcf/error.hpp"
#include "dgcf/tensor.hpp"
#include "testutil.hpp"

using dgcf::DenseMatrix;

TEST_CASE("matmul by the identity returns the operand") {
    DenseMatrix a(2, 2, {1, 2, 3, 4});
    CHECK(dgcf::matmul(DenseMatrix::identity(2), a) == a);
    CHECK(dgcf::matmul(a, DenseMatrix::identity(2)) == a);
}

TEST_CASE("matmul of a row by a column is their dot product") {
    DenseMatrix row(1, 2, {1, 2});
    DenseMatrix col(2, 1, {3, 4});
    DenseMatrix r = dgcf::matmul(row, col);
    CHECK(r.rows == 1);
    CHECK(r.cols == 1);
    CHECK(r.at(0, 0) == doctest::Approx(11.0));
}

TEST_CASE("matmul with an all-zero operand yields zeros") {
    std::mt19937_64 rng(7);
    DenseMatrix z(2, 3);
    DenseMatrix x = testutil::random_matrix(3, 1, rng);
    DenseMatrix r = dgcf::matmul(z, x);
    CHECK(r.rows == 2);
    CHECK(r.cols == 1);
    for (double v : r.data) CHECK(v == 0.0);
}

TEST_CASE("matmul rejects mismatched inner dimensions naming both shapes") {
    DenseMatrix a(2, 3);
    DenseMatrix b(2, 3);
    bool threw = false;
    try {
        dgcf::matmul(a, b);
    } catch (const dgcf::DimensionError& e) {
        threw = true;
        CHECK(std::string(e.what()).find("2x3") != std::string::npos);
    }
    CHECK(threw);
}

TEST_CASE("elementwise ops reject shape disagreement") {
    DenseMatrix a(2, 2);
    DenseMatrix b(3, 2);
    CHECK_THROWS_AS(dgcf::add(a, b), dgcf::DimensionError);
    CHECK_THROWS_AS(dgcf::sub(a, b), dgcf::DimensionError);
    CHECK_THROWS_AS(dgcf::hadamard(a, b), dgcf::DimensionError);
}

TEST_CASE("sigmoid at zero is one half") {
    DenseMatrix x(1, 1, {0.0});
    DenseMatrix y = dgcf::apply_activation(dgcf::Activation::sigmoid, x);
    CHECK(y.at(0, 0) == doctest::Approx(0.5));
}

TEST_CASE("leaky relu scales negatives by the slope and keeps positives") {
    DenseMatrix x(2, 1, {-1.0, 2.0});
    DenseMatrix y = dgcf::apply_activation(dgcf::Activation::leaky_relu, x, 0.01);
    CHECK(y.at(0, 0) == doctest::Approx(-0.01));
    CHECK(y.at(1, 0) == doctest::Approx(2.0));
}

TEST_CASE("identity activation passes values through") {
    DenseMatrix x(2, 1, {3.0, -2.0});
    DenseMatrix y = dgcf::apply_activation(dgcf::Activation::identity, x);
    CHECK(y == x);
}

TEST_CASE("activations reject non-finite input") {
    DenseMatrix x(1, 1, {std::numeric_limits<double>::infinity()});
    CHECK_THROWS_AS(dgcf::apply_activation(dgcf::Activation::sigmoid, x), dgcf::DomainError);
}

TEST_CASE("softmax of equal scores is uniform") {
    DenseMatrix s(2, 1, {3.7, 3.7});
    DenseMatrix w = dgcf::softmax(s);
    CHECK(w.at(0, 0) == doctest::Approx(0.5));
    CHECK(w.at(1, 0) == doctest::Approx(0.5));
}

TEST_CASE("softmax survives large scores without overflow") {
    DenseMatrix s(2, 1, {1000.0, 1000.0});
    DenseMatrix w = dgcf::softmax(s);
    CHECK(w.is_finite());
    CHECK(w.at(0, 0) == doctest::Approx(0.5));
    CHECK(w.at(1, 0) == doctest::Approx(0.5));
}

TEST_CASE("softmax of scores 0 and ln 3 splits one to three") {
    DenseMatrix s(2, 1, {0.0, std::log(3.0)});
    DenseMatrix w = dgcf::softmax(s);
    CHECK(w.at(0, 0) == doctest::Approx(0.25));
    CHECK(w.at(1, 0) == doctest::Approx(0.75));
}

TEST_CASE("softmax weights are positive, sum to one and ignore shifts") {
    // Score spreads stay under ~700 so exp never underflows to exact zero
    // and strict positivity holds.
    std::mt19937_64 rng(11);
    for (int trial = 0; trial < 50; ++trial) {
        const int n = 1 + static_cast<int>(rng() % 8);
        DenseMatrix s = testutil::random_matrix(n, 1, rng, -300.0, 300.0);
        DenseMatrix w = dgcf::softmax(s);
        double total = 0.0;
        for (double v : w.data) {
            CHECK(v > 0.0);
            total += v;
        }
        CHECK(std::abs(total - 1.0) <= 1e-12);
        DenseMatrix shifted = dgcf::affine(s, 1.0, 17.5);
        CHECK(dgcf::max_abs_diff(dgcf::softmax(shifted), w) <= 1e-12);
    }
}

TEST_CASE("softmax at extreme spreads stays a distribution") {
    DenseMatrix s(3, 1, {1e6, -1e6, 0.0});
    DenseMatrix w = dgcf::softmax(s);
    CHECK(w.is_finite());
    double total = 0.0;
    for (double v : w.data) {
        CHECK(v >= 0.0);
        total += v;
    }
    CHECK(std::abs(total - 1.0) <= 1e-12);
    CHECK(w.at(0, 0) == doctest::Approx(1.0));
}

TEST_CASE("softmax rejects an empty score vector") {
    DenseMatrix s(0, 1);
    CHECK_THROWS_AS(dgcf::softmax(s), dgcf::DomainError);
}

TEST_CASE("kernels stay finite on bounded random input") {
    std::mt19937_64 rng(23);
    for (int trial = 0; trial < 20; ++trial) {
        DenseMatrix a = testutil::random_matrix(4, 4, rng, -1e3, 1e3);
        DenseMatrix b = testutil::random_matrix(4, 4, rng, -1e3, 1e3);
        CHECK(dgcf::matmul(a, b).is_finite());
        CHECK(dgcf::add(a, b).is_finite());
        CHECK(dgcf::hadamard(a, b).is_finite());
        CHECK(dgcf::apply_activation(dgcf::Activation::sigmoid, a).is_finite());
        CHECK(dgcf::apply_activation(dgcf::Activation::tanh, a).is_finite());
        CHECK(dgcf::apply_activation(dgcf::Activation::leaky_relu, a).is_finite());
        DenseMatrix col = testutil::random_matrix(6, 1, rng, -1e3, 1e3);
        CHECK(dgcf::softmax(col).is_finite());
    }
}

TEST_CASE("concat_rows stacks operands and keeps column count") {
    DenseMatrix a(2, 1, {1, 2});
    DenseMatrix b(3, 1, {3, 4, 5});
    DenseMatrix c = dgcf::concat_rows(a, b);
    CHECK(c.rows == 5);
    CHECK(c.cols == 1);
    CHECK(c.at(0, 0) == 1.0);
    CHECK(c.at(4, 0) == 5.0);
    DenseMatrix wide(2, 2);
    CHECK_THROWS_AS(dgcf::concat_rows(a, wide), dgcf::DimensionError);
}

TEST_CASE("reductions match hand arithmetic") {
    DenseMatrix x(2, 2, {1, -2, 3, -4});
    CHECK(dgcf::sum_all(x) == doctest::Approx(-2.0));
    CHECK(dgcf::squared_norm(x) == doctest::Approx(30.0));
    DenseMatrix y(2, 2, {2, 2, 2, 2});
    CHECK(dgcf::dot(x, y) == doctest::Approx(-4.0));
    CHECK(dgcf::euclidean_distance(x, y) == doctest::Approx(std::sqrt(1 + 16 + 1 + 36)));
    CHECK(dgcf::max_abs_diff(x, y) == doctest::Approx(6.0));
}
