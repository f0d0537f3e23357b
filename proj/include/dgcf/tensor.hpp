// Dense row-major matrices over double plus the pure (untracked) kernels the
// autodiff tape builds on. Column vectors are n x 1 matrices throughout.
#pragma once

#include <initializer_list>
#include <string>
#include <vector>

namespace dgcf {

enum class Activation { identity, sigmoid, tanh, leaky_relu };

struct DenseMatrix {
    int rows = 0;
    int cols = 0;
    std::vector<double> data; // row-major, rows*cols entries

    DenseMatrix() = default;
    DenseMatrix(int r, int c); // zero-filled
    DenseMatrix(int r, int c, std::initializer_list<double> vals);

    static DenseMatrix identity(int n);
    static DenseMatrix column(std::initializer_list<double> vals); // n x 1

    double& at(int r, int c) { return data[static_cast<size_t>(r) * cols + c]; }
    double at(int r, int c) const { return data[static_cast<size_t>(r) * cols + c]; }

    int size() const { return rows * cols; }
    bool same_shape(const DenseMatrix& o) const { return rows == o.rows && cols == o.cols; }
    bool is_finite() const;
    std::string shape_str() const; // "3x4"
};

bool operator==(const DenseMatrix& a, const DenseMatrix& b);

// a (m x k) times b (k x n); either operand may have a zero dimension, the
// empty sum then yields zeros.
DenseMatrix matmul(const DenseMatrix& a, const DenseMatrix& b);
DenseMatrix matmul_nt(const DenseMatrix& a, const DenseMatrix& b); // a * b^T
DenseMatrix matmul_tn(const DenseMatrix& a, const DenseMatrix& b); // a^T * b

DenseMatrix add(const DenseMatrix& a, const DenseMatrix& b);
DenseMatrix sub(const DenseMatrix& a, const DenseMatrix& b);
DenseMatrix hadamard(const DenseMatrix& a, const DenseMatrix& b);
DenseMatrix scale(const DenseMatrix& x, double s);
DenseMatrix affine(const DenseMatrix& x, double a, double b); // a*x + b elementwise

void add_inplace(DenseMatrix& dst, const DenseMatrix& src);
void add_scaled_inplace(DenseMatrix& dst, const DenseMatrix& src, double s);

// Rejects non-finite input. leaky_relu uses the given negative slope.
DenseMatrix apply_activation(Activation f, const DenseMatrix& x, double leaky_slope = 0.01);
// dy/dx for one element given the input x and the already computed output y.
double activation_grad(Activation f, double x, double y, double leaky_slope);

// Numerically stable softmax over a column vector (max is subtracted before
// exponentiation). Rejects empty or non-finite input.
DenseMatrix softmax(const DenseMatrix& scores);

// Vertical concatenation; operands must agree on column count.
DenseMatrix concat_rows(const DenseMatrix& a, const DenseMatrix& b);

double sum_all(const DenseMatrix& x);
double squared_norm(const DenseMatrix& x);
double dot(const DenseMatrix& a, const DenseMatrix& b); // same-shape elementwise
double euclidean_distance(const DenseMatrix& a, const DenseMatrix& b);
double max_abs_diff(const DenseMatrix& a, const DenseMatrix& b);

const char* activation_name(Activation f);

} // namespace dgcf
