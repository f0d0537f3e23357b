#include "dgcf/tensor.hpp"

#include <cmath>
#include <cstdlib>

#include "dgcf/error.hpp"

namespace dgcf {

DenseMatrix::DenseMatrix(int r, int c) : rows(r), cols(c) {
    if (r < 0 || c < 0) throw DimensionError("negative matrix dimension " + std::to_string(r) + "x" + std::to_string(c));
    data.assign(static_cast<size_t>(r) * c, 0.0);
}

DenseMatrix::DenseMatrix(int r, int c, std::initializer_list<double> vals) : DenseMatrix(r, c) {
    if (static_cast<int>(vals.size()) != r * c)
        throw DimensionError("initializer size " + std::to_string(vals.size()) + " does not fill " + shape_str());
    size_t i = 0;
    for (double v : vals) data[i++] = v;
}

DenseMatrix DenseMatrix::identity(int n) {
    DenseMatrix m(n, n);
    for (int i = 0; i < n; ++i) m.at(i, i) = 1.0;
    return m;
}

DenseMatrix DenseMatrix::column(std::initializer_list<double> vals) {
    DenseMatrix m(static_cast<int>(vals.size()), 1);
    size_t i = 0;
    for (double v : vals) m.data[i++] = v;
    return m;
}

bool DenseMatrix::is_finite() const {
    for (double v : data)
        if (!std::isfinite(v)) return false;
    return true;
}

std::string DenseMatrix::shape_str() const {
    return std::to_string(rows) + "x" + std::to_string(cols);
}

bool operator==(const DenseMatrix& a, const DenseMatrix& b) {
    return a.rows == b.rows && a.cols == b.cols && a.data == b.data;
}

namespace {

[[noreturn]] void shape_mismatch(const char* op, const DenseMatrix& a, const DenseMatrix& b) {
    throw DimensionError(std::string(op) + ": lhs " + a.shape_str() + " rhs " + b.shape_str());
}

} // namespace

DenseMatrix matmul(const DenseMatrix& a, const DenseMatrix& b) {
    if (a.cols != b.rows) shape_mismatch("matmul", a, b);
    DenseMatrix out(a.rows, b.cols);
    for (int i = 0; i < a.rows; ++i)
        for (int k = 0; k < a.cols; ++k) {
            const double aik = a.at(i, k);
            for (int j = 0; j < b.cols; ++j) out.at(i, j) += aik * b.at(k, j);
        }
    return out;
}

DenseMatrix matmul_nt(const DenseMatrix& a, const DenseMatrix& b) {
    if (a.cols != b.cols) shape_mismatch("matmul_nt", a, b);
    DenseMatrix out(a.rows, b.rows);
    for (int i = 0; i < a.rows; ++i)
        for (int j = 0; j < b.rows; ++j) {
            double s = 0.0;
            for (int k = 0; k < a.cols; ++k) s += a.at(i, k) * b.at(j, k);
            out.at(i, j) = s;
        }
    return out;
}

DenseMatrix matmul_tn(const DenseMatrix& a, const DenseMatrix& b) {
    if (a.rows != b.rows) shape_mismatch("matmul_tn", a, b);
    DenseMatrix out(a.cols, b.cols);
    for (int k = 0; k < a.rows; ++k)
        for (int i = 0; i < a.cols; ++i) {
            const double aki = a.at(k, i);
            for (int j = 0; j < b.cols; ++j) out.at(i, j) += aki * b.at(k, j);
        }
    return out;
}

DenseMatrix add(const DenseMatrix& a, const DenseMatrix& b) {
    if (!a.same_shape(b)) shape_mismatch("add", a, b);
    DenseMatrix out = a;
    for (size_t i = 0; i < out.data.size(); ++i) out.data[i] += b.data[i];
    return out;
}

DenseMatrix sub(const DenseMatrix& a, const DenseMatrix& b) {
    if (!a.same_shape(b)) shape_mismatch("sub", a, b);
    DenseMatrix out = a;
    for (size_t i = 0; i < out.data.size(); ++i) out.data[i] -= b.data[i];
    return out;
}

DenseMatrix hadamard(const DenseMatrix& a, const DenseMatrix& b) {
    if (!a.same_shape(b)) shape_mismatch("hadamard", a, b);
    DenseMatrix out = a;
    for (size_t i = 0; i < out.data.size(); ++i) out.data[i] *= b.data[i];
    return out;
}

DenseMatrix scale(const DenseMatrix& x, double s) {
    DenseMatrix out = x;
    for (double& v : out.data) v *= s;
    return out;
}

DenseMatrix affine(const DenseMatrix& x, double a, double b) {
    DenseMatrix out = x;
    for (double& v : out.data) v = a * v + b;
    return out;
}

void add_inplace(DenseMatrix& dst, const DenseMatrix& src) {
    if (!dst.same_shape(src)) shape_mismatch("add_inplace", dst, src);
    for (size_t i = 0; i < dst.data.size(); ++i) dst.data[i] += src.data[i];
}

void add_scaled_inplace(DenseMatrix& dst, const DenseMatrix& src, double s) {
    if (!dst.same_shape(src)) shape_mismatch("add_scaled_inplace", dst, src);
    for (size_t i = 0; i < dst.data.size(); ++i) dst.data[i] += s * src.data[i];
}

namespace {

double stable_sigmoid(double x) {
    if (x >= 0.0) return 1.0 / (1.0 + std::exp(-x));
    const double e = std::exp(x);
    return e / (1.0 + e);
}

} // namespace

DenseMatrix apply_activation(Activation f, const DenseMatrix& x, double leaky_slope) {
    if (!x.is_finite()) throw DomainError("activation input contains a non-finite value");
    DenseMatrix out = x;
    switch (f) {
        case Activation::identity:
            break;
        case Activation::sigmoid:
            for (double& v : out.data) v = stable_sigmoid(v);
            break;
        case Activation::tanh:
            for (double& v : out.data) v = std::tanh(v);
            break;
        case Activation::leaky_relu:
            for (double& v : out.data) v = v >= 0.0 ? v : leaky_slope * v;
            break;
    }
    return out;
}

double activation_grad(Activation f, double x, double y, double leaky_slope) {
    switch (f) {
        case Activation::identity: return 1.0;
        case Activation::sigmoid: return y * (1.0 - y);
        case Activation::tanh: return 1.0 - y * y;
        case Activation::leaky_relu: return x >= 0.0 ? 1.0 : leaky_slope;
    }
    return 1.0;
}

DenseMatrix softmax(const DenseMatrix& scores) {
    if (scores.size() == 0) throw DomainError("softmax of an empty vector");
    if (scores.cols != 1) throw DimensionError("softmax expects a column vector, got " + scores.shape_str());
    if (!scores.is_finite()) throw DomainError("softmax input contains a non-finite value");
    double mx = scores.data[0];
    for (double v : scores.data)
        if (v > mx) mx = v;
    DenseMatrix out = scores;
    double total = 0.0;
    for (double& v : out.data) {
        v = std::exp(v - mx);
        total += v;
    }
    for (double& v : out.data) v /= total;
    return out;
}

DenseMatrix concat_rows(const DenseMatrix& a, const DenseMatrix& b) {
    if (a.cols != b.cols) shape_mismatch("concat_rows", a, b);
    DenseMatrix out(a.rows + b.rows, a.cols);
    std::copy(a.data.begin(), a.data.end(), out.data.begin());
    std::copy(b.data.begin(), b.data.end(), out.data.begin() + a.data.size());
    return out;
}

double sum_all(const DenseMatrix& x) {
    double s = 0.0;
    for (double v : x.data) s += v;
    return s;
}

double squared_norm(const DenseMatrix& x) {
    double s = 0.0;
    for (double v : x.data) s += v * v;
    return s;
}

double dot(const DenseMatrix& a, const DenseMatrix& b) {
    if (!a.same_shape(b)) shape_mismatch("dot", a, b);
    double s = 0.0;
    for (size_t i = 0; i < a.data.size(); ++i) s += a.data[i] * b.data[i];
    return s;
}

double euclidean_distance(const DenseMatrix& a, const DenseMatrix& b) {
    if (!a.same_shape(b)) shape_mismatch("euclidean_distance", a, b);
    double s = 0.0;
    for (size_t i = 0; i < a.data.size(); ++i) {
        const double d = a.data[i] - b.data[i];
        s += d * d;
    }
    return std::sqrt(s);
}

double max_abs_diff(const DenseMatrix& a, const DenseMatrix& b) {
    if (!a.same_shape(b)) shape_mismatch("max_abs_diff", a, b);
    double m = 0.0;
    for (size_t i = 0; i < a.data.size(); ++i) m = std::max(m, std::fabs(a.data[i] - b.data[i]));
    return m;
}

const char* activation_name(Activation f) {
    switch (f) {
        case Activation::identity: return "identity";
        case Activation::sigmoid: return "sigmoid";
        case Activation::tanh: return "tanh";
        case Activation::leaky_relu: return "leaky_relu";
    }
    return "identity";
}

} // namespace dgcf
