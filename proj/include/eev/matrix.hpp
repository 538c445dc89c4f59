// Dense row-major double-precision matrices and the kernels the model is
// built from. OpenMP variants parallelize over output rows; eev::reference
// holds the serial loops they are tested against.
#pragma once

#include <cstddef>
#include <string>
#include <vector>

#include "eev/errors.hpp"

namespace eev {

class Matrix {
public:
    Matrix() = default;
    Matrix(std::size_t rows, std::size_t cols, double fill = 0.0);
    Matrix(std::size_t rows, std::size_t cols, std::vector<double> data);

    static Matrix identity(std::size_t n);

    std::size_t rows() const { return rows_; }
    std::size_t cols() const { return cols_; }
    std::size_t size() const { return data_.size(); }

    double& at(std::size_t r, std::size_t c) { return data_[r * cols_ + c]; }
    double at(std::size_t r, std::size_t c) const { return data_[r * cols_ + c]; }

    double* data() { return data_.data(); }
    const double* data() const { return data_.data(); }
    double* row(std::size_t r) { return data_.data() + r * cols_; }
    const double* row(std::size_t r) const { return data_.data() + r * cols_; }

    bool same_shape(const Matrix& o) const { return rows_ == o.rows_ && cols_ == o.cols_; }
    std::string shape_str() const;

    bool all_finite() const;
    void fill(double v);

private:
    std::size_t rows_ = 0;
    std::size_t cols_ = 0;
    std::vector<double> data_;
};

// Throws DimensionError naming both shapes unless a.cols == b.rows.
Matrix mat_mul(const Matrix& a, const Matrix& b);

// a * b^T without forming the transpose.
Matrix mat_mul_nt(const Matrix& a, const Matrix& b);

// a^T * b without forming the transpose.
Matrix mat_mul_tn(const Matrix& a, const Matrix& b);

// y = W x for a column vector x (cols == 1).
Matrix mat_vec(const Matrix& w, const Matrix& x);

// y = W^T x without forming the transpose.
Matrix mat_tvec(const Matrix& w, const Matrix& x);

// acc += u v^T (u: m-vector, v: n-vector, acc: m x n).
void add_outer(Matrix& acc, const Matrix& u, const Matrix& v);

// acc += m, entrywise.
void add_inplace(Matrix& acc, const Matrix& m);

// acc += s * m, entrywise.
void add_scaled(Matrix& acc, const Matrix& m, double s);

void scale_inplace(Matrix& m, double s);

// m(T x n) += bias(n x 1) on every row.
void add_row_broadcast(Matrix& m, const Matrix& bias);

// Column sums of m(T x n) as an n x 1 vector.
Matrix col_sum(const Matrix& m);

// r-th row of m as a column vector copy.
Matrix row_as_column(const Matrix& m, std::size_t r);

Matrix add(const Matrix& a, const Matrix& b);
Matrix sub(const Matrix& a, const Matrix& b);
Matrix hadamard(const Matrix& a, const Matrix& b);

double sigmoid(double x);
Matrix sigmoid(const Matrix& m);
Matrix tanh(const Matrix& m);

namespace reference {
// Serial loops kept as the oracle for the OpenMP kernels.
Matrix mat_mul(const Matrix& a, const Matrix& b);
}  // namespace reference

}  // namespace eev
