#include "eev/matrix.hpp"

#include <cmath>

#include "eev/threading.hpp"

namespace eev {

Matrix::Matrix(std::size_t rows, std::size_t cols, double fill)
    : rows_(rows), cols_(cols), data_(rows * cols, fill) {
    if (rows == 0 || cols == 0) {
        throw DimensionError("matrix dimensions must be positive, got " + shape_str());
    }
}

Matrix::Matrix(std::size_t rows, std::size_t cols, std::vector<double> data)
    : rows_(rows), cols_(cols), data_(std::move(data)) {
    if (rows == 0 || cols == 0) {
        throw DimensionError("matrix dimensions must be positive, got " + shape_str());
    }
    if (data_.size() != rows * cols) {
        throw DimensionError("data length " + std::to_string(data_.size()) +
                             " does not match shape " + shape_str());
    }
}

Matrix Matrix::identity(std::size_t n) {
    Matrix m(n, n);
    for (std::size_t i = 0; i < n; ++i) m.at(i, i) = 1.0;
    return m;
}

std::string Matrix::shape_str() const {
    return "(" + std::to_string(rows_) + "x" + std::to_string(cols_) + ")";
}

bool Matrix::all_finite() const {
    for (double v : data_) {
        if (!std::isfinite(v)) return false;
    }
    return true;
}

void Matrix::fill(double v) {
    for (double& x : data_) x = v;
}

namespace {

void require_same_shape(const Matrix& a, const Matrix& b, const char* op) {
    if (!a.same_shape(b)) {
        throw DimensionError(std::string(op) + ": shape mismatch " + a.shape_str() +
                             " vs " + b.shape_str());
    }
}

}  // namespace

namespace reference {

Matrix mat_mul(const Matrix& a, const Matrix& b) {
    if (a.cols() != b.rows()) {
        throw DimensionError("mat_mul: inner dimensions differ, " + a.shape_str() +
                             " vs " + b.shape_str());
    }
    Matrix out(a.rows(), b.cols());
    const std::size_t n = a.cols();
    for (std::size_t i = 0; i < a.rows(); ++i) {
        const double* arow = a.row(i);
        double* orow = out.row(i);
        for (std::size_t k = 0; k < n; ++k) {
            const double av = arow[k];
            const double* brow = b.row(k);
            for (std::size_t j = 0; j < b.cols(); ++j) {
                orow[j] += av * brow[j];
            }
        }
    }
    return out;
}

}  // namespace reference

Matrix mat_mul(const Matrix& a, const Matrix& b) {
    if (a.cols() != b.rows()) {
        throw DimensionError("mat_mul: inner dimensions differ, " + a.shape_str() +
                             " vs " + b.shape_str());
    }
    Matrix out(a.rows(), b.cols());
    const std::size_t rows = a.rows();
    const std::size_t n = a.cols();
    const std::size_t bc = b.cols();
    const int nt = threads();
    // Each output row is produced by one thread with the serial loop order,
    // so results match eev::reference::mat_mul bit for bit.
#pragma omp parallel for num_threads(nt) if (nt > 1 && rows * n * bc > 32768)
    for (long long ii = 0; ii < static_cast<long long>(rows); ++ii) {
        const auto i = static_cast<std::size_t>(ii);
        const double* arow = a.row(i);
        double* orow = out.row(i);
        for (std::size_t k = 0; k < n; ++k) {
            const double av = arow[k];
            const double* brow = b.row(k);
            for (std::size_t j = 0; j < bc; ++j) {
                orow[j] += av * brow[j];
            }
        }
    }
    return out;
}

Matrix mat_mul_nt(const Matrix& a, const Matrix& b) {
    if (a.cols() != b.cols()) {
        throw DimensionError("mat_mul_nt: inner dimensions differ, " + a.shape_str() +
                             " vs " + b.shape_str() + "^T");
    }
    Matrix out(a.rows(), b.rows());
    const std::size_t rows = a.rows();
    const std::size_t n = a.cols();
    const std::size_t bc = b.rows();
    const int nt = threads();
#pragma omp parallel for num_threads(nt) if (nt > 1 && rows * n * bc > 32768)
    for (long long ii = 0; ii < static_cast<long long>(rows); ++ii) {
        const auto i = static_cast<std::size_t>(ii);
        const double* arow = a.row(i);
        double* orow = out.row(i);
        for (std::size_t j = 0; j < bc; ++j) {
            const double* brow = b.row(j);
            double acc = 0.0;
            for (std::size_t k = 0; k < n; ++k) acc += arow[k] * brow[k];
            orow[j] = acc;
        }
    }
    return out;
}

Matrix mat_mul_tn(const Matrix& a, const Matrix& b) {
    if (a.rows() != b.rows()) {
        throw DimensionError("mat_mul_tn: inner dimensions differ, " + a.shape_str() +
                             "^T vs " + b.shape_str());
    }
    Matrix out(a.cols(), b.cols());
    const std::size_t rows = a.cols();
    const std::size_t n = a.rows();
    const std::size_t bc = b.cols();
    const int nt = threads();
#pragma omp parallel for num_threads(nt) if (nt > 1 && rows * n * bc > 32768)
    for (long long ii = 0; ii < static_cast<long long>(rows); ++ii) {
        const auto i = static_cast<std::size_t>(ii);
        double* orow = out.row(i);
        for (std::size_t t = 0; t < n; ++t) {
            const double av = a.at(t, i);
            const double* brow = b.row(t);
            for (std::size_t j = 0; j < bc; ++j) orow[j] += av * brow[j];
        }
    }
    return out;
}

Matrix mat_vec(const Matrix& w, const Matrix& x) {
    if (x.cols() != 1 || w.cols() != x.rows()) {
        throw DimensionError("mat_vec: incompatible shapes " + w.shape_str() + " vs " +
                             x.shape_str());
    }
    Matrix out(w.rows(), 1);
    const std::size_t rows = w.rows();
    const std::size_t n = w.cols();
    const double* xv = x.data();
    double* ov = out.data();
    const int nt = threads();
#pragma omp parallel for num_threads(nt) if (nt > 1 && rows * n > 65536)
    for (long long ii = 0; ii < static_cast<long long>(rows); ++ii) {
        const auto i = static_cast<std::size_t>(ii);
        const double* wrow = w.row(i);
        double acc = 0.0;
        for (std::size_t j = 0; j < n; ++j) acc += wrow[j] * xv[j];
        ov[i] = acc;
    }
    return out;
}

Matrix mat_tvec(const Matrix& w, const Matrix& x) {
    if (x.cols() != 1 || w.rows() != x.rows()) {
        throw DimensionError("mat_tvec: incompatible shapes " + w.shape_str() + " vs " +
                             x.shape_str());
    }
    Matrix out(w.cols(), 1);
    const std::size_t n = w.cols();
    const double* xv = x.data();
    double* ov = out.data();
    // Fixed row-major accumulation order keeps this deterministic; column
    // parallelism strides badly, so the loop stays serial.
    for (std::size_t i = 0; i < w.rows(); ++i) {
        const double* wrow = w.row(i);
        const double xi = xv[i];
        for (std::size_t j = 0; j < n; ++j) ov[j] += wrow[j] * xi;
    }
    return out;
}

void add_outer(Matrix& acc, const Matrix& u, const Matrix& v) {
    if (u.cols() != 1 || v.cols() != 1 || acc.rows() != u.rows() || acc.cols() != v.rows()) {
        throw DimensionError("add_outer: incompatible shapes " + acc.shape_str() + ", " +
                             u.shape_str() + ", " + v.shape_str());
    }
    const std::size_t m = acc.rows();
    const std::size_t n = acc.cols();
    const double* uv = u.data();
    const double* vv = v.data();
    for (std::size_t i = 0; i < m; ++i) {
        double* arow = acc.row(i);
        const double ui = uv[i];
        for (std::size_t j = 0; j < n; ++j) arow[j] += ui * vv[j];
    }
}

void add_inplace(Matrix& acc, const Matrix& m) {
    require_same_shape(acc, m, "add_inplace");
    double* a = acc.data();
    const double* b = m.data();
    for (std::size_t i = 0; i < acc.size(); ++i) a[i] += b[i];
}

void add_scaled(Matrix& acc, const Matrix& m, double s) {
    require_same_shape(acc, m, "add_scaled");
    double* a = acc.data();
    const double* b = m.data();
    for (std::size_t i = 0; i < acc.size(); ++i) a[i] += s * b[i];
}

void scale_inplace(Matrix& m, double s) {
    double* a = m.data();
    for (std::size_t i = 0; i < m.size(); ++i) a[i] *= s;
}

void add_row_broadcast(Matrix& m, const Matrix& bias) {
    if (bias.cols() != 1 || bias.rows() != m.cols()) {
        throw DimensionError("add_row_broadcast: bias " + bias.shape_str() +
                             " does not match " + m.shape_str());
    }
    const double* bv = bias.data();
    for (std::size_t t = 0; t < m.rows(); ++t) {
        double* row = m.row(t);
        for (std::size_t j = 0; j < m.cols(); ++j) row[j] += bv[j];
    }
}

Matrix col_sum(const Matrix& m) {
    Matrix out(m.cols(), 1);
    double* o = out.data();
    for (std::size_t t = 0; t < m.rows(); ++t) {
        const double* row = m.row(t);
        for (std::size_t j = 0; j < m.cols(); ++j) o[j] += row[j];
    }
    return out;
}

Matrix row_as_column(const Matrix& m, std::size_t r) {
    Matrix out(m.cols(), 1);
    const double* row = m.row(r);
    for (std::size_t j = 0; j < m.cols(); ++j) out.data()[j] = row[j];
    return out;
}

Matrix add(const Matrix& a, const Matrix& b) {
    require_same_shape(a, b, "add");
    Matrix out = a;
    add_inplace(out, b);
    return out;
}

Matrix sub(const Matrix& a, const Matrix& b) {
    require_same_shape(a, b, "sub");
    Matrix out = a;
    double* o = out.data();
    const double* bv = b.data();
    for (std::size_t i = 0; i < out.size(); ++i) o[i] -= bv[i];
    return out;
}

Matrix hadamard(const Matrix& a, const Matrix& b) {
    require_same_shape(a, b, "hadamard");
    Matrix out = a;
    double* o = out.data();
    const double* bv = b.data();
    for (std::size_t i = 0; i < out.size(); ++i) o[i] *= bv[i];
    return out;
}

double sigmoid(double x) {
    if (x >= 0.0) {
        return 1.0 / (1.0 + std::exp(-x));
    }
    const double e = std::exp(x);
    return e / (1.0 + e);
}

Matrix sigmoid(const Matrix& m) {
    Matrix out = m;
    double* o = out.data();
    for (std::size_t i = 0; i < out.size(); ++i) o[i] = sigmoid(o[i]);
    return out;
}

Matrix tanh(const Matrix& m) {
    Matrix out = m;
    double* o = out.data();
    for (std::size_t i = 0; i < out.size(); ++i) o[i] = std::tanh(o[i]);
    return out;
}

}  // namespace eev
