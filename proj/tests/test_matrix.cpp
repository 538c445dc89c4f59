#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "eev/gradcheck.hpp"
#include "eev/matrix.hpp"
#include "eev/rng.hpp"
#include "eev/threading.hpp"

using namespace eev;

namespace {

Matrix rand_mat(std::size_t r, std::size_t c, Rng& rng) {
    Matrix m(r, c);
    for (std::size_t i = 0; i < m.size(); ++i) m.data()[i] = rng.uniform(-1.0, 1.0);
    return m;
}

Matrix transpose_of(const Matrix& m) {
    Matrix t(m.cols(), m.rows());
    for (std::size_t i = 0; i < m.rows(); ++i) {
        for (std::size_t j = 0; j < m.cols(); ++j) t.at(j, i) = m.at(i, j);
    }
    return t;
}

double max_abs_diff(const Matrix& a, const Matrix& b) {
    REQUIRE(a.same_shape(b));
    double d = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        d = std::max(d, std::abs(a.data()[i] - b.data()[i]));
    }
    return d;
}

}  // namespace

TEST_CASE("mat_mul identity and zeros") {
    Rng rng(1);
    const Matrix m = rand_mat(3, 4, rng);
    CHECK(max_abs_diff(mat_mul(Matrix::identity(3), m), m) == 0.0);

    const Matrix z(2, 3);
    const Matrix out = mat_mul(z, rand_mat(3, 4, rng));
    CHECK(out.rows() == 2);
    CHECK(out.cols() == 4);
    for (std::size_t i = 0; i < out.size(); ++i) CHECK(out.data()[i] == 0.0);
}

TEST_CASE("mat_mul hand-evaluated product") {
    const Matrix a(2, 2, {1, 2, 3, 4});
    const Matrix b(2, 1, {5, 6});
    const Matrix c = mat_mul(a, b);
    CHECK(c.at(0, 0) == 17.0);
    CHECK(c.at(1, 0) == 39.0);
}

TEST_CASE("mat_mul shape error names both shapes") {
    const Matrix a(2, 3);
    const Matrix b(4, 2);
    try {
        mat_mul(a, b);
        FAIL("expected DimensionError");
    } catch (const DimensionError& e) {
        const std::string msg = e.what();
        CHECK(msg.find("(2x3)") != std::string::npos);
        CHECK(msg.find("(4x2)") != std::string::npos);
    }
}

TEST_CASE("mat_mul associativity on random triples") {
    Rng rng(7);
    for (int it = 0; it < 50; ++it) {
        const auto d1 = 1 + rng.below(8), d2 = 1 + rng.below(8);
        const auto d3 = 1 + rng.below(8), d4 = 1 + rng.below(8);
        const Matrix a = rand_mat(d1, d2, rng);
        const Matrix b = rand_mat(d2, d3, rng);
        const Matrix c = rand_mat(d3, d4, rng);
        const Matrix lhs = mat_mul(mat_mul(a, b), c);
        const Matrix rhs = mat_mul(a, mat_mul(b, c));
        for (std::size_t i = 0; i < lhs.size(); ++i) {
            const double x = lhs.data()[i], y = rhs.data()[i];
            CHECK(std::abs(x - y) <= 1e-9 * std::max(1.0, std::abs(x) + std::abs(y)));
        }
    }
}

TEST_CASE("parallel kernels match the serial reference bit for bit") {
    Rng rng(3);
    const Matrix a = rand_mat(37, 120, rng);
    const Matrix b = rand_mat(120, 33, rng);
    const Matrix ref = reference::mat_mul(a, b);
    for (int nt : {1, 2, 4, 7}) {
        set_threads(nt);
        CHECK(max_abs_diff(mat_mul(a, b), ref) == 0.0);
    }
    set_threads(1);
}

TEST_CASE("transpose-free products agree with explicit transposes") {
    Rng rng(5);
    const Matrix a = rand_mat(6, 9, rng);
    const Matrix b = rand_mat(4, 9, rng);
    CHECK(max_abs_diff(mat_mul_nt(a, b), mat_mul(a, transpose_of(b))) == 0.0);
    const Matrix c = rand_mat(6, 5, rng);
    CHECK(max_abs_diff(mat_mul_tn(a, c), mat_mul(transpose_of(a), c)) == 0.0);
}

TEST_CASE("elementwise ops") {
    CHECK(sigmoid(0.0) == 0.5);
    CHECK(std::tanh(0.0) == 0.0);

    const Matrix a(1, 2, {1, 2});
    const Matrix b(1, 2, {3, 4});
    const Matrix h = hadamard(a, b);
    CHECK(h.at(0, 0) == 3.0);
    CHECK(h.at(0, 1) == 8.0);

    const Matrix s = sub(b, a);
    CHECK(s.at(0, 0) == 2.0);
    CHECK(s.at(0, 1) == 2.0);
    const Matrix p = add(a, b);
    CHECK(p.at(0, 0) == 4.0);
    CHECK(p.at(0, 1) == 6.0);

    CHECK_THROWS_AS(hadamard(a, Matrix(2, 2)), DimensionError);
    CHECK_THROWS_AS(add(a, Matrix(1, 3)), DimensionError);
    CHECK_THROWS_AS(sub(a, Matrix(2, 1)), DimensionError);
}

TEST_CASE("sigmoid and tanh ranges on random inputs") {
    Rng rng(11);
    for (int it = 0; it < 1000; ++it) {
        const double s = sigmoid(rng.uniform(-30.0, 30.0));
        CHECK(s > 0.0);
        CHECK(s < 1.0);
        // tanh saturates to exactly 1.0 in double beyond |x| ~ 19.
        const double t = std::tanh(rng.uniform(-17.0, 17.0));
        CHECK(t > -1.0);
        CHECK(t < 1.0);
    }
}

TEST_CASE("grad_check on a linear layer") {
    Rng rng(7);
    Matrix w = rand_mat(3, 4, rng);
    Matrix x = rand_mat(4, 1, rng);
    // d(sum(Wx))/dW[i][j] = x[j]; d/dx[j] = column sum of W.
    Matrix dw(3, 4), dx(4, 1);
    for (std::size_t i = 0; i < 3; ++i) {
        for (std::size_t j = 0; j < 4; ++j) {
            dw.at(i, j) = x.at(j, 0);
            dx.at(j, 0) += w.at(i, j);
        }
    }
    auto forward = [&] {
        const Matrix y = mat_vec(w, x);
        double s = 0.0;
        for (std::size_t i = 0; i < y.size(); ++i) s += y.data()[i];
        return s;
    };
    const double err = grad_check(forward, {{&w, &dw}, {&x, &dx}}, 1e-5);
    CHECK(err < 1e-6);
}

TEST_CASE("grad_check on a sigmoid layer") {
    Rng rng(9);
    Matrix x = rand_mat(5, 3, rng);
    const Matrix y = sigmoid(x);
    Matrix dx(5, 3);
    for (std::size_t i = 0; i < dx.size(); ++i) {
        dx.data()[i] = y.data()[i] * (1.0 - y.data()[i]);
    }
    auto forward = [&] {
        const Matrix out = sigmoid(x);
        double s = 0.0;
        for (std::size_t i = 0; i < out.size(); ++i) s += out.data()[i];
        return s;
    };
    CHECK(grad_check(forward, {{&x, &dx}}, 1e-5) < 1e-6);
}

TEST_CASE("grad_check rejects non-finite forwards") {
    Matrix x(1, 1, {1.0});
    Matrix dx(1, 1, {1.0});
    auto forward = [&] { return std::log(x.at(0, 0) - 10.0); };  // NaN
    CHECK_THROWS_AS(grad_check(forward, {{&x, &dx}}, 1e-5), NumericError);
}
