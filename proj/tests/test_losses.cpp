#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "eev/gradcheck.hpp"
#include "eev/losses.hpp"
#include "eev/metrics.hpp"
#include "eev/rng.hpp"

using namespace eev;

namespace {

Matrix rand_mat(std::size_t r, std::size_t c, Rng& rng, double lo, double hi) {
    Matrix m(r, c);
    for (std::size_t i = 0; i < m.size(); ++i) m.data()[i] = rng.uniform(lo, hi);
    return m;
}

}  // namespace

TEST_CASE("l1 loss") {
    Rng rng(1);
    const Matrix p = rand_mat(4, 15, rng, 0.0, 1.0);
    CHECK(l1_loss(p, p).value == 0.0);

    const Matrix pred(1, 2, {0.2, 0.5});
    const Matrix label(1, 2, {0.5, 0.1});
    CHECK(l1_loss(pred, label).value == doctest::Approx(0.35).epsilon(1e-14));
    CHECK(l1_loss(label, pred).value == l1_loss(pred, label).value);

    CHECK_THROWS_AS(l1_loss(pred, Matrix(2, 2)), DimensionError);
}

TEST_CASE("kl loss") {
    Rng rng(2);
    const Matrix p = rand_mat(3, 15, rng, 0.1, 0.9);
    CHECK(kl_loss(p, p).value == doctest::Approx(0.0).epsilon(1e-12));

    SUBCASE("clamp boundary forced by y=1") {
        const double eps = 1e-6;
        const Matrix pred(1, 1, {1.0 - eps});
        const Matrix label(1, 1, {1.0});
        CHECK(kl_loss(pred, label, eps).value ==
              doctest::Approx(std::log(1.0 / (1.0 - eps))).epsilon(1e-9));
    }
    SUBCASE("hand-evaluated Bernoulli term") {
        const Matrix pred(1, 1, {0.25});
        const Matrix label(1, 1, {0.5});
        const double expected = 0.5 * std::log(2.0) + 0.5 * std::log(2.0 / 3.0);
        CHECK(kl_loss(pred, label).value == doctest::Approx(expected).epsilon(1e-12));
        CHECK(kl_loss(pred, label).value == doctest::Approx(0.14384).epsilon(1e-4));
    }
    SUBCASE("bad eps rejected") {
        CHECK_THROWS_AS(kl_loss(p, p, 0.0), InputError);
        CHECK_THROWS_AS(kl_loss(p, p, 0.01), InputError);
    }
    SUBCASE("value stays non-negative") {
        for (int it = 0; it < 50; ++it) {
            const Matrix a = rand_mat(3, 5, rng, 0.0, 1.0);
            const Matrix b = rand_mat(3, 5, rng, 0.0, 1.0);
            CHECK(kl_loss(a, b).value >= 0.0);
        }
    }
}

TEST_CASE("ccc loss") {
    SUBCASE("identical columns contribute zero") {
        Rng rng(3);
        const Matrix p = rand_mat(6, 15, rng, 0.0, 1.0);
        CHECK(ccc_loss(p, p).value == doctest::Approx(0.0).epsilon(1e-12));
    }
    SUBCASE("hand evaluation of the scaled pair") {
        const Matrix x(3, 1, {1, 2, 3});
        const Matrix y(3, 1, {2, 4, 6});
        const LossReport r = ccc_loss(x, y);
        CHECK(r.value == doctest::Approx(1.0 - 4.0 / 11.0).epsilon(1e-12));
    }
    SUBCASE("constant label: contribution 1, zero gradient") {
        const Matrix x(3, 1, {0.1, 0.5, 0.9});
        const Matrix y(3, 1, {0.4, 0.4, 0.4});
        const LossReport r = ccc_loss(x, y);
        CHECK(r.value == 1.0);
        for (std::size_t i = 0; i < r.d_pred.size(); ++i) CHECK(r.d_pred.data()[i] == 0.0);
    }
    SUBCASE("T < 2 rejected") {
        CHECK_THROWS_AS(ccc_loss(Matrix(1, 15), Matrix(1, 15)), InputError);
    }
    SUBCASE("range [0, 2] on random data") {
        Rng rng(4);
        for (int it = 0; it < 50; ++it) {
            const Matrix a = rand_mat(5, 15, rng, 0.0, 1.0);
            const Matrix b = rand_mat(5, 15, rng, 0.0, 1.0);
            const double v = ccc_loss(a, b).value;
            CHECK(v >= 0.0);
            CHECK(v <= 2.0);
        }
    }
}

TEST_CASE("l1 range under [0,1] inputs") {
    Rng rng(5);
    for (int it = 0; it < 50; ++it) {
        const Matrix a = rand_mat(4, 15, rng, 0.0, 1.0);
        const Matrix b = rand_mat(4, 15, rng, 0.0, 1.0);
        const double v = l1_loss(a, b).value;
        CHECK(v >= 0.0);
        CHECK(v <= 1.0);
    }
}

TEST_CASE("ccc loss agrees with the ccc metric") {
    Rng rng(6);
    const Matrix pred = rand_mat(8, 15, rng, 0.0, 1.0);
    const Matrix label = rand_mat(8, 15, rng, 0.0, 1.0);
    const double loss = ccc_loss(pred, label).value;

    double expected = 0.0;
    std::vector<double> x(8), y(8);
    for (std::size_t c = 0; c < 15; ++c) {
        for (std::size_t t = 0; t < 8; ++t) {
            x[t] = pred.at(t, c);
            y[t] = label.at(t, c);
        }
        expected += 1.0 - ccc(x, y);
    }
    expected /= 15.0;
    CHECK(std::abs(loss - expected) <= 1e-12);
}

TEST_CASE("loss gradients agree with central differences") {
    Rng rng(7);
    for (LossKind kind : {LossKind::L1, LossKind::KL, LossKind::CCC}) {
        Matrix pred = rand_mat(5, 6, rng, 0.15, 0.85);
        Matrix label = rand_mat(5, 6, rng, 0.1, 0.9);
        for (std::size_t i = 0; i < pred.size(); ++i) {
            if (std::abs(pred.data()[i] - label.data()[i]) < 1e-4) label.data()[i] += 0.05;
        }
        LossReport report = compute_loss(kind, pred, label);
        auto forward = [&] { return compute_loss(kind, pred, label).value; };
        CHECK(grad_check(forward, {{&pred, &report.d_pred}}, 1e-5) < 1e-4);
    }
}

TEST_CASE("loss kind parsing") {
    CHECK(parse_loss_kind("l1") == LossKind::L1);
    CHECK(parse_loss_kind("kl") == LossKind::KL);
    CHECK(parse_loss_kind("ccc") == LossKind::CCC);
    CHECK_THROWS_AS(parse_loss_kind("huber"), InputError);
    CHECK(loss_kind_name(LossKind::KL) == "kl");
}
