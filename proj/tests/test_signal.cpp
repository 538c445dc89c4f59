#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "eev/metrics.hpp"
#include "eev/rng.hpp"
#include "eev/signal.hpp"

using namespace eev;

namespace {

SampledTrack make_track(double rate, std::vector<double> values) {
    const std::size_t n = values.size();
    return SampledTrack{rate, 0.0, Matrix(n, 1, std::move(values))};
}

SampledTrack rand_track(double rate, std::size_t frames, std::size_t channels, Rng& rng,
                        double lo = 0.0, double hi = 1.0) {
    Matrix m(frames, channels);
    for (std::size_t i = 0; i < m.size(); ++i) m.data()[i] = rng.uniform(lo, hi);
    return SampledTrack{rate, 0.0, std::move(m)};
}

}  // namespace

TEST_CASE("segment_clips arithmetic") {
    Rng rng(1);
    SUBCASE("250 samples at 1 Hz, 60 s clips") {
        const auto clips = segment_clips(rand_track(1.0, 250, 2, rng), 60.0);
        REQUIRE(clips.size() == 5);
        for (int i = 0; i < 4; ++i) CHECK(clips[i].frames() == 60);
        CHECK(clips[4].frames() == 10);
        CHECK(clips[1].start_time_s == 60.0);
    }
    SUBCASE("exactly one clip is the identity") {
        const SampledTrack t = rand_track(1.0, 60, 3, rng);
        const auto clips = segment_clips(t, 60.0);
        REQUIRE(clips.size() == 1);
        for (std::size_t i = 0; i < t.values.size(); ++i) {
            CHECK(clips[0].values.data()[i] == t.values.data()[i]);
        }
    }
    SUBCASE("a one-sample remainder is dropped") {
        const auto clips = segment_clips(rand_track(1.0, 61, 1, rng), 60.0);
        REQUIRE(clips.size() == 1);
        CHECK(clips[0].frames() == 60);
    }
    SUBCASE("a two-sample remainder is kept") {
        const auto clips = segment_clips(rand_track(1.0, 62, 1, rng), 60.0);
        REQUIRE(clips.size() == 2);
        CHECK(clips[1].frames() == 2);
    }
    CHECK_THROWS_AS(segment_clips(rand_track(1.0, 10, 1, rng), 0.0), InputError);
}

TEST_CASE("downsample") {
    std::vector<double> v(12);
    for (int i = 0; i < 12; ++i) v[i] = i;
    const SampledTrack t = make_track(6.0, v);

    SUBCASE("6 Hz to 1 Hz keeps every sixth sample") {
        const SampledTrack d = downsample(t, 1.0);
        REQUIRE(d.frames() == 2);
        CHECK(d.values.at(0, 0) == 0.0);
        CHECK(d.values.at(1, 0) == 6.0);
        CHECK(d.rate_hz == 1.0);
    }
    SUBCASE("identity at equal rates") {
        const SampledTrack d = downsample(t, 6.0);
        REQUIRE(d.frames() == 12);
        for (std::size_t i = 0; i < 12; ++i) CHECK(d.values.at(i, 0) == t.values.at(i, 0));
    }
    SUBCASE("non-integer stride is rejected") {
        CHECK_THROWS_AS(downsample(t, 4.0), InputError);
    }
}

TEST_CASE("linear interpolation") {
    SUBCASE("the 1 Hz [0.0, 0.6] segment lands on exact tenths") {
        const SampledTrack out = linear_interpolate(make_track(1.0, {0.0, 0.6}), 6.0);
        REQUIRE(out.frames() == 7);
        for (int k = 0; k <= 6; ++k) {
            CHECK(std::abs(out.values.at(k, 0) - 0.1 * k) <= 1e-15);
        }
        CHECK(out.values.at(0, 0) == 0.0);
        CHECK(out.values.at(6, 0) == 0.6);  // knots are bit-exact
    }
    SUBCASE("affine signals interpolate exactly") {
        std::vector<double> v(10);
        for (int k = 0; k < 10; ++k) v[k] = 0.31 * k - 0.7;
        const SampledTrack out = linear_interpolate(make_track(1.0, v), 6.0);
        REQUIRE(out.frames() == 55);
        for (std::size_t k = 0; k < out.frames(); ++k) {
            const double t = static_cast<double>(k) / 6.0;
            CHECK(std::abs(out.values.at(k, 0) - (0.31 * t - 0.7)) <= 1e-12);
        }
    }
    SUBCASE("identity at equal rates") {
        Rng rng(2);
        const SampledTrack t = rand_track(6.0, 20, 3, rng);
        const SampledTrack out = linear_interpolate(t, 6.0);
        REQUIRE(out.frames() == 20);
        for (std::size_t i = 0; i < t.values.size(); ++i) {
            CHECK(out.values.data()[i] == t.values.data()[i]);
        }
    }
    SUBCASE("downsample of the interpolation is the identity on affine input") {
        std::vector<double> v(8);
        for (int k = 0; k < 8; ++k) v[k] = -0.2 * k + 1.4;
        const SampledTrack t = make_track(1.0, v);
        const SampledTrack down = downsample(linear_interpolate(t, 6.0), 1.0);
        REQUIRE(down.frames() == 8);
        for (int k = 0; k < 8; ++k) CHECK(down.values.at(k, 0) == t.values.at(k, 0));
    }
    SUBCASE("explicit output length clamps past the end") {
        const SampledTrack out = linear_interpolate(make_track(1.0, {0.0, 0.6}), 6.0, 10);
        REQUIRE(out.frames() == 10);
        for (int k = 7; k < 10; ++k) CHECK(out.values.at(k, 0) == 0.6);
    }
    SUBCASE("single-sample track broadcasts") {
        const SampledTrack out = linear_interpolate(make_track(1.0, {0.4}), 6.0, 5);
        for (int k = 0; k < 5; ++k) CHECK(out.values.at(k, 0) == 0.4);
    }
    SUBCASE("downsampling target rejected") {
        CHECK_THROWS_AS(linear_interpolate(make_track(6.0, {0, 1, 2}), 1.0), InputError);
    }
}

TEST_CASE("butterworth design closed forms") {
    SUBCASE("order 1 at half Nyquist: K = tan(pi/4) = 1") {
        const BiquadCoeffs c = butterworth_design(1, 0.5);
        CHECK(c.b0 == doctest::Approx(0.5).epsilon(1e-12));
        CHECK(c.b1 == doctest::Approx(0.5).epsilon(1e-12));
        CHECK(std::abs(c.a1) <= 1e-15);

        std::vector<double> impulse(8, 0.0);
        impulse[0] = 1.0;
        const auto h = iir_pass(c, impulse);
        CHECK(h[0] == doctest::Approx(0.5).epsilon(1e-12));
        CHECK(h[1] == doctest::Approx(0.5).epsilon(1e-12));
        for (int k = 2; k < 8; ++k) CHECK(std::abs(h[k]) <= 1e-15);
    }
    SUBCASE("order 2 kills Nyquist exactly") {
        const BiquadCoeffs c = butterworth_design(2, 0.1);
        const double h_nyquist = (c.b0 - c.b1 + c.b2) / (1.0 - c.a1 + c.a2);
        CHECK(std::abs(h_nyquist) <= 1e-15);
    }
    SUBCASE("invalid parameters rejected") {
        CHECK_THROWS_AS(butterworth_design(3, 0.1), InputError);
        CHECK_THROWS_AS(butterworth_design(2, 0.0), InputError);
        CHECK_THROWS_AS(butterworth_design(2, 1.0), InputError);
    }
}

TEST_CASE("butterworth filter on tracks") {
    Rng rng(3);
    SUBCASE("constant signals pass through") {
        SampledTrack t = rand_track(6.0, 50, 2, rng);
        t.values.fill(0.73);
        for (int order : {1, 2}) {
            const SampledTrack out = butterworth_filter(t, 0.1, order);
            for (std::size_t i = 0; i < out.values.size(); ++i) {
                CHECK(std::abs(out.values.data()[i] - 0.73) <= 1e-9);
            }
        }
    }
    SUBCASE("alternating signal is crushed away from the edges") {
        // The Nyquist-response oracle above says the passband gain there is
        // exactly 0; the odd-reflection edge transient decays within ~15
        // samples at this cutoff, so the bound applies to the interior.
        Matrix m(120, 1);
        for (std::size_t i = 0; i < 120; ++i) m.at(i, 0) = i % 2 == 0 ? 1.0 : -1.0;
        const SampledTrack out =
            butterworth_filter(SampledTrack{6.0, 0.0, std::move(m)}, 0.1, 2);
        for (std::size_t i = 15; i < 105; ++i) {
            CHECK(std::abs(out.values.at(i, 0)) < 0.05);
        }
    }
}

TEST_CASE("median filter") {
    SUBCASE("spike removal by hand") {
        const SampledTrack out = median_filter(make_track(1.0, {1, 9, 1, 1, 1}), 3);
        for (int k = 0; k < 5; ++k) CHECK(out.values.at(k, 0) == 1.0);
    }
    SUBCASE("constants unchanged") {
        const SampledTrack out = median_filter(make_track(1.0, {0.4, 0.4, 0.4, 0.4}), 3);
        for (int k = 0; k < 4; ++k) CHECK(out.values.at(k, 0) == 0.4);
    }
    SUBCASE("monotone interior unchanged") {
        std::vector<double> v(9);
        for (int k = 0; k < 9; ++k) v[k] = 0.1 * k;
        const SampledTrack out = median_filter(make_track(1.0, v), 5);
        for (int k = 2; k < 7; ++k) CHECK(out.values.at(k, 0) == v[k]);
    }
    SUBCASE("even or tiny windows rejected") {
        CHECK_THROWS_AS(median_filter(make_track(1.0, {1, 2, 3}), 4), InputError);
        CHECK_THROWS_AS(median_filter(make_track(1.0, {1, 2, 3}), 1), InputError);
    }
}

TEST_CASE("gaussian filter") {
    SUBCASE("constants unchanged to 1e-12") {
        const SampledTrack g = gaussian_filter(make_track(1.0, std::vector<double>(40, 0.61)), 2.0);
        for (std::size_t k = 0; k < g.frames(); ++k) {
            CHECK(std::abs(g.values.at(k, 0) - 0.61) <= 1e-12);
        }
    }
    SUBCASE("impulse center equals the normalized kernel center") {
        std::vector<double> v(41, 0.0);
        v[20] = 1.0;
        const SampledTrack out = gaussian_filter(make_track(1.0, v), 1.0);
        double z = 0.0;
        for (int k = -4; k <= 4; ++k) z += std::exp(-static_cast<double>(k * k) / 2.0);
        CHECK(out.values.at(20, 0) == doctest::Approx(1.0 / z).epsilon(1e-12));
    }
    SUBCASE("output bounded by input range") {
        Rng rng(4);
        const SampledTrack t = rand_track(6.0, 100, 1, rng, 0.2, 0.9);
        const SampledTrack out = gaussian_filter(t, 3.0);
        for (std::size_t k = 0; k < out.frames(); ++k) {
            CHECK(out.values.at(k, 0) >= 0.2);
            CHECK(out.values.at(k, 0) <= 0.9);
        }
    }
    SUBCASE("bad sigma rejected") {
        CHECK_THROWS_AS(gaussian_filter(make_track(1.0, {1, 2}), 0.0), InputError);
    }
}

TEST_CASE("filters act on channels independently") {
    Rng rng(5);
    const SampledTrack t = rand_track(6.0, 60, 15, rng);
    const SampledTrack whole = gaussian_filter(t, 2.0);
    for (std::size_t c = 0; c < 15; ++c) {
        std::vector<double> chan(t.frames());
        for (std::size_t k = 0; k < t.frames(); ++k) chan[k] = t.values.at(k, c);
        const SampledTrack single = gaussian_filter(make_track(6.0, chan), 2.0);
        for (std::size_t k = 0; k < t.frames(); ++k) {
            CHECK(whole.values.at(k, c) == single.values.at(k, 0));
        }
    }
}

TEST_CASE("gaussian smoothing decorrelates more as sigma grows") {
    double prev = 1.0;
    for (double sigma : {1.0, 2.0, 4.0, 8.0}) {
        double mean_corr = 0.0;
        for (int seed = 0; seed < 8; ++seed) {
            Rng rng(100 + seed);
            const SampledTrack t = rand_track(6.0, 600, 1, rng);
            const SampledTrack f = gaussian_filter(t, sigma);
            std::vector<double> x(600), y(600);
            for (int k = 0; k < 600; ++k) {
                x[k] = t.values.at(k, 0);
                y[k] = f.values.at(k, 0);
            }
            mean_corr += pearson(x, y).value();
        }
        mean_corr /= 8.0;
        CHECK(mean_corr < prev);
        prev = mean_corr;
    }
}
