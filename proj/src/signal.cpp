#include "eev/signal.hpp"

#include <algorithm>
#include <cmath>

#include "eev/threading.hpp"

namespace eev {

namespace {

constexpr double kPi = 3.14159265358979323846;

void require_valid(const SampledTrack& t, const char* op) {
    if (t.rate_hz <= 0.0) {
        throw InputError(std::string(op) + ": track rate must be positive, got " +
                         std::to_string(t.rate_hz));
    }
    if (t.frames() == 0 || t.channels() == 0) {
        throw InputError(std::string(op) + ": empty track");
    }
}

std::vector<double> channel_of(const Matrix& m, std::size_t c) {
    std::vector<double> v(m.rows());
    for (std::size_t t = 0; t < m.rows(); ++t) v[t] = m.at(t, c);
    return v;
}

void set_channel(Matrix& m, std::size_t c, const std::vector<double>& v) {
    for (std::size_t t = 0; t < m.rows(); ++t) m.at(t, c) = v[t];
}

// Applies fn to every channel independently; channels are parallel-safe.
template <typename Fn>
SampledTrack per_channel(const SampledTrack& track, Fn&& fn) {
    SampledTrack out = track;
    const int nt = threads();
    const auto channels = static_cast<long long>(track.channels());
#pragma omp parallel for num_threads(nt) if (nt > 1 && channels > 1)
    for (long long c = 0; c < channels; ++c) {
        std::vector<double> x = channel_of(track.values, static_cast<std::size_t>(c));
        set_channel(out.values, static_cast<std::size_t>(c), fn(x));
    }
    return out;
}

}  // namespace

std::vector<SampledTrack> segment_clips(const SampledTrack& track, double clip_seconds) {
    require_valid(track, "segment_clips");
    if (clip_seconds <= 0.0) {
        throw InputError("segment_clips: clip_seconds must be positive");
    }
    const auto clip_len =
        static_cast<std::size_t>(std::max<long long>(1, std::llround(clip_seconds * track.rate_hz)));
    std::vector<SampledTrack> clips;
    const std::size_t T = track.frames();
    for (std::size_t begin = 0; begin < T; begin += clip_len) {
        const std::size_t len = std::min(clip_len, T - begin);
        if (len < clip_len && len < 2) break;  // drop a final 1-sample remainder
        SampledTrack clip;
        clip.rate_hz = track.rate_hz;
        clip.start_time_s = track.start_time_s + static_cast<double>(begin) / track.rate_hz;
        clip.values = Matrix(len, track.channels());
        for (std::size_t t = 0; t < len; ++t) {
            std::copy(track.values.row(begin + t), track.values.row(begin + t) + track.channels(),
                      clip.values.row(t));
        }
        clips.push_back(std::move(clip));
    }
    return clips;
}

SampledTrack downsample(const SampledTrack& track, double target_hz) {
    require_valid(track, "downsample");
    if (target_hz <= 0.0) {
        throw InputError("downsample: target rate must be positive");
    }
    const double ratio = track.rate_hz / target_hz;
    const auto stride = static_cast<std::size_t>(std::llround(ratio));
    if (stride < 1 || std::abs(ratio - static_cast<double>(stride)) > 1e-9) {
        throw InputError("downsample: rate " + std::to_string(track.rate_hz) + " to " +
                         std::to_string(target_hz) + " is not an integer stride");
    }
    const std::size_t T_out = (track.frames() - 1) / stride + 1;
    SampledTrack out;
    out.rate_hz = target_hz;
    out.start_time_s = track.start_time_s;
    out.values = Matrix(T_out, track.channels());
    for (std::size_t k = 0; k < T_out; ++k) {
        const std::size_t src = k * stride;
        std::copy(track.values.row(src), track.values.row(src) + track.channels(),
                  out.values.row(k));
    }
    return out;
}

SampledTrack linear_interpolate(const SampledTrack& track, double target_hz) {
    require_valid(track, "linear_interpolate");
    const double span = static_cast<double>(track.frames() - 1) / track.rate_hz;
    const auto out_frames = static_cast<std::size_t>(std::floor(span * target_hz + 1e-9)) + 1;
    return linear_interpolate(track, target_hz, out_frames);
}

SampledTrack linear_interpolate(const SampledTrack& track, double target_hz,
                                std::size_t out_frames) {
    require_valid(track, "linear_interpolate");
    if (target_hz < track.rate_hz) {
        throw InputError("linear_interpolate: target rate " + std::to_string(target_hz) +
                         " below track rate " + std::to_string(track.rate_hz));
    }
    if (out_frames == 0) {
        throw InputError("linear_interpolate: output length must be positive");
    }
    const std::size_t T = track.frames();
    const std::size_t C = track.channels();
    SampledTrack out;
    out.rate_hz = target_hz;
    out.start_time_s = track.start_time_s;
    out.values = Matrix(out_frames, C);
    for (std::size_t k = 0; k < out_frames; ++k) {
        const double u = static_cast<double>(k) * track.rate_hz / target_hz;
        const auto i0 = static_cast<std::size_t>(u);
        double* orow = out.values.row(k);
        if (i0 >= T - 1) {
            // Past the last input sample: clamp.
            std::copy(track.values.row(T - 1), track.values.row(T - 1) + C, orow);
            continue;
        }
        const double frac = u - static_cast<double>(i0);
        const double* lo = track.values.row(i0);
        const double* hi = track.values.row(i0 + 1);
        for (std::size_t c = 0; c < C; ++c) {
            orow[c] = (1.0 - frac) * lo[c] + frac * hi[c];
        }
    }
    return out;
}

BiquadCoeffs butterworth_design(int order, double cutoff_norm) {
    if (order != 1 && order != 2) {
        throw InputError("butterworth_design: order must be 1 or 2, got " +
                         std::to_string(order));
    }
    if (!(cutoff_norm > 0.0 && cutoff_norm < 1.0)) {
        throw InputError("butterworth_design: cutoff must be in (0, 1), got " +
                         std::to_string(cutoff_norm));
    }
    // Prewarped analog cutoff.
    const double k = std::tan(kPi * cutoff_norm / 2.0);
    BiquadCoeffs c;
    c.order = order;
    if (order == 1) {
        const double d = 1.0 + k;
        c.b0 = k / d;
        c.b1 = k / d;
        c.a1 = (k - 1.0) / d;
    } else {
        const double rt2 = std::sqrt(2.0);
        const double d = 1.0 + rt2 * k + k * k;
        c.b0 = k * k / d;
        c.b1 = 2.0 * c.b0;
        c.b2 = c.b0;
        c.a1 = 2.0 * (k * k - 1.0) / d;
        c.a2 = (1.0 - rt2 * k + k * k) / d;
    }
    return c;
}

namespace {

// Direct form II transposed with explicit initial state (2 slots).
std::vector<double> iir_pass_zi(const BiquadCoeffs& c, std::span<const double> x,
                                double s1, double s2) {
    std::vector<double> y(x.size());
    for (std::size_t m = 0; m < x.size(); ++m) {
        const double ym = c.b0 * x[m] + s1;
        s1 = c.b1 * x[m] - c.a1 * ym + s2;
        s2 = c.b2 * x[m] - c.a2 * ym;
        y[m] = ym;
    }
    return y;
}

// Steady-state step-response state so a constant input produces its DC-gain
// output from the first sample.
void steady_state(const BiquadCoeffs& c, double x0, double& s1, double& s2) {
    const double dc = (c.b0 + c.b1 + c.b2) / (1.0 + c.a1 + c.a2);
    const double u1 = dc - c.b0;
    const double u2 = c.order == 2 ? u1 - c.b1 + c.a1 * dc : 0.0;
    s1 = u1 * x0;
    s2 = u2 * x0;
}

}  // namespace

std::vector<double> iir_pass(const BiquadCoeffs& c, std::span<const double> x) {
    return iir_pass_zi(c, x, 0.0, 0.0);
}

std::vector<double> filtfilt(const BiquadCoeffs& c, std::span<const double> x) {
    const std::size_t n = x.size();
    std::size_t pad = static_cast<std::size_t>(3 * c.order);
    if (pad >= n) pad = n - 1;

    // Odd reflection at both ends.
    std::vector<double> ext;
    ext.reserve(n + 2 * pad);
    for (std::size_t i = pad; i >= 1; --i) ext.push_back(2.0 * x[0] - x[i]);
    ext.insert(ext.end(), x.begin(), x.end());
    for (std::size_t i = 2; i <= pad + 1; ++i) ext.push_back(2.0 * x[n - 1] - x[n - 1 - (i - 1)]);

    double s1 = 0.0, s2 = 0.0;
    steady_state(c, ext.front(), s1, s2);
    std::vector<double> fwd = iir_pass_zi(c, ext, s1, s2);

    std::reverse(fwd.begin(), fwd.end());
    steady_state(c, fwd.front(), s1, s2);
    std::vector<double> bwd = iir_pass_zi(c, fwd, s1, s2);
    std::reverse(bwd.begin(), bwd.end());

    return {bwd.begin() + static_cast<std::ptrdiff_t>(pad),
            bwd.begin() + static_cast<std::ptrdiff_t>(pad + n)};
}

SampledTrack butterworth_filter(const SampledTrack& track, double cutoff_norm, int order) {
    require_valid(track, "butterworth_filter");
    const BiquadCoeffs coeffs = butterworth_design(order, cutoff_norm);
    return per_channel(track, [&](const std::vector<double>& x) { return filtfilt(coeffs, x); });
}

SampledTrack median_filter(const SampledTrack& track, int window) {
    require_valid(track, "median_filter");
    if (window < 3 || window % 2 == 0) {
        throw InputError("median_filter: window must be odd and >= 3, got " +
                         std::to_string(window));
    }
    const std::size_t half = static_cast<std::size_t>(window) / 2;
    return per_channel(track, [&](const std::vector<double>& x) {
        const std::size_t n = x.size();
        std::vector<double> out(n), scratch(static_cast<std::size_t>(window));
        for (std::size_t t = 0; t < n; ++t) {
            for (std::size_t k = 0; k < static_cast<std::size_t>(window); ++k) {
                // Replicate padding at both edges.
                const long long idx = static_cast<long long>(t + k) - static_cast<long long>(half);
                const std::size_t clamped =
                    idx < 0 ? 0 : std::min(static_cast<std::size_t>(idx), n - 1);
                scratch[k] = x[clamped];
            }
            auto mid = scratch.begin() + window / 2;
            std::nth_element(scratch.begin(), mid, scratch.end());
            out[t] = *mid;
        }
        return out;
    });
}

SampledTrack gaussian_filter(const SampledTrack& track, double sigma_samples) {
    require_valid(track, "gaussian_filter");
    if (!(sigma_samples > 0.0)) {
        throw InputError("gaussian_filter: sigma must be positive, got " +
                         std::to_string(sigma_samples));
    }
    const auto radius = static_cast<long long>(std::ceil(4.0 * sigma_samples));
    std::vector<double> kernel(static_cast<std::size_t>(2 * radius + 1));
    double sum = 0.0;
    for (long long k = -radius; k <= radius; ++k) {
        const double w = std::exp(-static_cast<double>(k * k) / (2.0 * sigma_samples * sigma_samples));
        kernel[static_cast<std::size_t>(k + radius)] = w;
        sum += w;
    }
    for (double& w : kernel) w /= sum;

    return per_channel(track, [&](const std::vector<double>& x) {
        const std::size_t n = x.size();
        std::vector<double> out(n, 0.0);
        for (std::size_t t = 0; t < n; ++t) {
            double acc = 0.0;
            for (long long k = -radius; k <= radius; ++k) {
                const long long idx = static_cast<long long>(t) + k;
                const std::size_t clamped =
                    idx < 0 ? 0 : std::min(static_cast<std::size_t>(idx), n - 1);
                acc += kernel[static_cast<std::size_t>(k + radius)] * x[clamped];
            }
            out[t] = acc;
        }
        return out;
    });
}

}  // namespace eev
