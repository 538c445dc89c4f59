// Uniformly sampled multi-channel tracks: clip segmentation, rate
// conversion, linear interpolation, and the three low-pass label filters.
#pragma once

#include <span>
#include <vector>

#include "eev/matrix.hpp"

namespace eev {

struct SampledTrack {
    double rate_hz = 0.0;
    double start_time_s = 0.0;
    Matrix values;  // T x channels

    std::size_t frames() const { return values.rows(); }
    std::size_t channels() const { return values.cols(); }
    double time_of(std::size_t k) const { return start_time_s + static_cast<double>(k) / rate_hz; }
};

// Consecutive non-overlapping clips of round(clip_seconds * rate) samples;
// a final partial clip is kept only if it has at least 2 samples.
std::vector<SampledTrack> segment_clips(const SampledTrack& track, double clip_seconds);

// Keeps every stride-th sample starting at index 0; rate/target must be an
// integer stride.
SampledTrack downsample(const SampledTrack& track, double target_hz);

// Resamples to target_hz >= rate_hz over the same time span; exact at
// coincident timestamps and on affine signals.
SampledTrack linear_interpolate(const SampledTrack& track, double target_hz);

// Same, with an explicit output length; samples past the last input time
// clamp to the final input value.
SampledTrack linear_interpolate(const SampledTrack& track, double target_hz,
                                std::size_t out_frames);

// Digital low-pass from the bilinear transform of the analog Butterworth
// prototype; cutoff_norm is a fraction of Nyquist in (0, 1), order 1 or 2.
struct BiquadCoeffs {
    double b0 = 0.0, b1 = 0.0, b2 = 0.0;
    double a1 = 0.0, a2 = 0.0;  // a0 normalized to 1
    int order = 0;
};

BiquadCoeffs butterworth_design(int order, double cutoff_norm);

// Single causal pass, zero initial state (direct form II transposed).
std::vector<double> iir_pass(const BiquadCoeffs& c, std::span<const double> x);

// Zero-phase pass: odd-reflection padding of 3*order at each end,
// steady-state initial conditions, forward then backward.
std::vector<double> filtfilt(const BiquadCoeffs& c, std::span<const double> x);

SampledTrack butterworth_filter(const SampledTrack& track, double cutoff_norm, int order);

// Per-channel sliding median, odd window >= 3, replicate edge padding.
SampledTrack median_filter(const SampledTrack& track, int window);

// Discrete Gaussian kernel truncated at radius ceil(4*sigma), renormalized
// to sum 1, replicate edge padding.
SampledTrack gaussian_filter(const SampledTrack& track, double sigma_samples);

}  // namespace eev
