// Pearson-correlation scoring as the challenge defines it, plus the
// concordance correlation shared with the CCC loss. All moments are
// population moments (1/n).
#pragma once

#include <array>
#include <optional>
#include <span>
#include <vector>

#include "eev/signal.hpp"

namespace eev {

struct MomentSummary {
    double mean_x = 0.0, mean_y = 0.0;
    double var_x = 0.0, var_y = 0.0;
    double cov_xy = 0.0;
    std::size_t n = 0;
};

MomentSummary compute_moments(std::span<const double> x, std::span<const double> y);

// A series is degenerate when its variance is indistinguishable from the
// rounding floor of its own mean; covers exactly-constant columns.
bool degenerate_variance(double var, double mean);

// 2*cov / (var_x + var_y + (mean_x - mean_y)^2); 0 when either side is
// degenerate.
double ccc_from_moments(const MomentSummary& m);

// nullopt when either series has (near-)zero variance; otherwise clamped to
// [-1, 1] against rounding.
std::optional<double> pearson(std::span<const double> x, std::span<const double> y);

double ccc(std::span<const double> x, std::span<const double> y);

struct ScoreReport {
    std::array<double, 15> per_emotion{};
    double per_video_mean = 0.0;
    int n_valid_emotions = 0;
};

// Per-emotion Pearson between two 15-channel tracks; degenerate emotions
// score 0 but stay in the 15-way mean. Tracks longer than each other are
// truncated to the shorter (logged).
ScoreReport score_video(const SampledTrack& pred, const SampledTrack& label);

// Unweighted mean of per_video_mean.
double score_dataset(const std::vector<ScoreReport>& reports);

}  // namespace eev
