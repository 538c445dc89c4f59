#include "eev/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>

#include "eev/errors.hpp"

namespace eev {

MomentSummary compute_moments(std::span<const double> x, std::span<const double> y) {
    if (x.size() != y.size()) {
        throw DimensionError("compute_moments: series lengths differ, " +
                             std::to_string(x.size()) + " vs " + std::to_string(y.size()));
    }
    if (x.size() < 2) {
        throw InputError("compute_moments: need at least 2 samples, got " +
                         std::to_string(x.size()));
    }
    MomentSummary m;
    m.n = x.size();
    const double inv_n = 1.0 / static_cast<double>(m.n);
    for (std::size_t i = 0; i < x.size(); ++i) {
        m.mean_x += x[i];
        m.mean_y += y[i];
    }
    m.mean_x *= inv_n;
    m.mean_y *= inv_n;
    for (std::size_t i = 0; i < x.size(); ++i) {
        const double dx = x[i] - m.mean_x;
        const double dy = y[i] - m.mean_y;
        m.var_x += dx * dx;
        m.var_y += dy * dy;
        m.cov_xy += dx * dy;
    }
    m.var_x *= inv_n;
    m.var_y *= inv_n;
    m.cov_xy *= inv_n;
    return m;
}

bool degenerate_variance(double var, double mean) {
    return var <= 1e-24 * std::max(1.0, mean * mean);
}

double ccc_from_moments(const MomentSummary& m) {
    if (degenerate_variance(m.var_x, m.mean_x) || degenerate_variance(m.var_y, m.mean_y)) {
        return 0.0;
    }
    const double md = m.mean_x - m.mean_y;
    return 2.0 * m.cov_xy / (m.var_x + m.var_y + md * md);
}

std::optional<double> pearson(std::span<const double> x, std::span<const double> y) {
    const MomentSummary m = compute_moments(x, y);
    if (degenerate_variance(m.var_x, m.mean_x) || degenerate_variance(m.var_y, m.mean_y)) {
        return std::nullopt;
    }
    const double r = m.cov_xy / std::sqrt(m.var_x * m.var_y);
    return std::clamp(r, -1.0, 1.0);
}

double ccc(std::span<const double> x, std::span<const double> y) {
    return ccc_from_moments(compute_moments(x, y));
}

ScoreReport score_video(const SampledTrack& pred, const SampledTrack& label) {
    if (pred.channels() != 15 || label.channels() != 15) {
        throw DimensionError("score_video: both tracks must have 15 channels, got " +
                             std::to_string(pred.channels()) + " and " +
                             std::to_string(label.channels()));
    }
    std::size_t n = std::min(pred.frames(), label.frames());
    if (pred.frames() != label.frames()) {
        std::fprintf(stderr, "[eev] score_video: truncating %zu/%zu frames to %zu\n",
                     pred.frames(), label.frames(), n);
    }
    if (n < 2) {
        throw InputError("score_video: need at least 2 aligned frames, got " +
                         std::to_string(n));
    }
    ScoreReport report;
    std::vector<double> x(n), y(n);
    for (std::size_t e = 0; e < 15; ++e) {
        for (std::size_t t = 0; t < n; ++t) {
            x[t] = pred.values.at(t, e);
            y[t] = label.values.at(t, e);
        }
        const auto r = pearson(x, y);
        if (r.has_value()) {
            report.per_emotion[e] = *r;
            ++report.n_valid_emotions;
        } else {
            report.per_emotion[e] = 0.0;
        }
        report.per_video_mean += report.per_emotion[e];
    }
    report.per_video_mean /= 15.0;
    return report;
}

double score_dataset(const std::vector<ScoreReport>& reports) {
    if (reports.empty()) {
        throw InputError("score_dataset: empty report list");
    }
    double sum = 0.0;
    for (const ScoreReport& r : reports) sum += r.per_video_mean;
    return sum / static_cast<double>(reports.size());
}

}  // namespace eev
