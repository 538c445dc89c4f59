#include "eev/synthetic.hpp"

#include <algorithm>
#include <cmath>

#include "eev/matrix.hpp"
#include "eev/rng.hpp"

namespace eev {

namespace {

constexpr double kRate = 6.0;  // label grid; features are generated on it too
constexpr double kAr1Coeff = 0.97;
constexpr double kAr1Noise = 0.35;
constexpr double kLabelGain = 2.2;

// AR(1) random walk per feature dimension, quantized to f32 so in-memory
// values match a disk round trip exactly.
Matrix random_walk_features(std::size_t frames, std::size_t dims, Rng& rng) {
    Matrix m(frames, dims);
    for (std::size_t d = 0; d < dims; ++d) {
        double v = rng.normal();
        m.at(0, d) = static_cast<double>(static_cast<float>(v));
        for (std::size_t t = 1; t < frames; ++t) {
            v = kAr1Coeff * v + kAr1Noise * rng.normal();
            m.at(t, d) = static_cast<double>(static_cast<float>(v));
        }
    }
    return m;
}

}  // namespace

std::vector<SyntheticVideo> generate_synthetic(const SyntheticSpec& spec) {
    if (spec.visual_dim == 0 || spec.audio_dim == 0 || spec.n_videos == 0) {
        throw InputError("generate_synthetic: dims and video count must be positive");
    }
    if (spec.duration_s <= 0.0 || spec.label_smoothness <= 0.0) {
        throw InputError("generate_synthetic: durations must be positive");
    }
    if (spec.noise_amp < 0.0 || spec.dropout_prob < 0.0 || spec.dropout_prob > 1.0) {
        throw InputError("generate_synthetic: noise_amp >= 0 and dropout_prob in [0,1]");
    }
    const auto frames = static_cast<std::size_t>(std::llround(spec.duration_s * kRate));
    if (frames < 2) {
        throw InputError("generate_synthetic: duration too short for 2 frames at 6 Hz");
    }
    const std::size_t feat_dim = spec.visual_dim + spec.audio_dim;
    const auto window =
        std::max<std::size_t>(1, static_cast<std::size_t>(std::llround(spec.label_smoothness * kRate)));

    // One label functional per emotion for the whole dataset, so the
    // feature-to-label mapping is learnable across videos; the sigmoid keeps
    // labels in (0,1).
    Matrix weights(15, feat_dim);
    Matrix biases(15, 1);
    {
        Rng label_rng(Rng::mix(spec.seed, 0x1abe1ULL << 40));
        const double w_scale = 1.0 / std::sqrt(static_cast<double>(feat_dim));
        for (std::size_t e = 0; e < 15; ++e) {
            for (std::size_t d = 0; d < feat_dim; ++d) {
                weights.at(e, d) = label_rng.normal() * w_scale;
            }
            biases.at(e, 0) = label_rng.normal() * 0.3;
        }
    }

    std::vector<SyntheticVideo> videos;
    videos.reserve(spec.n_videos);
    for (std::size_t v = 0; v < spec.n_videos; ++v) {
        Rng rng(Rng::mix(spec.seed, v));
        SyntheticVideo video;

        char id[32];
        std::snprintf(id, sizeof(id), "synth%04zu", v);
        video.features.video_id = id;
        video.features.timestamps_ms.resize(frames);
        for (std::size_t t = 0; t < frames; ++t) {
            video.features.timestamps_ms[t] =
                (static_cast<std::int64_t>(t) * 1000 + 3) / 6;  // round(1000 t / 6)
        }
        video.features.visual = random_walk_features(frames, spec.visual_dim, rng);
        video.features.audio = random_walk_features(frames, spec.audio_dim, rng);

        Matrix clean(frames, 15);
        std::vector<double> window_mean(feat_dim);
        for (std::size_t t = 0; t < frames; ++t) {
            const std::size_t begin = t + 1 >= window ? t + 1 - window : 0;
            const double inv_w = 1.0 / static_cast<double>(t - begin + 1);
            std::fill(window_mean.begin(), window_mean.end(), 0.0);
            for (std::size_t s = begin; s <= t; ++s) {
                const double* vis = video.features.visual.row(s);
                const double* aud = video.features.audio.row(s);
                for (std::size_t d = 0; d < spec.visual_dim; ++d) window_mean[d] += vis[d];
                for (std::size_t d = 0; d < spec.audio_dim; ++d) {
                    window_mean[spec.visual_dim + d] += aud[d];
                }
            }
            for (std::size_t e = 0; e < 15; ++e) {
                double act = biases.at(e, 0);
                const double* wrow = weights.row(e);
                for (std::size_t d = 0; d < feat_dim; ++d) {
                    act += wrow[d] * window_mean[d] * inv_w;
                }
                clean.at(t, e) = sigmoid(kLabelGain * act);
            }
        }

        Matrix observed = clean;
        for (std::size_t i = 0; i < observed.size(); ++i) {
            observed.data()[i] += spec.noise_amp * rng.uniform(-1.0, 1.0);
        }
        const std::size_t seconds = (frames + 5) / 6;
        for (std::size_t s = 0; s < seconds; ++s) {
            if (rng.uniform01() >= spec.dropout_prob) continue;
            const std::size_t begin = s * 6;
            const std::size_t end = std::min(frames, begin + 6);
            for (std::size_t t = begin; t < end; ++t) {
                for (std::size_t e = 0; e < 15; ++e) observed.at(t, e) = 0.0;
            }
        }
        for (std::size_t i = 0; i < observed.size(); ++i) {
            observed.data()[i] = std::clamp(observed.data()[i], 0.0, 1.0);
        }

        video.labels.video_id = video.features.video_id;
        video.labels.values = SampledTrack{kRate, 0.0, std::move(observed)};
        video.clean_labels.video_id = video.features.video_id;
        video.clean_labels.values = SampledTrack{kRate, 0.0, std::move(clean)};
        videos.push_back(std::move(video));
    }
    return videos;
}

}  // namespace eev
