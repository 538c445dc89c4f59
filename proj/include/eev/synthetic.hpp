// Deterministic synthetic stand-in for the real per-video features and
// 6 Hz emotion labels, reproducing the label pathologies (high-frequency
// noise, sudden drops to zero) the filters are aimed at.
#pragma once

#include <cstdint>
#include <vector>

#include "eev/dataio.hpp"

namespace eev {

struct SyntheticSpec {
    std::size_t n_videos = 1;
    double duration_s = 60.0;
    std::size_t visual_dim = 1536;
    std::size_t audio_dim = 128;
    // Length in seconds of the sliding feature window the labels are
    // computed from; longer windows give smoother labels.
    double label_smoothness = 5.0;
    double noise_amp = 0.0;      // uniform per-sample label noise amplitude
    double dropout_prob = 0.0;   // per-second probability of a zeroed second
    std::uint64_t seed = 0;
};

struct SyntheticVideo {
    FeatureSequence features;   // 6 Hz rows, f32-representable values
    LabelTrack labels;          // observed: clean + noise + dropouts, in [0,1]
    LabelTrack clean_labels;    // noiseless reference
};

// Features are per-dimension AR(1) random walks; clean labels are sigmoids
// of fixed random linear functionals of the windowed feature mean, so the
// labels are learnable from the features by construction. Fully
// deterministic per (spec.seed, video index).
std::vector<SyntheticVideo> generate_synthetic(const SyntheticSpec& spec);

}  // namespace eev
