// On-disk formats: EEVF binary feature files, the label/prediction CSV, and
// EEVM checkpoints. Weights are single precision on disk and double in
// memory; the canonical parameter order lives in model.hpp's param_list.
#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "eev/model.hpp"
#include "eev/signal.hpp"

namespace eev {

struct FeatureSequence {
    std::string video_id;
    std::vector<std::int64_t> timestamps_ms;  // strictly ascending
    Matrix visual;  // T x visual_dim
    Matrix audio;   // T x audio_dim

    std::size_t frames() const { return timestamps_ms.size(); }
};

struct LabelTrack {
    std::string video_id;
    SampledTrack values;  // 15 channels, nominally 6 Hz
};

struct Checkpoint {
    std::uint32_t format_version = 1;
    ModelConfig config;
    std::vector<float> weights;  // canonical parameter order
    std::map<std::string, std::string> training_meta;
};

// EEVF: magic "EEVF", u32 version, u16 id length + UTF-8 id, u32 T,
// u32 visual_dim, u32 audio_dim, then T records of
// (i64 timestamp_ms, visual_dim f32, audio_dim f32). Little-endian.
void write_features(const std::string& path, const FeatureSequence& seq);
FeatureSequence read_features(const std::string& path);

// CSV with header timestamp_ms,e01..e15; values in [0,1] at 6 decimals.
// Also the prediction output format.
void write_labels(const std::string& path, const LabelTrack& track);
LabelTrack read_labels(const std::string& path);

// EEVM: magic "EEVM", u32 version, u32 JSON byte length + UTF-8 JSON
// (config + training_meta), then f32 weights in canonical order.
void save_checkpoint(const std::string& path, const Checkpoint& cp);
Checkpoint load_checkpoint(const std::string& path);

Checkpoint checkpoint_from_params(const ModelParams& params,
                                  std::map<std::string, std::string> training_meta);
// Validates the weight count against the config (IntegrityError).
ModelParams params_from_checkpoint(const Checkpoint& cp);

// Sample rate implied by the timestamps, snapped to the nearest integer Hz
// when within 2%. Requires at least 2 frames.
double feature_rate_hz(const FeatureSequence& seq);

// Modality views as uniformly sampled tracks at the inferred rate.
SampledTrack visual_track(const FeatureSequence& seq);
SampledTrack audio_track(const FeatureSequence& seq);

struct VideoSample {
    FeatureSequence features;
    LabelTrack labels;
};

// Pairs <stem>.eevf with <stem>.csv under dir, sorted by stem.
std::vector<VideoSample> load_dataset(const std::string& dir);

}  // namespace eev
