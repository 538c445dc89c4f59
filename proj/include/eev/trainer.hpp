// Training loop (Adam + global-norm clipping), the three dense-prediction
// strategies, and checkpoint ensembling. Per-clip gradients within a batch
// fan out across threads and reduce in fixed clip order, so any thread
// count reproduces the serial run bit for bit.
#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "eev/dataio.hpp"
#include "eev/losses.hpp"
#include "eev/model.hpp"
#include "eev/signal.hpp"

namespace eev {

// The three ways to produce the dense 6 Hz output: direct 6 Hz windows of
// 60 frames (10 s span), direct 6 Hz windows of 360 frames (60 s span), or
// 1 Hz windows of 60 frames interpolated up to 6 Hz.
enum class PredictionStrategy { Dense6Hz10s, Dense6Hz60s, Sparse1HzInterp };

PredictionStrategy parse_strategy(const std::string& s);
std::string strategy_name(PredictionStrategy s);

// Training sample rate and clip length matching a strategy's windows.
double strategy_sample_rate_hz(PredictionStrategy s);
double strategy_clip_seconds(PredictionStrategy s);

struct TrainConfig {
    LossKind loss_kind = LossKind::L1;
    double learning_rate = 1e-3;
    std::size_t epochs = 0;
    double clip_seconds = 60.0;
    double sample_rate_hz = 1.0;
    std::size_t batch_clips = 8;
    double adam_beta1 = 0.9;
    double adam_beta2 = 0.999;
    double adam_eps = 1e-8;
    double grad_clip_norm = 5.0;
    std::uint64_t seed = 0;
    double validation_fraction = 0.2;
    std::size_t hidden_dim = 256;
    PredictionStrategy validation_strategy = PredictionStrategy::Sparse1HzInterp;
};

struct AdamState {
    ModelParams m, v;
    std::size_t step = 0;

    static AdamState for_params(const ModelParams& params);
};

// Bias-corrected Adam after clipping the global gradient norm at
// cfg.grad_clip_norm. Throws NumericError on non-finite gradients.
void adam_step(ModelParams& params, const ModelParams& grads, AdamState& state,
               const TrainConfig& cfg);

struct TrainHistory {
    std::vector<double> train_loss;    // one entry per epoch
    std::vector<double> val_pearson;   // one entry per epoch
    std::size_t best_epoch = 0;
};

struct TrainResult {
    Checkpoint checkpoint;  // the best validation epoch
    TrainHistory history;
};

TrainResult train(const std::vector<VideoSample>& dataset, const TrainConfig& cfg);

// Dense 6 Hz predictions for one video under the given strategy. Windows
// longer than the video shrink to the video (logged); the GRU state resets
// at every window boundary.
SampledTrack predict_video(const FeatureSequence& features, const ModelParams& params,
                           PredictionStrategy strategy);

// Arithmetic mean per timestamp per emotion; inputs truncate to the
// shortest track (logged).
SampledTrack ensemble(const std::vector<SampledTrack>& predictions);

// CSV: epoch,train_loss,val_pearson,is_best.
void write_history_csv(const std::string& path, const TrainHistory& history);

}  // namespace eev
